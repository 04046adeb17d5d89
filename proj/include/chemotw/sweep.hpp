#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "hyperbolic.hpp"
#include "io.hpp"
#include "pme.hpp"
#include "slab.hpp"
#include "speed.hpp"

namespace chemotw {

struct SweepPoint {
    double chi = -1.0;
    double nu = 1.0;
    std::optional<double> delta;  // empty: default nu/(2(nu+1))
};

struct SweepSpec {
    std::vector<SweepPoint> points;
    double tol = 1e-8;
    double L = 40.0;
    bool extend = false;          // L-doubling per point
    double line_tol = 1e-4;
    unsigned jobs = 1;
    std::vector<std::string> checks = {"energy_identity", "energy_routes", "oscillation_decay", "exp_decay", "structure",
                                       "holder_l2"};

    /// Throws on the first point that breaks the parameter invariants.
    void validate() const {
        for (std::size_t k = 0; k < points.size(); ++k) {
            const auto& p = points[k];
            WaveParams w{p.chi, p.nu, 0.0, p.delta.value_or(WaveParams::default_delta(p.nu)), L};
            try {
                w.validate();
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument("sweep point " + std::to_string(k) + ": " + e.what());
            }
        }
        static const std::vector<std::string> known = {"energy_identity", "energy_routes", "oscillation_decay",
                                                       "exp_decay", "structure", "holder_l2"};
        for (const auto& c : checks)
            if (std::find(known.begin(), known.end(), c) == known.end()) throw std::invalid_argument("unknown check '" + c + "'");
        if (!(tol > 0.0) || !(L > 0.0)) throw std::invalid_argument("sweep: tol and L must be positive");
    }
};

/// Cartesian product of chi and nu lists.
inline std::vector<SweepPoint> grid_points(const std::vector<double>& chis, const std::vector<double>& nus,
                                           std::optional<double> delta = std::nullopt) {
    std::vector<SweepPoint> out;
    for (double c : chis)
        for (double n : nus) out.push_back({c, n, delta});
    return out;
}

inline Table run_sweep(const SweepSpec& spec) {
    spec.validate();
    Table t;
    t.columns = {"chi", "nu", "delta", "c", "L_final", "residual"};
    for (const auto& c : spec.checks) t.columns.push_back(c);
    t.columns.push_back("status");
    const std::size_t n = spec.points.size();
    t.rows.assign(n, {});
    parallel_for(n, spec.jobs, [&](std::size_t k) {
        const auto& p = spec.points[k];
        const double delta = p.delta.value_or(WaveParams::default_delta(p.nu));
        std::vector<Table::Cell> row = {Table::num(p.chi), Table::num(p.nu), Table::num(delta)};
        const double nan = std::numeric_limits<double>::quiet_NaN();
        try {
            SlabSolution sol;
            double L_final = spec.L;
            if (spec.extend) {
                LineOptions lo;
                lo.L0 = spec.L;
                TravelingWave tw = extend_to_line(p.chi, p.nu, delta, spec.line_tol, lo);
                L_final = tw.L_final;
                sol = std::move(tw.solution);
            } else {
                sol = select_speed(p.chi, p.nu, delta, spec.L, spec.tol).solution;
            }
            row.push_back(Table::num(sol.params.c));
            row.push_back(Table::num(L_final));
            row.push_back(Table::num(sol.residual));
            DiagnosticsInput in{&sol.u, &sol.v, p.chi, p.nu, sol.params.c};
            const DiagnosticsReport rep = run_diagnostics(in);
            for (const auto& name : spec.checks) {
                const CheckResult* c = rep.find(name);
                row.push_back(Table::num(c ? c->measured : nan));
            }
            bool ok = true;
            for (const auto& name : spec.checks)
                if (const CheckResult* c = rep.find(name); c && !c->pass) ok = false;
            row.push_back(Table::txt(ok ? "ok" : "check failed"));
        } catch (const std::exception& e) {
            row.resize(3);
            for (std::size_t j = 3; j + 1 < t.columns.size(); ++j) row.push_back(Table::num(nan));
            row.push_back(Table::txt(std::string("error: ") + e.what()));
        }
        t.rows[k] = std::move(row);
    });
    return t;
}

// ---------------------------------------------------------------------------------------------

struct RegimeRow {
    std::string row;  // "pm", "fkpp", "hyperbolic"
    double chi = 0.0;
    double nu = 0.0;
};

inline std::vector<RegimeRow> default_regime_rows() {
    return {{"pm", -16.0, 1e-3}, {"fkpp", -1.0, 1e-3}, {"hyperbolic", -1e3, 1.0}};
}

struct RegimeResult {
    RegimeRow probe;
    double c = 0.0;
    double c_bar = 0.0;      // c sqrt|chi|
    double predicted = 0.0;  // table expression for c_bar (bracket midpoint for the hyperbolic row)
    double lower = 0.0, upper = 0.0;  // acceptance interval for c_bar
    double deviation = 0.0;  // |c_bar - predicted| / predicted
    bool pass = false;
    std::string status = "ok";
};

inline RegimeResult regime_probe(const RegimeRow& r, double tol = 1e-8, double L = 40.0) {
    RegimeResult out;
    out.probe = r;
    const double s = std::sqrt(std::abs(r.chi));
    try {
        const SpeedSelection sel = select_speed(r.chi, r.nu, WaveParams::default_delta(r.nu), L, tol);
        out.c = sel.c;
        out.c_bar = sel.c * s;
        if (r.row == "pm") {
            out.predicted = s / std::numbers::sqrt2 + std::numbers::sqrt2 / s;
            out.lower = 0.85 * out.predicted;
            out.upper = 1.15 * out.predicted;
        } else if (r.row == "fkpp") {
            out.predicted = 2.0;
            out.lower = 1.8;
            out.upper = 2.2;
        } else if (r.row == "hyperbolic") {
            const double lo = std::sqrt(r.nu) / (2 * r.nu + 1), hi = 1.0 / (2 * std::sqrt(r.nu));
            out.predicted = 0.5 * (lo + hi) * s;
            out.lower = lo * s;
            out.upper = hi * s;
        } else {
            throw std::invalid_argument("unknown regime row '" + r.row + "'");
        }
        out.deviation = std::abs(out.c_bar - out.predicted) / out.predicted;
        out.pass = r.row == "hyperbolic" ? (out.c_bar > out.lower && out.c_bar < out.upper)
                                         : (out.c_bar >= out.lower && out.c_bar <= out.upper);
    } catch (const std::exception& e) {
        out.status = std::string("error: ") + e.what();
    }
    return out;
}

inline Table regime_table(const std::vector<RegimeRow>& rows, double tol = 1e-8, unsigned jobs = 1) {
    std::vector<RegimeResult> res(rows.size());
    parallel_for(rows.size(), jobs, [&](std::size_t k) { res[k] = regime_probe(rows[k], tol); });
    Table t;
    t.columns = {"row", "chi", "nu", "c", "c_bar", "predicted", "lower", "upper", "deviation", "pass", "status"};
    for (const auto& r : res)
        t.rows.push_back({Table::txt(r.probe.row), Table::num(r.probe.chi), Table::num(r.probe.nu), Table::num(r.c),
                          Table::num(r.c_bar), Table::num(r.predicted), Table::num(r.lower), Table::num(r.upper),
                          Table::num(r.deviation), Table::txt(r.pass ? "yes" : "no"), Table::txt(r.status)});
    return t;
}

inline Table report_table(const ConvergenceReport& r, const std::string& param) {
    Table t;
    t.columns = {param, "c", "target", "distance", "uv_sup"};
    if (!r.gaps.empty()) t.columns.push_back("gap");
    t.columns.push_back("status");
    for (std::size_t k = 0; k < r.parameters.size(); ++k) {
        std::vector<Table::Cell> row = {Table::num(r.parameters[k]), Table::num(r.speeds[k]), Table::num(r.target),
                                        Table::num(r.distances[k]), Table::num(r.uv_sup[k])};
        if (!r.gaps.empty()) row.push_back(Table::num(r.gaps[k]));
        row.push_back(Table::txt(r.status[k]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------------------------
// Profile builders

inline ProfileFile profile_of(const SlabSolution& s, const std::string& kind = "slab") {
    ProfileFile p;
    p.kind = kind;
    p.params = {{"chi", s.params.chi}, {"nu", s.params.nu}, {"delta", s.params.delta}, {"c", s.params.c}, {"L", s.params.L},
                {"residual", s.residual}};
    p.provenance = s.initialization;
    p.u = s.u;
    p.v = s.v;
    return p;
}

/// Hyperbolic wave on [-X, X]: u is zero right of the jump; the node at 0 holds the left limit.
inline ProfileFile profile_of(const HypWave& w) {
    ProfileFile p;
    p.kind = "hyperbolic";
    p.params = {{"nu", w.nu}, {"c", w.c}, {"jump", w.jump_value}, {"X", w.X()}, {"fixed_point_gap", w.fixed_point_gap}};
    p.provenance = w.seed;
    const UniformGrid& g = w.v.grid();
    std::vector<double> u(g.size(), 0.0);
    for (std::size_t i = 0; i < w.u_left.size(); ++i) u[i] = w.u_left[i];
    p.u = Field(g, std::move(u));
    p.v = w.v;
    return p;
}

/// Porous-medium profile; the v column repeats u.
inline ProfileFile profile_of(const PmeWave& w) {
    ProfileFile p;
    p.kind = "pme";
    p.params = {{"eps", w.eps}, {"c", w.c}, {"residual", w.residual}};
    if (w.support_edge) p.params["support_edge"] = *w.support_edge;
    p.provenance = w.status;
    p.u = w.u;
    p.v = w.u;
    return p;
}

}  // namespace chemotw

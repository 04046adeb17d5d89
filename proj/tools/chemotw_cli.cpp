// chemotw command line front end.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "chemotw/diagnostics.hpp"
#include "chemotw/hyperbolic.hpp"
#include "chemotw/io.hpp"
#include "chemotw/pme.hpp"
#include "chemotw/speed.hpp"
#include "chemotw/sweep.hpp"

namespace fs = std::filesystem;
using namespace chemotw;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    unsigned jobs = 1;
    double tol = 1e-8;
    boost::property_tree::ptree cfg;
};

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::string tok;
    std::istringstream ss(s);
    while (std::getline(ss, tok, ',')) {
        const auto a = tok.find_first_not_of(" \t"), b = tok.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        const auto v = parse_num(tok.substr(a, b - a + 1));
        if (!v) throw std::invalid_argument("bad number '" + tok + "' in list");
        out.push_back(*v);
    }
    return out;
}

// config value for `key` in [section] unless the flag was given on the command line
template <class T>
void from_config(const Common& c, const std::string& section, const std::string& key, CLI::Option* opt, T& target) {
    if (opt && opt->count() > 0) return;
    if (auto v = c.cfg.get_optional<std::string>(section + "." + key)) {
        if constexpr (std::is_same_v<T, std::string>) {
            target = *v;
        } else if constexpr (std::is_same_v<T, bool>) {
            target = (*v == "true" || *v == "1" || *v == "yes");
        } else {
            const auto x = parse_num(*v);
            if (!x) throw std::invalid_argument("config " + section + "." + key + ": bad number '" + *v + "'");
            target = static_cast<T>(*x);
        }
    }
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void print_report(const DiagnosticsReport& r) {
    for (const auto& c : r.checks) {
        std::cout << c.name << ": " << (c.pass ? "pass" : "FAIL") << " measured=" << fmt_num(c.measured)
                  << " bound=" << fmt_num(c.bound);
        for (const auto& [k, v] : c.values) std::cout << ' ' << k << '=' << fmt_num(v);
        if (!c.note.empty()) std::cout << " (" << c.note << ')';
        std::cout << '\n';
    }
}

Table report_to_table(const DiagnosticsReport& r) {
    Table t;
    t.columns = {"check", "measured", "bound", "pass", "note"};
    for (const auto& c : r.checks)
        t.rows.push_back({Table::txt(c.name), Table::num(c.measured), Table::num(c.bound), Table::txt(c.pass ? "yes" : "no"),
                          Table::txt(c.note)});
    return t;
}

// field restricted to [x_from, x_to] node range
Field slice(const Field& f, std::size_t a, std::size_t b) {
    const UniformGrid& g = f.grid();
    std::vector<double> v(f.values().begin() + static_cast<std::ptrdiff_t>(a), f.values().begin() + static_cast<std::ptrdiff_t>(b) + 1);
    return Field(UniformGrid(g.x(a), g.dx(), b - a + 1), std::move(v));
}

[[noreturn]] void fail(const std::string& command, const std::string& msg, int code) {
    nlohmann::json j = {{"error", msg}, {"command", command}};
    std::cerr << j.dump() << std::endl;
    std::exit(code);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Traveling waves of the parabolic-elliptic chemotaxis system with logistic growth"};
    app.require_subcommand(1);
    Common cm;
    app.add_option("--config", cm.config, "INI file with one section per subcommand")->check(CLI::ExistingFile);
    app.add_option("--out", cm.out, "output directory");
    auto* o_jobs = app.add_option("--jobs", cm.jobs, "worker threads");
    auto* o_tol = app.add_option("--tol", cm.tol, "solver tolerance");

    // solve-tw
    auto* tw = app.add_subcommand("solve-tw", "select the speed on a slab (optionally extend to the line)");
    double chi = -1e4, nu = 1e-2, delta = -1.0, L = 40.0, eps = 0.0, cpme = -1.0, line_tol = 1e-4;
    bool line = false;
    auto* o_chi = tw->add_option("--chi", chi, "chemotactic sensitivity (< 0)");
    auto* o_nu = tw->add_option("--nu", nu, "kernel length scale");
    auto* o_delta = tw->add_option("--delta", delta, "normalization u(0) (default nu/(2(nu+1)))");
    auto* o_L = tw->add_option("--L", L, "slab half-length");
    auto* o_line = tw->add_flag("--line", line, "double L until the wave stabilizes");
    auto* o_ltol = tw->add_option("--line-tol", line_tol, "stabilization tolerance for --line");

    auto* hyp = app.add_subcommand("solve-hyp", "construct the discontinuous hyperbolic wave");
    double hnu = 1.0;
    auto* o_hnu = hyp->add_option("--nu", hnu, "kernel length scale");

    auto* pme = app.add_subcommand("solve-pme", "solve the porous-medium traveling wave");
    auto* o_eps = pme->add_option("--eps", eps, "diffusion ratio eps >= 0");
    auto* o_c = pme->add_option("--c", cpme, "speed (default: minimal speed)");

    auto* ver = app.add_subcommand("verify", "run the diagnostics on a profile file");
    std::string vprofile;
    ver->add_option("--profile", vprofile, "profile file")->required()->check(CLI::ExistingFile);
    bool strict = false;
    ver->add_flag("--strict", strict, "exit with status 3 when a check fails");

    auto* sw = app.add_subcommand("sweep", "parameter sweep with diagnostics");
    std::string s_chis = "-1e4", s_nus = "1e-2", s_points;
    double s_L = 40.0, s_delta = -1.0;
    bool s_extend = false;
    auto* o_schis = sw->add_option("--chi", s_chis, "comma-separated chi values");
    auto* o_snus = sw->add_option("--nu", s_nus, "comma-separated nu values");
    auto* o_sdelta = sw->add_option("--delta", s_delta, "normalization for every point");
    auto* o_sL = sw->add_option("--L", s_L, "slab half-length");
    auto* o_spoints = sw->add_option("--points", s_points, "explicit points 'chi:nu[:delta];...' (overrides the grid)");
    auto* o_sext = sw->add_flag("--extend", s_extend, "extend each point to the line");

    auto* rt = app.add_subcommand("regime-table", "probe the asymptotic regime table");

    auto* lpm = app.add_subcommand("limits-pm", "porous-medium limit study");
    std::string lpm_nus = "0.1,0.01,0.001";
    double lpm_eps = 0.0;
    auto* o_lpmeps = lpm->add_option("--eps", lpm_eps, "eps (0 means |chi| = 1e4)");
    auto* o_lpmnus = lpm->add_option("--nu", lpm_nus, "decreasing nu list");

    auto* lh = app.add_subcommand("limits-hyp", "hyperbolic limit study");
    std::string lh_chis = "-100,-1000,-10000";
    double lh_nu = 1.0;
    auto* o_lhnu = lh->add_option("--nu", lh_nu, "kernel length scale");
    auto* o_lhchis = lh->add_option("--chi", lh_chis, "chi list with increasing |chi|");

    auto* pl = app.add_subcommand("plot", "render profile files to SVG");
    std::vector<std::string> pprofiles;
    std::string pname = "plot.svg";
    pl->add_option("--profile", pprofiles, "profile files")->required()->check(CLI::ExistingFile);
    pl->add_option("--name", pname, "file name inside --out");

    std::string command = "chemotw";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail(command, e.what(), 2);
    }

    try {
        const auto subs = app.get_subcommands();
        command = subs.front()->get_name();
        if (!cm.config.empty()) boost::property_tree::ini_parser::read_ini(cm.config, cm.cfg);
        from_config(cm, "general", "jobs", o_jobs, cm.jobs);
        from_config(cm, "general", "tol", o_tol, cm.tol);
        from_config(cm, command, "tol", o_tol, cm.tol);
        if (cm.jobs == 0) throw std::invalid_argument("--jobs must be positive");
        const fs::path out = cm.out;
        ensure_writable_dir(out);  // before any solve

        if (tw->parsed()) {
            from_config(cm, command, "chi", o_chi, chi);
            from_config(cm, command, "nu", o_nu, nu);
            from_config(cm, command, "delta", o_delta, delta);
            from_config(cm, command, "L", o_L, L);
            from_config(cm, command, "line", o_line, line);
            from_config(cm, command, "line_tol", o_ltol, line_tol);
            const double d = delta > 0 ? delta : WaveParams::default_delta(nu);
            SlabSolution sol;
            std::string kind = "slab";
            if (line) {
                LineOptions lo;
                lo.L0 = L;
                TravelingWave w = extend_to_line(chi, nu, d, line_tol, lo);
                sol = w.solution;
                kind = "line";
                for (const auto& h : w.history)
                    std::cout << "L = " << fmt_num(h.L) << "  c = " << fmt_num(h.c) << "  window distance = " << fmt_num(h.window_distance)
                              << '\n';
            } else {
                sol = select_speed(chi, nu, d, L, cm.tol).solution;
            }
            ProfileFile p = profile_of(sol, kind);
            p.timestamp = utc_now();
            emit_profile(p, out / "tw.profile");
            std::cout << "c = " << fmt_num(sol.params.c) << "\nresidual = " << fmt_num(sol.residual)
                      << "\nprofile = " << (out / "tw.profile").string() << '\n';
        } else if (hyp->parsed()) {
            from_config(cm, command, "nu", o_hnu, hnu);
            const HypWave w = construct_discontinuous_wave(hnu, std::max(cm.tol, 1e-9));
            ProfileFile p = profile_of(w);
            p.timestamp = utc_now();
            emit_profile(p, out / "hyp.profile");
            const auto jc = jump_check(w);
            std::cout << "c = " << fmt_num(w.c) << "\njump = " << fmt_num(w.jump_value) << "\niterations = " << w.iterations
                      << "\njump_error = " << fmt_num(jc.jump_error) << "\nspeed_error = " << fmt_num(jc.speed_error)
                      << "\nprofile = " << (out / "hyp.profile").string() << '\n';
        } else if (pme->parsed()) {
            from_config(cm, command, "eps", o_eps, eps);
            from_config(cm, command, "c", o_c, cpme);
            const double c = cpme >= 0 ? cpme : pm_min_speed(eps);
            if (eps == 0.0 && c != pm_min_speed(0.0)) throw std::invalid_argument("solve-pme: eps = 0 is only available at the minimal speed");
            const PmeWave w = eps == 0.0 ? sharp_pme_wave() : pme_wave_solve(eps, c);
            if (!w.converged) throw std::runtime_error("solve-pme: " + w.status);
            ProfileFile p = profile_of(w);
            p.timestamp = utc_now();
            emit_profile(p, out / "pme.profile");
            std::cout << "c = " << fmt_num(w.c) << "\nresidual = " << fmt_num(w.residual) << "\nstatus = " << w.status
                      << "\nprofile = " << (out / "pme.profile").string() << '\n';
        } else if (ver->parsed()) {
            const ProfileFile p = load_profile(vprofile);
            const double c = p.param("c").value_or(0.0);
            const double pnu = p.param("nu").value_or(0.0);
            DiagnosticsReport rep;
            if (p.kind == "pme") {
                const double e = p.param("eps").value_or(0.0);
                const double r = pme_residual(p.u, c, e, standard_test_set(p.u.grid()));
                rep.checks.push_back({"pme_residual", r, 1e-6, r < 1e-6, {}, "standard bump set"});
            } else {
                DiagnosticsInput in{&p.u, &p.v, std::nullopt, pnu, c};
                if (p.kind == "hyperbolic") {
                    in.zero_beyond = true;
                    in.energy = false;
                } else {
                    in.chi = p.param("chi");
                    if (!in.chi) throw std::runtime_error("verify: profile has no chi");
                }
                rep = run_diagnostics(in);
            }
            print_report(rep);
            save_table(report_to_table(rep), out / "verify.csv", out / "verify.json");
            if (strict && !rep.all_pass()) return 3;
        } else if (sw->parsed()) {
            SweepSpec spec;
            from_config(cm, command, "chi", o_schis, s_chis);
            from_config(cm, command, "nu", o_snus, s_nus);
            from_config(cm, command, "delta", o_sdelta, s_delta);
            from_config(cm, command, "L", o_sL, s_L);
            from_config(cm, command, "points", o_spoints, s_points);
            from_config(cm, command, "extend", o_sext, s_extend);
            if (auto ch = cm.cfg.get_optional<std::string>(command + ".checks")) {
                spec.checks.clear();
                std::istringstream ss(*ch);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    const auto a = tok.find_first_not_of(" \t"), b = tok.find_last_not_of(" \t");
                    if (a != std::string::npos) spec.checks.push_back(tok.substr(a, b - a + 1));
                }
            }
            std::optional<double> dd;
            if (s_delta > 0) dd = s_delta;
            if (!s_points.empty()) {
                std::istringstream ss(s_points);
                std::string item;
                while (std::getline(ss, item, ';')) {
                    if (item.find_first_not_of(" \t") == std::string::npos) continue;
                    std::replace(item.begin(), item.end(), ':', ',');
                    const auto v = parse_list(item);
                    if (v.size() < 2 || v.size() > 3) throw std::invalid_argument("bad sweep point '" + item + "'");
                    spec.points.push_back({v[0], v[1], v.size() == 3 ? std::optional<double>(v[2]) : dd});
                }
            } else {
                spec.points = grid_points(parse_list(s_chis), parse_list(s_nus), dd);
            }
            spec.L = s_L;
            spec.tol = cm.tol;
            spec.extend = s_extend;
            spec.jobs = cm.jobs;
            spec.validate();
            const Table t = run_sweep(spec);
            save_table(t, out / "sweep.csv", out / "sweep.json");
            std::cout << "rows = " << t.rows.size() << "\ncsv = " << (out / "sweep.csv").string() << '\n';
        } else if (rt->parsed()) {
            const Table t = regime_table(default_regime_rows(), cm.tol, cm.jobs);
            save_table(t, out / "regime_table.csv", out / "regime_table.json");
            write_csv(std::cout, t);
        } else if (lpm->parsed()) {
            from_config(cm, command, "eps", o_lpmeps, lpm_eps);
            from_config(cm, command, "nu", o_lpmnus, lpm_nus);
            StudyOptions so;
            so.jobs = cm.jobs;
            so.tol = cm.tol;
            const ConvergenceReport r = pm_limit_study(lpm_eps, parse_list(lpm_nus), so);
            const Table t = report_table(r, "nu");
            save_table(t, out / "limits_pm.csv", out / "limits_pm.json");
            write_csv(std::cout, t);
            std::cout << "verdict = " << (r.verdict ? "yes" : "no") << " (" << r.summary << ")\n";
        } else if (lh->parsed()) {
            from_config(cm, command, "nu", o_lhnu, lh_nu);
            from_config(cm, command, "chi", o_lhchis, lh_chis);
            StudyOptions so;
            so.jobs = cm.jobs;
            so.tol = cm.tol;
            const ConvergenceReport r = hyp_limit_study(lh_nu, parse_list(lh_chis), so);
            const Table t = report_table(r, "chi");
            save_table(t, out / "limits_hyp.csv", out / "limits_hyp.json");
            write_csv(std::cout, t);
            std::cout << "verdict = " << (r.verdict ? "yes" : "no") << " (" << r.summary << ")\n";
        } else if (pl->parsed()) {
            PlotSpec spec;
            for (const auto& path : pprofiles) {
                const ProfileFile p = load_profile(path);
                const std::string stem = fs::path(path).stem().string();
                if (p.kind == "hyperbolic") {
                    // the node at 0 holds the left limit; draw the zero state separately so the jump stays open
                    const std::size_t i0 = p.u.grid().nearest(0.0), n = p.u.size();
                    PlotSeries su{stem + ": u", {slice(p.u, 0, i0)}};
                    if (i0 + 1 < n) su.pieces.push_back(slice(p.u, i0 + 1, n - 1));
                    spec.series.push_back(std::move(su));
                    spec.jump = 0.0;
                } else {
                    spec.series.push_back({stem + ": u", {p.u}});
                }
                if (p.kind != "pme") spec.series.push_back({stem + ": v", {p.v}});
            }
            emit_plot(spec, out / pname);
            std::cout << "svg = " << (out / pname).string() << '\n';
        }
    } catch (const std::exception& e) {
        fail(command, e.what(), 1);
    }
    return 0;
}

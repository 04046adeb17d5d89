#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "grid.hpp"

namespace chemotw {

/// Shortest decimal that reads back to the same double.
inline std::string fmt_num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

/// Strict parse of a whole token.
inline std::optional<double> parse_num(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    const auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e) return std::nullopt;
    return x;
}

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------------------------
// Profile files

constexpr int kProfileVersion = 1;

struct ProfileFile {
    int version = kProfileVersion;
    std::string kind = "slab";  // slab, line, hyperbolic, pme
    std::map<std::string, double> params;  // chi, nu, delta, c, L, eps, jump, ... as present
    std::string provenance;
    std::string timestamp;
    Field u;
    Field v;

    std::optional<double> param(const std::string& k) const {
        auto it = params.find(k);
        if (it == params.end()) return std::nullopt;
        return it->second;
    }
};

class ProfileParseError : public std::runtime_error {
public:
    ProfileParseError(std::size_t line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline void write_profile(std::ostream& os, const ProfileFile& p) {
    if (!(p.u.grid() == p.v.grid())) throw std::invalid_argument("write_profile: u and v must share a grid");
    const UniformGrid& g = p.u.grid();
    os << "# format = chemotw-profile\n";
    os << "# version = " << p.version << "\n";
    os << "# kind = " << p.kind << "\n";
    for (const auto& [k, v] : p.params) os << "# " << k << " = " << fmt17(v) << "\n";
    if (!p.provenance.empty()) os << "# provenance = " << p.provenance << "\n";
    if (!p.timestamp.empty()) os << "# timestamp = " << p.timestamp << "\n";
    os << "# x_min = " << fmt17(g.x_min()) << "\n";
    os << "# dx = " << fmt17(g.dx()) << "\n";
    os << "# rows = " << g.size() << "\n";
    os << "# columns = x u v\n";
    for (std::size_t i = 0; i < g.size(); ++i) os << fmt17(g.x(i)) << ' ' << fmt17(p.u[i]) << ' ' << fmt17(p.v[i]) << '\n';
}

inline void emit_profile(const ProfileFile& p, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_profile(f, p);
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline ProfileFile read_profile(std::istream& is) {
    ProfileFile p;
    std::string line;
    std::size_t ln = 0;
    std::optional<double> x_min, dx;
    std::optional<std::size_t> rows;
    bool seen_format = false, seen_version = false;
    std::vector<double> xs, us, vs;
    std::vector<std::size_t> row_line;
    while (std::getline(is, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!xs.empty()) throw ProfileParseError(ln, "header line after data rows");
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ProfileParseError(ln, "header line without '='");
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t");
                const auto b = s.find_last_not_of(" \t");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(1, eq - 1)), val = trim(line.substr(eq + 1));
            if (key.empty()) throw ProfileParseError(ln, "empty header key");
            if (key == "format") {
                if (val != "chemotw-profile") throw ProfileParseError(ln, "unknown format '" + val + "'");
                seen_format = true;
            } else if (key == "version") {
                const auto v = parse_num(val);
                if (!v || *v != std::floor(*v)) throw ProfileParseError(ln, "bad version '" + val + "'");
                if (static_cast<int>(*v) != kProfileVersion) throw ProfileParseError(ln, "unsupported version " + val);
                p.version = static_cast<int>(*v);
                seen_version = true;
            } else if (key == "kind") {
                p.kind = val;
            } else if (key == "provenance") {
                p.provenance = val;
            } else if (key == "timestamp") {
                p.timestamp = val;
            } else if (key == "columns") {
                if (val != "x u v") throw ProfileParseError(ln, "unexpected columns '" + val + "'");
            } else {
                const auto v = parse_num(val);
                if (!v) throw ProfileParseError(ln, "bad number for '" + key + "': '" + val + "'");
                if (key == "x_min") x_min = v;
                else if (key == "dx") dx = v;
                else if (key == "rows") {
                    if (!(*v >= 1 && *v == std::floor(*v))) throw ProfileParseError(ln, "bad row count '" + val + "'");
                    rows = static_cast<std::size_t>(*v);
                } else {
                    p.params[key] = *v;
                }
            }
            continue;
        }
        if (!seen_format || !seen_version) throw ProfileParseError(ln, "data before format/version header");
        std::istringstream ss(line);
        std::string a, b, c, extra;
        if (!(ss >> a >> b >> c) || (ss >> extra)) throw ProfileParseError(ln, "expected three columns");
        const auto xa = parse_num(a), ub = parse_num(b), vc = parse_num(c);
        if (!xa || !ub || !vc) throw ProfileParseError(ln, "bad number in data row");
        xs.push_back(*xa);
        us.push_back(*ub);
        vs.push_back(*vc);
        row_line.push_back(ln);
    }
    if (!seen_format || !seen_version) throw ProfileParseError(ln, "missing format/version header");
    if (!x_min || !dx || !rows) throw ProfileParseError(ln, "missing grid header (x_min, dx, rows)");
    if (xs.size() != *rows)
        throw ProfileParseError(ln, "row count mismatch: header says " + std::to_string(*rows) + ", found " +
                                        std::to_string(xs.size()));
    UniformGrid g(*x_min, *dx, *rows);
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] != g.x(i)) throw ProfileParseError(row_line[i], "x column is not the declared uniform grid");
    try {
        p.u = Field(g, std::move(us));
        p.v = Field(g, std::move(vs));
    } catch (const std::exception& e) {
        throw ProfileParseError(ln, e.what());
    }
    return p;
}

inline ProfileFile load_profile(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return read_profile(f);
}

// ---------------------------------------------------------------------------------------------
// Tables

struct Table {
    std::vector<std::string> columns;
    // each cell is either a number or text
    struct Cell {
        bool is_text = false;
        double num = 0.0;
        std::string text;
    };
    std::vector<std::vector<Cell>> rows;

    static Cell num(double x) { return {false, x, {}}; }
    static Cell txt(std::string s) { return {true, 0.0, std::move(s)}; }
};

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string o = "\"";
    for (char ch : s) {
        if (ch == '"') o += '"';
        o += ch;
    }
    return o + "\"";
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << csv_escape(t.columns[j]);
    os << '\n';
    for (const auto& r : t.rows) {
        if (r.size() != t.columns.size()) throw std::logic_error("write_csv: ragged row");
        for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << (r[j].is_text ? csv_escape(r[j].text) : fmt_num(r[j].num));
        os << '\n';
    }
}

/// JSON array of row objects with the CSV column order; non-finite numbers become null.
inline void write_json(std::ostream& os, const Table& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json o = nlohmann::ordered_json::object();
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            const auto& c = r[j];
            if (c.is_text) o[t.columns[j]] = c.text;
            else if (std::isfinite(c.num)) o[t.columns[j]] = c.num;
            else o[t.columns[j]] = nullptr;
        }
        arr.push_back(std::move(o));
    }
    os << arr.dump(2) << '\n';
}

inline void save_table(const Table& t, const std::filesystem::path& csv, const std::optional<std::filesystem::path>& json) {
    {
        std::ofstream f(csv, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + csv.string() + " for writing");
        write_csv(f, t);
    }
    if (json) {
        std::ofstream f(*json, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + json->string() + " for writing");
        write_json(f, t);
    }
}

/// Fails early when `dir` cannot hold output files.
inline void ensure_writable_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("output directory not usable: " + dir.string());
    const auto probe = dir / ".chemotw_write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw std::runtime_error("output directory not writable: " + dir.string());
    }
    std::filesystem::remove(probe, ec);
}

// ---------------------------------------------------------------------------------------------
// SVG

struct PlotSeries {
    std::string name;
    std::vector<Field> pieces;  // drawn as separate polylines (gaps between pieces stay open)
};

struct PlotSpec {
    std::vector<PlotSeries> series;
    std::optional<double> jump;  // vertical marker
    std::string title;
};

inline void write_svg(std::ostream& os, const PlotSpec& spec) {
    if (spec.series.empty()) throw std::invalid_argument("emit_plot: no fields");
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : spec.series) {
        if (s.pieces.empty()) throw std::invalid_argument("emit_plot: series '" + s.name + "' is empty");
        for (const auto& f : s.pieces) {
            if (f.size() == 0) throw std::invalid_argument("emit_plot: empty field");
            x0 = std::min(x0, f.grid().x_min());
            x1 = std::max(x1, f.grid().x_max());
            y0 = std::min(y0, f.min());
            y1 = std::max(y1, f.max());
        }
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double W = 800, H = 500, ml = 60, mr = 160, mt = 30, mb = 50;
    auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!spec.title.empty()) os << "<text x=\"" << ml << "\" y=\"20\" font-size=\"14\">" << spec.title << "</text>\n";
    // axes with end labels
    os << "<g stroke=\"black\" stroke-width=\"1\">\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb << "\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\"/>\n";
    os << "</g>\n<g font-size=\"11\" font-family=\"sans-serif\">\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">" << fmt_num(xv) << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\">" << fmt_num(yv) << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">x</text>\n</g>\n";
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const char* col = colours[k % 6];
        for (const auto& f : s.pieces) {
            os << "<polyline class=\"series\" data-name=\"" << s.name << "\" fill=\"none\" stroke=\"" << col
               << "\" stroke-width=\"1.5\" points=\"";
            // thin very long fields to about 4000 vertices
            const std::size_t stride = std::max<std::size_t>(1, f.size() / 4000);
            for (std::size_t i = 0; i < f.size(); i += stride) os << X(f.x(i)) << ',' << Y(f[i]) << ' ';
            if ((f.size() - 1) % stride) os << X(f.x(f.size() - 1)) << ',' << Y(f.back());
            os << "\"/>\n";
        }
        const double ly = mt + 18.0 * k + 10;
        os << "<g class=\"legend\"><line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << col << "\" stroke-width=\"2\"/><text x=\"" << W - mr + 35 << "\" y=\"" << ly + 4
           << "\" font-size=\"12\">" << s.name << "</text></g>\n";
    }
    if (spec.jump) {
        os << "<line class=\"jump\" x1=\"" << X(*spec.jump) << "\" y1=\"" << mt << "\" x2=\"" << X(*spec.jump) << "\" y2=\"" << H - mb
           << "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
    }
    os << "</svg>\n";
}

inline void emit_plot(const PlotSpec& spec, const std::filesystem::path& path) {
    std::ostringstream ss;
    write_svg(ss, spec);  // validate before touching the file
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << ss.str();
}

}  // namespace chemotw

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../displacement.hpp"
#include "../medium.hpp"
#include "../nonlinear.hpp"

namespace nlmedium::io {

using json = nlohmann::ordered_json;

/// Malformed JSON, with a 1-based line and column.
struct ParseError : std::runtime_error {
    int line, column;
    ParseError(const std::string& what, int l, int c) : std::runtime_error(what), line(l), column(c) {}
};

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline json parse_text(const std::string& text, const std::string& origin = "input") {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        auto [l, c] = line_column(text, e.byte);
        throw ParseError(origin + ":" + std::to_string(l) + ":" + std::to_string(c) + ": malformed JSON", l, c);
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json load_json(const std::string& path) { return parse_text(read_file(path), path); }

// ---- numbers ----

inline std::string fmt(double v) {
    if (v == 0.0) return std::signbit(v) ? "-0" : "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Serializes with every floating value at 17 significant digits.
inline void dump_to(const json& j, std::string& out, int indent, int depth) {
    auto nl = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                nl(depth + 1);
                out += json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                dump_to(it.value(), out, indent, depth + 1);
            }
            nl(depth);
            out += '}';
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool flat = std::all_of(j.begin(), j.end(), [](const json& x) { return x.is_primitive(); });
            out += '[';
            bool first = true;
            for (const auto& x : j) {
                if (!first) out += flat ? ", " : ",";
                first = false;
                if (!flat) nl(depth + 1);
                dump_to(x, out, indent, depth + 1);
            }
            if (!flat) nl(depth);
            out += ']';
            return;
        }
        case json::value_t::number_float:
            if (!std::isfinite(j.get<double>())) throw ValidationError("non-finite value in output");
            out += fmt(j.get<double>());
            return;
        default:
            out += j.dump();
    }
}

inline std::string dump(const json& j, int indent = 2) {
    std::string s;
    dump_to(j, s, indent, 0);
    s += '\n';
    return s;
}

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ValidationError("complex value must be a number or [re, im]");
}

inline json to_json(const cmat3& m) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
        json r = json::array();
        for (int k = 0; k < 3; ++k) r.push_back(to_json(m(i, k)));
        rows.push_back(r);
    }
    return rows;
}

inline json to_json(const cvec3& v) {
    json a = json::array();
    for (int i = 0; i < 3; ++i) a.push_back(to_json(v(i)));
    return a;
}

inline json to_json(const Rank4& t) {
    json a = json::array();
    for (std::size_t n = 0; n < 81; ++n) a.push_back(to_json(t[n]));
    return a;
}

// ---- medium ----

inline double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

inline std::vector<double> number_list(const json& j, const char* what) {
    if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array of numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw ValidationError(std::string(what) + " must be an array of numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

inline CouplingSpec coupling_from(const json& j) {
    const std::string type = j.value("type", "zero");
    if (type == "zero") return ZeroCoupling{};
    if (type == "constant") return ConstantCoupling{number_or(j, "nu0", 0.0), number_or(j, "omega_cut", 0.0)};
    if (type == "tabulated") {
        if (!j.contains("grid") || !j.contains("values")) throw ValidationError("tabulated coupling needs grid and values");
        return TabulatedCoupling{number_list(j.at("grid"), "grid"), number_list(j.at("values"), "values")};
    }
    throw ValidationError("unknown coupling type '" + type + "'");
}

inline json to_json(const CouplingSpec& c) {
    if (std::holds_alternative<ConstantCoupling>(c)) {
        const auto& k = std::get<ConstantCoupling>(c);
        return json{{"type", "constant"}, {"nu0", k.nu0}, {"omega_cut", k.omega_cut}};
    }
    if (std::holds_alternative<TabulatedCoupling>(c)) {
        const auto& t = std::get<TabulatedCoupling>(c);
        return json{{"type", "tabulated"}, {"grid", t.grid}, {"values", t.values}};
    }
    return json{{"type", "zero"}};
}

inline MediumParams medium_from(const json& j) {
    if (!j.is_object()) throw ValidationError("medium must be a JSON object");
    MediumParams m;
    m.omega0 = number_or(j, "omega0", m.omega0);
    m.chi_s = number_or(j, "chi_s", m.chi_s);
    m.alpha = number_or(j, "alpha", m.alpha);
    m.rho = number_or(j, "rho", m.rho);
    m.eps0 = number_or(j, "eps0", m.eps0);
    m.mu0 = number_or(j, "mu0", m.mu0);
    m.loop_cutoff = number_or(j, "loop_cutoff", m.loop_cutoff);
    m.ieps = number_or(j, "ieps", m.ieps);
    if (j.contains("g")) {
        if (!j.at("g").is_number_integer()) throw ValidationError("g must be 0 or 1");
        m.g = j.at("g").get<int>();
    }
    if (j.contains("nu")) m.nu_spec = coupling_from(j.at("nu"));
    validate(m);
    return m;
}

inline json to_json(const MediumParams& m) {
    return json{{"omega0", m.omega0}, {"chi_s", m.chi_s}, {"alpha", m.alpha}, {"rho", m.rho},
                {"nu", to_json(m.nu_spec)}, {"g", m.g}, {"eps0", m.eps0}, {"mu0", m.mu0},
                {"loop_cutoff", m.loop_cutoff}, {"ieps", m.ieps}};
}

// ---- lambda ----

inline Rank4 lambda_from(const json& j) {
    if (j.is_object() && j.contains("isotropic")) {
        auto v = number_list(j.at("isotropic"), "isotropic");
        if (v.size() != 3) throw ValidationError("isotropic lambda needs [l1, l2, l3]");
        return lambda_isotropic(v[0], v[1], v[2]);
    }
    if (j.is_object() && j.contains("table")) {
        const json& t = j.at("table");
        if (!t.is_array()) throw ValidationError("lambda table must be an array");
        std::vector<cplx> entries;
        for (const auto& x : t) entries.push_back(complex_from(x));
        return lambda_table(entries);
    }
    throw ValidationError("lambda needs 'isotropic' or 'table'");
}

// ---- combs ----

inline FrequencyComb comb_from(const json& j) {
    const json& lines = j.is_object() ? j.at("lines") : j;
    if (!lines.is_array()) throw ValidationError("comb must be an array of lines");
    FrequencyComb c;
    if (j.is_object()) c.tolerance = number_or(j, "tolerance", 0.0);
    for (const auto& l : lines) {
        if (!l.is_object() || !l.contains("omega") || !l.contains("amp")) throw ValidationError("comb line needs omega and amp");
        const json& a = l.at("amp");
        if (!a.is_array() || a.size() != 3) throw ValidationError("amp must have three components");
        CombLine line;
        line.omega = l.at("omega").get<double>();
        for (int i = 0; i < 3; ++i) line.amp(i) = complex_from(a[static_cast<std::size_t>(i)]);
        c.lines.push_back(line);
    }
    return c;
}

inline json to_json(const FrequencyComb& c) {
    json lines = json::array();
    for (const auto& l : c.lines) lines.push_back(json{{"omega", l.omega}, {"amp", to_json(l.amp)}});
    return lines;
}

// ---- grids ----

struct Grid {
    double start = 0.0, stop = 1.0;
    int points = 2;
};

inline std::vector<double> grid_values(const Grid& g) {
    if (g.points < 1) throw ValidationError("grid needs at least one point");
    if (!(g.stop >= g.start)) throw ValidationError("grid stop must not be below start");
    std::vector<double> v;
    for (int i = 0; i < g.points; ++i)
        v.push_back(g.points == 1 ? g.start : g.start + (g.stop - g.start) * i / (g.points - 1));
    return v;
}

inline std::vector<double> frequencies_from(const json& cfg, const Grid& fallback) {
    if (cfg.contains("frequencies")) {
        auto v = number_list(cfg.at("frequencies"), "frequencies");
        if (v.empty() || !std::is_sorted(v.begin(), v.end())) throw ValidationError("frequencies must be non-empty and sorted");
        return v;
    }
    Grid g = fallback;
    if (cfg.contains("grid")) {
        const json& j = cfg.at("grid");
        g.start = number_or(j, "start", g.start);
        g.stop = number_or(j, "stop", g.stop);
        if (j.contains("points")) g.points = j.at("points").get<int>();
    }
    return grid_values(g);
}

}  // namespace nlmedium::io

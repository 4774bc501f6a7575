#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include <nlmedium/io/config.hpp>
#include <nlmedium/nlmedium.hpp>

using namespace nlmedium;
using io::json;

namespace {

const char* const kUsage =
    "usage: nlmedium <command> [options]\n"
    "commands: chi1, chi3, kk-check, propagators, dyson, wick-dump, displacement, duffing-compare\n"
    "common options: --config PATH --out DIR|FILE --format csv|json --seed N --threads N\n";

const std::vector<std::string> kCommands{"chi1", "chi3", "kk-check", "propagators", "dyson",
                                         "wick-dump", "displacement", "duffing-compare"};

struct Options {
    std::string config, out, format, medium, lambda, in, pattern, omega_grid, mode = "both";
    std::optional<double> k;
    unsigned long long seed = 12345;
    int threads = 1;
    int order = 4;
    int ladder = 0;
    bool prune = false;
    double drive_freq = 0.0, omega = 0.0, w1 = 0.0, w2 = 0.0, w3 = 0.0;
    bool have_w = false;
};

struct Context {
    Options opt;
    json cfg = json::object();
    MediumParams medium;
    Rank4 lam;
    unsigned threads = 1;

    double number(const char* key, double fallback) const { return io::number_or(cfg, key, fallback); }
};

// One emitted artifact in both encodings.
struct Artifact {
    json doc;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string preamble;
};

std::string csv_text(const Artifact& a) {
    std::string s = a.preamble;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
        s += '\n';
    };
    line(a.header);
    for (const auto& r : a.rows) line(r);
    return s;
}

std::vector<std::string> cells(std::initializer_list<double> v) {
    std::vector<std::string> out;
    for (double x : v) out.push_back(io::fmt(x));
    return out;
}

unsigned resolve_threads(int flag) {
    if (const char* env = std::getenv("NLMEDIUM_THREADS"); env && *env) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw ValidationError("NLMEDIUM_THREADS must be a positive integer");
        return static_cast<unsigned>(v);
    }
    if (flag < 1) throw ValidationError("--threads must be positive");
    return static_cast<unsigned>(flag);
}

PlaneWaveContext plane_wave(const Context& c, double omega) {
    PlaneWaveContext p;
    p.k = c.opt.k ? *c.opt.k : c.number("k", 0.0);
    auto vec = [&](const char* key, Eigen::Vector3d fallback) {
        if (!c.cfg.contains(key)) return fallback;
        auto v = io::number_list(c.cfg.at(key), key);
        if (v.size() != 3) throw ValidationError(std::string(key) + " needs three components");
        return Eigen::Vector3d(v[0], v[1], v[2]);
    };
    p.polarization = vec("polarization", p.polarization);
    p.k_direction = vec("k_direction", p.k_direction);
    p.omega = omega;
    validate(p);
    return p;
}

json block_json(const PropagatorMatrix& g) {
    return json{{"AA", io::to_json(g.AA)}, {"AX", io::to_json(g.AX)}, {"XA", io::to_json(g.XA)}, {"XX", io::to_json(g.XX)}};
}

void block_rows(Artifact& a, double omega, const std::string& tag, const PropagatorMatrix& g) {
    const std::pair<const char*, const cmat3*> blocks[] = {{"AA", &g.AA}, {"AX", &g.AX}, {"XA", &g.XA}, {"XX", &g.XX}};
    for (const auto& [name, m] : blocks)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                std::vector<std::string> r{io::fmt(omega), tag, name, std::to_string(i), std::to_string(j)};
                for (auto& s : cells({(*m)(i, j).real(), (*m)(i, j).imag()})) r.push_back(s);
                a.rows.push_back(r);
            }
}

Artifact run_chi1(const Context& c) {
    const auto w = io::frequencies_from(c.cfg, {0.0, 2.5 * c.medium.omega0, 250});
    auto vals = parallel_map(w.size(), c.threads, [&](std::size_t i) { return chi1_scalar(c.medium, w[i]); });
    Artifact a;
    a.header = {"omega", "re_chi1", "im_chi1"};
    json arr = json::array();
    for (std::size_t i = 0; i < w.size(); ++i) {
        a.rows.push_back(cells({w[i], vals[i].real(), vals[i].imag()}));
        arr.push_back(io::to_json(vals[i]));
    }
    a.doc = json{{"command", "chi1"}, {"medium", io::to_json(c.medium)}, {"omega", w}, {"chi1", arr}};
    return a;
}

Artifact run_chi3(const Context& c) {
    std::vector<std::array<double, 3>> quads;
    if (c.opt.have_w) {
        quads.push_back({c.opt.w1, c.opt.w2, c.opt.w3});
    } else if (c.cfg.contains("quadruples")) {
        for (const auto& q : c.cfg.at("quadruples")) {
            auto v = io::number_list(q, "quadruple");
            if (v.size() != 3) throw ValidationError("each quadruple lists [w1, w2, w3]");
            quads.push_back({v[0], v[1], v[2]});
        }
    } else {
        std::mt19937_64 rng(c.opt.seed);
        std::uniform_real_distribution<double> u(0.05 * c.medium.omega0, 0.3 * c.medium.omega0);
        for (int i = 0; i < 5; ++i) quads.push_back({u(rng), u(rng), u(rng)});
    }
    auto tensors = parallel_map(quads.size(), c.threads, [&](std::size_t i) {
        const auto& q = quads[i];
        return chi3(c.medium, c.lam, q[0] - q[1] + q[2], q[0], q[1], q[2]);
    });
    Artifact a;
    a.header = {"w", "w1", "w2", "w3", "a", "b", "c", "d", "re_chi3", "im_chi3"};
    json list = json::array();
    for (std::size_t n = 0; n < quads.size(); ++n) {
        const auto& q = quads[n];
        const double w = q[0] - q[1] + q[2];
        list.push_back(json{{"w", w}, {"w1", q[0]}, {"w2", q[1]}, {"w3", q[2]}, {"chi3", io::to_json(tensors[n])}});
        for (std::size_t k = 0; k < 81; ++k) {
            std::vector<std::string> r = cells({w, q[0], q[1], q[2]});
            for (std::size_t s : {27u, 9u, 3u, 1u}) r.push_back(std::to_string(k / s % 3));
            for (auto& x : cells({tensors[n][k].real(), tensors[n][k].imag()})) r.push_back(x);
            a.rows.push_back(r);
        }
    }
    a.doc = json{{"command", "chi3"}, {"medium", io::to_json(c.medium)}, {"results", list}};
    return a;
}

Artifact run_kk(const Context& c) {
    const auto w = io::frequencies_from(c.cfg, {0.0, 20.0 * c.medium.omega0, 4096});
    check_grid(w);
    auto vals = parallel_map(w.size(), c.threads, [&](std::size_t i) { return chi1_scalar(c.medium, w[i]); });
    std::vector<double> re, im;
    for (auto v : vals) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    Artifact a;
    a.header = {"omega", "re_chi1", "im_chi1", "re_reconstructed"};
    double peak = 0.0;
    for (double x : im) peak = std::max(peak, std::abs(x));
    if (peak == 0.0) {
        const std::string flag = "no absorption; KK trivially satisfied";
        a.preamble = "# " + flag + "\n";
        for (std::size_t i = 0; i < w.size(); ++i) a.rows.push_back(cells({w[i], re[i], im[i], 0.0}));
        a.doc = json{{"command", "kk-check"}, {"status", flag}, {"absorbing", false}};
        return a;
    }
    const auto rec = kk_reconstruct(w, im);
    const std::size_t lo = w.size() / 10, hi = w.size() - w.size() / 10;
    double worst = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
        worst = std::max(worst, std::abs(rec[i] - re[i]) / std::max(std::abs(re[i]), 1e-300));
    for (std::size_t i = 0; i < w.size(); ++i) a.rows.push_back(cells({w[i], re[i], im[i], rec[i]}));
    a.doc = json{{"command", "kk-check"},
                 {"status", worst <= 1e-3 ? "KK closure within 1e-3" : "KK closure above 1e-3"},
                 {"absorbing", true},
                 {"max_relative_error", worst},
                 {"interior", json::array({w[lo], w[hi - 1]})},
                 {"omega", w},
                 {"re_chi1", re},
                 {"re_reconstructed", rec}};
    return a;
}

// "start:stop:points"
std::vector<double> grid_option(const std::string& text) {
    io::Grid g;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> g.start >> c1 >> g.stop >> c2 >> g.points) || c1 != ':' || c2 != ':' || !in.eof())
        throw ValidationError("--omega-grid expects start:stop:points");
    return io::grid_values(g);
}

Artifact run_propagators(const Context& c) {
    auto w = io::frequencies_from(c.cfg, {0.1 * c.medium.omega0, 2.0 * c.medium.omega0, 20});
    if (!c.opt.omega_grid.empty()) w = grid_option(c.opt.omega_grid);
    auto blocks = parallel_map(w.size(), c.threads, [&](std::size_t i) {
        return tree_propagators(c.medium, plane_wave(c, w[i]));
    });
    Artifact a;
    a.header = {"omega", "kind", "block", "i", "j", "re", "im"};
    json list = json::array();
    for (std::size_t i = 0; i < w.size(); ++i) {
        json e = block_json(blocks[i]);
        e["omega"] = w[i];
        list.push_back(e);
        block_rows(a, w[i], "tree", blocks[i]);
    }
    a.doc = json{{"command", "propagators"}, {"k", c.opt.k ? *c.opt.k : c.number("k", 0.0)}, {"propagators", list}};
    return a;
}

Artifact run_dyson(const Context& c) {
    const double omega = c.opt.omega != 0.0 ? c.opt.omega : c.number("omega", 0.5 * c.medium.omega0);
    LoopQuadrature q;
    if (c.cfg.contains("loop")) {
        const json& l = c.cfg.at("loop");
        if (l.contains("n_points")) q.n_points = l.at("n_points").get<int>();
        q.cutoff = io::number_or(l, "cutoff", q.cutoff);
    }
    const PlaneWaveContext ctx = plane_wave(c, omega);
    const SelfEnergy se = self_energy(c.medium, c.lam, omega, q, ctx);
    const PropagatorMatrix g0 = tree_propagators(c.medium, ctx);
    const DysonResult d = dyson_dress(g0, se.value);
    Artifact a;
    a.header = {"omega", "kind", "block", "i", "j", "re", "im"};
    block_rows(a, omega, "tree", g0);
    const bool single = c.opt.mode != "resummed", resummed = c.opt.mode != "single";
    if (single) block_rows(a, omega, "single", d.single);
    if (resummed) block_rows(a, omega, "resummed", d.resummed);
    a.preamble = "# Pi error estimate " + io::fmt(se.error_estimate) + "\n";
    a.doc = json{{"command", "dyson"},
                 {"omega", omega},
                 {"Pi", io::to_json(se.value)},
                 {"error_estimate", se.error_estimate},
                 {"discretization_error", se.discretization_error},
                 {"cutoff_error", se.cutoff_error},
                 {"tree", block_json(g0)}};
    if (single) a.doc["single"] = block_json(d.single);
    if (resummed) a.doc["resummed"] = block_json(d.resummed);
    return a;
}

std::vector<Leg> parse_pattern(const std::string& text, int order) {
    std::vector<Leg> pat;
    if (text.empty()) {
        for (int i = 0; i < order; ++i) pat.push_back(i % 2 ? Leg::Star : Leg::Plain);
        return pat;
    }
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        if (tok == "f") pat.push_back(Leg::Plain);
        else if (tok == "f*") pat.push_back(Leg::Star);
        else throw ValidationError("pattern entries must be f or f*");
    }
    return pat;
}

Artifact run_wick(const Context& c) {
    const int order = c.opt.order;
    const auto pat = parse_pattern(c.opt.pattern, order);
    auto terms = derivative_terms(order, pat);
    std::vector<int> constraint;
    for (Leg l : pat) constraint.push_back(l == Leg::Plain ? 1 : -1);
    if (c.opt.prune) terms = prune_vacuum_bubbles(terms, constraint);
    Artifact a;
    a.header = {"term", "insertions", "contractions", "power", "vacuum_bubble"};
    json list = json::array(), pj = json::array();
    for (Leg l : pat) pj.push_back(l == Leg::Plain ? "f" : "f*");
    for (std::size_t n = 0; n < terms.size(); ++n) {
        const auto& t = terms[n];
        json ins = json::array(), con = json::array();
        std::string is, cs;
        for (const auto& i : t.insertions) {
            ins.push_back(json{{"kind", i.kind == Leg::Plain ? "f" : "f*"}, {"slot", i.slot}, {"index", i.tensor_index}});
            is += (is.empty() ? "" : " ") + std::string(i.kind == Leg::Plain ? "f" : "f*") + std::to_string(i.slot);
        }
        for (const auto& k : t.contractions) {
            con.push_back(json::array({k.plain_slot, k.star_slot}));
            cs += (cs.empty() ? "" : " ") + std::to_string(k.plain_slot) + "-" + std::to_string(k.star_slot);
        }
        const bool bubble = is_vacuum_bubble(t, constraint);
        list.push_back(json{{"insertions", ins},
                            {"contractions", con},
                            {"prefactor", json{{"num", t.prefactor.num}, {"den", t.prefactor.den}, {"power", t.prefactor.power}}},
                            {"vacuum_bubble", bubble}});
        a.rows.push_back({std::to_string(n), is, cs, std::to_string(t.prefactor.power), bubble ? "true" : "false"});
    }
    a.doc = json{{"command", "wick-dump"}, {"order", order}, {"pattern", pj}, {"pruned", c.opt.prune}, {"terms", list}};
    return a;
}

Artifact run_displacement(const Context& c) {
    FrequencyComb E;
    if (!c.opt.in.empty()) E = io::comb_from(io::load_json(c.opt.in));
    else if (c.cfg.contains("comb")) E = io::comb_from(c.cfg.at("comb"));
    else throw ValidationError("displacement needs --in or a 'comb' entry");
    const FrequencyComb D = displacement(E, c.medium, c.lam);
    Artifact a;
    a.header = {"omega", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z"};
    for (const auto& l : D.lines)
        a.rows.push_back(cells({l.omega, l.amp(0).real(), l.amp(0).imag(), l.amp(1).real(), l.amp(1).imag(),
                                l.amp(2).real(), l.amp(2).imag()}));
    a.doc = io::to_json(D);
    return a;
}

Artifact run_duffing(const Context& c) {
    LadderSettings s;
    s.threads = c.threads;
    s.ladder = c.opt.ladder > 0 ? c.opt.ladder : static_cast<int>(c.number("ladder", 5));
    s.base_amp = c.number("base_amp", s.base_amp);
    s.steps_per_period = static_cast<int>(c.number("steps_per_period", s.steps_per_period));
    s.periods = static_cast<int>(c.number("periods", s.periods));
    const double wd = c.opt.drive_freq > 0.0 ? c.opt.drive_freq : c.number("drive_freq", 0.2 * c.medium.omega0);
    const DuffingReport r = compare_chi3(c.medium, c.lam, wd, s);
    const cplx ratio = r.measured_ratio / r.reference_ratio;
    Artifact a;
    a.header = {"drive_amp", "abs_a1", "abs_a3"};
    for (std::size_t i = 0; i < r.drive_amps.size(); ++i) a.rows.push_back(cells({r.drive_amps[i], r.a1_abs[i], r.a3_abs[i]}));
    a.preamble = "# exponent " + io::fmt(r.exponent) + " ratio " + io::fmt(std::abs(ratio)) + "\n";
    a.doc = json{{"command", "duffing-compare"},
                 {"exponent", r.exponent},
                 {"ratio", io::to_json(ratio)},
                 {"tolerance_pass", r.tolerance_pass},
                 {"r_squared", r.r_squared},
                 {"measured_ratio", io::to_json(r.measured_ratio)},
                 {"reference_ratio", io::to_json(r.reference_ratio)},
                 {"displacement_ratio", io::to_json(r.displacement_ratio)},
                 {"ratio_to_displacement", r.ratio_to_displacement},
                 {"energy_balance_error", r.worst_energy_error},
                 {"drive_freq", wd},
                 {"drive_amps", r.drive_amps},
                 {"abs_a1", r.a1_abs},
                 {"abs_a3", r.a3_abs}};
    return a;
}

void emit(const std::string& command, const Options& opt, const Artifact& a) {
    std::string format = opt.format;
    if (format.empty()) format = (command == "chi1" || command == "kk-check") ? "csv" : "json";
    if (format != "csv" && format != "json") throw ValidationError("--format must be csv or json");
    const std::string text = format == "csv" ? csv_text(a) : io::dump(a.doc);
    if (opt.out.empty()) {
        std::cout << text;
        return;
    }
    namespace fs = std::filesystem;
    fs::path p(opt.out);
    if (p.extension() != ".json" && p.extension() != ".csv") p /= command + "." + format;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + p.string());
    f << text;
}

int dispatch(const std::string& command, Options opt) {
    Context c;
    c.opt = opt;
    c.threads = resolve_threads(opt.threads);
    if (!opt.config.empty()) {
        c.cfg = io::load_json(opt.config);
        if (!c.cfg.is_object()) throw ValidationError("config must be a JSON object");
    }
    if (!opt.medium.empty()) c.medium = io::medium_from(io::load_json(opt.medium));
    else if (c.cfg.contains("medium")) c.medium = io::medium_from(c.cfg.at("medium"));
    if (!opt.lambda.empty()) c.lam = io::lambda_from(io::load_json(opt.lambda));
    else if (c.cfg.contains("lambda")) c.lam = io::lambda_from(c.cfg.at("lambda"));
    validate(c.medium);

    Artifact a;
    if (command == "chi1") a = run_chi1(c);
    else if (command == "chi3") a = run_chi3(c);
    else if (command == "kk-check") a = run_kk(c);
    else if (command == "propagators") a = run_propagators(c);
    else if (command == "dyson") a = run_dyson(c);
    else if (command == "wick-dump") a = run_wick(c);
    else if (command == "displacement") a = run_displacement(c);
    else a = run_duffing(c);
    emit(command, opt, a);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2 || std::find(kCommands.begin(), kCommands.end(), argv[1]) == kCommands.end()) {
        if (argc >= 2 && (std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h")) {
            std::cout << kUsage;
            return 0;
        }
        std::cerr << (argc >= 2 ? "unknown command '" + std::string(argv[1]) + "'\n" : std::string()) << kUsage;
        return 64;
    }
    const std::string command = argv[1];
    Options opt;
    CLI::App app{"nlmedium " + command};
    app.add_option("--config", opt.config, "JSON run configuration");
    app.add_option("--out", opt.out, "output directory or file");
    app.add_option("--format", opt.format, "csv or json");
    app.add_option("--seed", opt.seed, "seed for randomized inputs");
    app.add_option("--threads", opt.threads, "worker threads (NLMEDIUM_THREADS overrides)");
    app.add_option("--medium", opt.medium, "medium JSON");
    app.add_option("--lambda", opt.lambda, "lambda JSON");
    app.add_option("--in", opt.in, "input comb JSON");
    app.add_option("--order", opt.order, "derivative order for wick-dump");
    app.add_option("--pattern", opt.pattern, "derivative pattern, e.g. \"f f* f f*\"");
    app.add_flag("--prune", opt.prune, "drop vacuum bubbles");
    app.add_option("--drive-freq", opt.drive_freq, "drive frequency for duffing-compare");
    app.add_option("--ladder", opt.ladder, "number of drive amplitudes");
    app.add_option("--omega", opt.omega, "external frequency for dyson");
    app.add_option("--omega-grid", opt.omega_grid, "propagator frequencies as start:stop:points");
    app.add_option("--k", opt.k, "wavenumber");
    app.add_option("--mode", opt.mode, "dyson form: single, resummed or both")
        ->check(CLI::IsMember({"single", "resummed", "both"}));
    auto* ow1 = app.add_option("--w1", opt.w1, "chi3 input frequency 1");
    app.add_option("--w2", opt.w2, "chi3 input frequency 2")->needs(ow1);
    app.add_option("--w3", opt.w3, "chi3 input frequency 3")->needs(ow1);
    try {
        app.parse(argc - 1, argv + 1);
    } catch (const CLI::CallForHelp& e) {
        std::cout << kUsage << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    opt.have_w = app.count("--w1") > 0;

    try {
        return dispatch(command, opt);
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << " (line " << e.line << ", column " << e.column << ")\n";
        return 65;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// mpadp: command-line front end for max-plus approximate value iteration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpadp/mpadp.hpp"

namespace fs = std::filesystem;
using namespace mpadp;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kSolver = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string problem = "v1d_bumps";
    std::size_t nodes = 0;  // 0: 362 in 1D, 45 in 2D
    double eta = 0.0;       // 0: 1/2 in 1D, 0.919 in 2D
    std::string mdp_path;
    std::string out;
    double tol = 1e-8;
    std::string cache_dir;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool omit_timing = false;
};

struct Loaded {
    DeterministicMdp M;
    std::shared_ptr<const Grid> grid;
    std::optional<ValueVector> analytic;  // builtin benchmarks only
    ValueVector reference;                // exact optimum of the discrete problem
    Json desc;
};

Loaded load_problem(const Common& c, bool need_reference = true) {
    if (!c.mdp_path.empty()) {
        if (!fs::exists(c.mdp_path)) throw IoError("no such file: " + c.mdp_path);
        auto M = load_mdp(c.mdp_path);
        Loaded L{M, M.grid_ptr(), std::nullopt, {}, Json{{"source", "file"}, {"path", c.mdp_path}}};
        if (need_reference) L.reference = discrete_optimum(L.M, c.tol);
        return L;
    }
    ValueSpecId id;
    try {
        id = value_spec_from_string(c.problem);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    const bool two_d = ValueSpec{id}.dimension() == 2;
    const std::size_t nodes = c.nodes ? c.nodes : (two_d ? 45 : 362);
    const double eta = c.eta > 0.0 ? c.eta : (two_d ? 0.919 : 0.5);
    auto p = [&] {
        try {
            return build_benchmark(id, nodes, eta);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    Loaded L{p.mdp, p.grid, p.v_star, {}, Json{{"source", "builtin"}, {"problem", c.problem}, {"nodes", nodes}, {"eta", eta}}};
    if (need_reference) L.reference = discrete_optimum(L.M, c.tol);
    return L;
}

fs::path prepare_out(const Common& c) {
    if (c.out.empty()) throw UsageError("--out is required");
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw IoError("cannot create output directory '" + c.out + "': " + ec.message());
    return c.out;
}

void write_values(const fs::path& p, const ValueVector& V, const Grid* g) {
    std::ostringstream os;
    write_values_csv(os, V, g);
    write_text_file(p, os.str());
}

std::vector<std::string> g_args;  // argv after the subcommand name, minus --out
std::string g_command;

void write_meta(const fs::path& dir, const Json& config) {
    Json meta{{"tool", "mpadp"}, {"version", kVersion}, {"command", g_command}, {"args", g_args}, {"config", config}};
    write_json_file(dir / "meta.json", meta);
}

Json common_json(const Common& c) {
    return Json{{"tol", c.tol}, {"seed", c.seed}, {"threads", c.threads}, {"omit_timing", c.omit_timing}};
}

std::unique_ptr<FormsCache> open_cache(const Common& c) {
    return c.cache_dir.empty() ? nullptr : std::make_unique<FormsCache>(c.cache_dir);
}

double timing(const Common& c, double ms) { return c.omit_timing ? 0.0 : ms; }

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

template <class T>
T single(const std::vector<T>& v, const char* flag) {
    if (v.size() != 1) throw UsageError(std::string(flag) + " takes exactly one value here");
    return v.front();
}

// ---- benchmark ----

int cmd_benchmark(const Common& c) {
    const auto dir = prepare_out(c);
    auto L = load_problem(c, false);
    if (!L.analytic) throw UsageError("benchmark needs --problem, not --mdp");
    save_mdp((dir / "mdp.txt").string(), L.M);
    write_values(dir / "vstar.csv", *L.analytic, L.grid.get());
    const double gamma = L.M.gamma();
    Json cfg = L.desc;
    cfg.update(common_json(c));
    write_meta(dir, cfg);
    std::cout << "states=" << L.M.state_count() << " gamma=" << detail::format_double(gamma)
              << " tau=" << detail::format_double(horizon(gamma)) << "\n";
    return kOk;
}

// ---- solve ----

int cmd_solve(const Common& c) {
    const auto dir = prepare_out(c);
    auto L = load_problem(c, false);
    const auto res = value_iteration(L.M, ValueVector(L.M.state_count(), 0.0), c.tol * (1.0 - L.M.gamma()), 100000000);
    write_values(dir / "values.csv", res.values, L.grid.get());
    const double bound = res.residual / (1.0 - L.M.gamma());
    std::ostringstream cert;
    cert << "iterations,residual,error_bound\n"
         << res.iterations << ',' << detail::format_double(res.residual) << ',' << detail::format_double(bound) << '\n';
    write_text_file(dir / "certificate.csv", cert.str());
    Json cfg = L.desc;
    cfg.update(common_json(c));
    write_meta(dir, cfg);
    std::cout << "iterations=" << res.iterations << " residual=" << detail::format_double(res.residual)
              << " error_bound=" << detail::format_double(bound) << "\n";
    if (L.analytic) {
        const auto e = error_metrics(res.values, *L.analytic);
        std::cout << "vs analytic: l1=" << detail::format_double(e.l1) << " linf=" << detail::format_double(e.linf)
                  << "\n";
    }
    return kOk;
}

// ---- approx ----

struct ApproxArgs {
    std::string atoms = "constant";
    std::vector<std::size_t> rho{1};
    std::vector<std::size_t> n{16};
    double scale = 0.0;
    double lambda = 1.0;
};

Partition chunk_partition(std::size_t S, std::size_t n) {
    std::vector<std::uint32_t> cell(S);
    for (std::size_t s = 0; s < S; ++s) cell[s] = static_cast<std::uint32_t>(s * n / S);
    return Partition::from_assignment(cell);
}

/// n slopes per grid axis spread evenly over [-m, m] (n rounded to a d-th power).
std::vector<std::vector<double>> bregman_slopes(std::size_t d, std::size_t n, double m) {
    auto per = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d)) + 1e-9));
    per = std::max<std::size_t>(per, 1);
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> idx(d, 0);
    while (true) {
        std::vector<double> slope(d);
        for (std::size_t k = 0; k < d; ++k)
            slope[k] = per == 1 ? 0.0 : -m + 2.0 * m * static_cast<double>(idx[k]) / static_cast<double>(per - 1);
        out.push_back(std::move(slope));
        std::size_t k = 0;
        for (; k < d; ++k) {
            if (++idx[k] < per) break;
            idx[k] = 0;
        }
        if (k == d) break;
    }
    return out;
}

int cmd_approx(const Common& c, const ApproxArgs& a) {
    const auto dir = prepare_out(c);
    auto L = load_problem(c);
    const std::size_t rho = single(a.rho, "--rho"), n = single(a.n, "--n");
    if (rho == 0) throw UsageError("--rho must be positive");
    if (n == 0 || n > L.M.state_count()) throw UsageError("--n must lie in 1..state count");
    if (a.atoms != "constant" && !L.grid) throw UsageError("--atoms " + a.atoms + " needs grid metadata");
    const auto t0 = std::chrono::steady_clock::now();
    Dictionary W;
    double scale = 0.0;
    if (a.atoms == "constant") {
        W = L.grid ? make_partition_dictionary(fixed_constant_partition(*L.grid, n), L.grid)
                   : make_partition_dictionary(chunk_partition(L.M.state_count(), n));
    } else if (a.atoms == "affine") {
        scale = a.scale > 0.0 ? a.scale : lipschitz_estimate(L.reference, *L.grid, Metric::L1);
        if (!(scale > 0.0)) scale = 1.0;
        W = make_distance_dictionary(fixed_affine_centers(*L.grid, n), scale, {}, Metric::L1, L.grid);
    } else if (a.atoms == "bregman") {
        scale = a.scale > 0.0 ? a.scale : lipschitz_estimate(L.reference, *L.grid, Metric::L1) + a.lambda;
        W = make_bregman_dictionary(bregman_slopes(L.grid->dimension(), n, scale), a.lambda, L.grid);
    } else {
        throw UsageError("--atoms must be constant, affine or bregman");
    }
    const BellmanPower T(L.M, rho);
    const auto cache = open_cache(c);
    bool hit = false;
    const auto F = compile_forms_cached(T, W, W, cache.get(), &hit);
    const double compile_ms = elapsed_ms(t0);
    const auto res = run_reduced_vi(F, W, c.tol, 100000000);
    const double wall_ms = elapsed_ms(t0);
    const auto e = error_metrics(res.V, L.reference);

    write_values(dir / "approx.csv", res.V, L.grid.get());
    write_values(dir / "vstar.csv", L.analytic ? *L.analytic : L.reference, L.grid.get());
    Json summary{{"atoms", W.size()},
                 {"err_l1", e.l1},
                 {"err_linf", e.linf},
                 {"iterations", res.state.iteration},
                 {"compile_ms", timing(c, compile_ms)},
                 {"wall_ms", timing(c, wall_ms)},
                 {"mdp_hash", hex64(F.mdp_hash)},
                 {"dictionary_hash", hex64(F.w_hash)}};
    write_json_file(dir / "summary.json", summary);
    write_json_file(dir / "dictionary.json", to_json(W));
    Json cfg = L.desc;
    cfg.update(common_json(c));
    cfg.update(Json{{"atoms", a.atoms}, {"rho", rho}, {"n", n}, {"scale", scale}, {"lambda", a.lambda}});
    write_meta(dir, cfg);
    if (cache) std::cerr << (hit ? "forms cache hit\n" : "forms cache miss\n");
    std::cout << "atoms=" << W.size() << " err_l1=" << detail::format_double(e.l1)
              << " err_linf=" << detail::format_double(e.linf) << "\n";
    return kOk;
}

// ---- greedy ----

struct GreedyArgs {
    std::string atoms = "constant";
    std::vector<std::size_t> rho{1};
    std::vector<std::size_t> n{16};
    std::string norm = "l1";
    double scale = 0.0;
    std::size_t pool_cap = 512;
    std::string resume;
};

int cmd_greedy(const Common& c, const GreedyArgs& a) {
    const auto dir = prepare_out(c);
    auto L = load_problem(c);
    if (!L.grid) throw UsageError("greedy needs grid metadata");
    const std::size_t rho = single(a.rho, "--rho"), n = single(a.n, "--n");
    if (rho == 0 || n == 0) throw UsageError("--rho and --n must be positive");
    Norm norm;
    try {
        norm = norm_from_string(a.norm);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a.atoms != "constant" && a.atoms != "affine") throw UsageError("greedy supports --atoms constant or affine");
    GreedyOptions g;
    g.norm = norm;
    g.tol = c.tol;
    g.pool_cap = a.pool_cap;
    g.coupled = a.atoms == "affine";
    auto T = std::make_shared<const BellmanPower>(L.M, rho);
    GreedyRunState st;
    double scale = 0.0;
    if (!a.resume.empty()) {
        if (!fs::exists(a.resume)) throw IoError("no such file: " + a.resume);
        st = resume_greedy_state(read_json_file(a.resume), T, L.grid, L.reference, g);
    } else if (a.atoms == "constant") {
        st = make_partition_state(T, L.grid, single_cell_partition(*L.grid), L.reference, g);
    } else {
        scale = a.scale > 0.0 ? a.scale : lipschitz_estimate(L.reference, *L.grid, Metric::L1);
        if (!(scale > 0.0)) scale = 1.0;
        const std::size_t corners = std::min(std::size_t{1} << L.grid->dimension(), n);
        const auto D = make_distance_dictionary(fixed_affine_centers(*L.grid, corners), scale, {}, Metric::L1, L.grid);
        st = make_greedy_state(T, D, D, L.reference, g);
    }
    const std::size_t first_new = st.error_trace.size();
    run_matching_pursuit(st, n, g);
    for (std::size_t i = first_new; i < st.error_trace.size(); ++i) {
        const auto& r = st.error_trace[i];
        std::cout << "n=" << r.n << " err_l1=" << detail::format_double(r.err_l1);
        if (r.split_dim >= 0) std::cout << " split_dim=" << r.split_dim + 1;
        std::cout << " " << r.atom_desc << "\n";
    }
    std::ostringstream tr;
    write_trace_csv(tr, st.error_trace);
    write_text_file(dir / "trace.csv", tr.str());
    write_values(dir / "approx.csv", st.V, L.grid.get());
    write_values(dir / "vstar.csv", L.analytic ? *L.analytic : L.reference, L.grid.get());
    write_json_file(dir / "checkpoint.json", checkpoint_to_json(st));
    std::vector<std::size_t> per_dim(L.grid->dimension(), 0);
    for (const auto& r : st.error_trace)
        if (r.split_dim >= 0) ++per_dim[static_cast<std::size_t>(r.split_dim)];
    const auto e = error_metrics(st.V, L.reference);
    write_json_file(dir / "summary.json", Json{{"atoms", st.atom_count()},
                                               {"err_l1", e.l1},
                                               {"err_linf", e.linf},
                                               {"splits_per_dim", per_dim}});
    Json cfg = L.desc;
    cfg.update(common_json(c));
    cfg.update(Json{{"atoms", a.atoms}, {"rho", rho}, {"n", n}, {"norm", a.norm}, {"scale", scale},
                    {"pool_cap", a.pool_cap}, {"resume", a.resume}});
    write_meta(dir, cfg);
    return kOk;
}

// ---- sweep ----

struct SweepArgs {
    std::vector<std::string> methods{"fixed-constant", "fixed-affine", "greedy-constant", "greedy-affine"};
    std::vector<std::size_t> rho{4, 32};
    std::vector<std::size_t> n{16, 32, 64};
    std::string norm = "l1";
    double scale = 0.0;
};

int cmd_sweep(const Common& c, const SweepArgs& a) {
    const auto dir = prepare_out(c);
    auto L = load_problem(c);
    if (!L.grid) throw UsageError("sweep needs grid metadata");
    if (a.rho.empty() || a.n.empty() || a.methods.empty()) throw UsageError("sweep lists must be nonempty");
    SweepConfig cfg;
    try {
        cfg.methods.clear();
        for (const auto& m : a.methods) cfg.methods.push_back(method_from_string(m));
        cfg.approx.norm = norm_from_string(a.norm);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    for (auto r : a.rho)
        if (r == 0) throw UsageError("--rho values must be positive");
    for (auto n : a.n)
        if (n == 0 || n > L.M.state_count()) throw UsageError("--n values must lie in 1..state count");
    cfg.rhos = a.rho;
    cfg.ns = a.n;
    cfg.threads = std::max<std::size_t>(1, c.threads);
    cfg.approx.tol = c.tol;
    cfg.approx.scale = a.scale;
    auto rows = run_sweep(L.M, L.grid, L.reference, cfg);
    if (c.omit_timing)
        for (auto& r : rows) r.wall_ms = r.compile_ms = 0.0;
    std::ostringstream os;
    write_sweep_csv(os, rows);
    write_text_file(dir / "sweep.csv", os.str());
    write_values(dir / "vstar.csv", L.analytic ? *L.analytic : L.reference, L.grid.get());
    Json meta = L.desc;
    meta.update(common_json(c));
    meta.update(Json{{"methods", a.methods}, {"rho", a.rho}, {"n", a.n}, {"norm", a.norm}, {"scale", a.scale}});
    write_meta(dir, meta);
    std::cout << os.str();
    return kOk;
}

// ---- entry ----

std::vector<std::string> strip_out(const std::vector<std::string>& args) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out" || args[i] == "-o") {
            ++i;
            continue;
        }
        if (args[i].rfind("--out=", 0) == 0) continue;
        kept.push_back(args[i]);
    }
    return kept;
}

int run(std::vector<std::string> argv);

int cmd_replay(const std::string& meta_path, const std::string& out) {
    if (!fs::exists(meta_path)) throw IoError("no such file: " + meta_path);
    const auto meta = read_json_file(meta_path);
    std::vector<std::string> argv{"mpadp"};
    try {
        argv.push_back(meta.at("command").get<std::string>());
        for (const auto& s : meta.at("args")) argv.push_back(s.get<std::string>());
    } catch (const Json::exception& e) {
        throw SerializationError(std::string("meta.json: ") + e.what());
    }
    if (argv[1] == "replay") throw UsageError("meta.json describes a replay");
    argv.push_back("--out");
    argv.push_back(out);
    return run(std::move(argv));
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--problem", c.problem, "builtin benchmark: v1d_bumps, v1d_convex, v2d_sparse, v2d_full");
    sub->add_option("--nodes", c.nodes, "nodes per dimension (default 362 in 1D, 45 in 2D)");
    sub->add_option("--eta", c.eta, "continuous discount base (default 0.5 in 1D, 0.919 in 2D)");
    sub->add_option("--mdp", c.mdp_path, "MDP text file instead of a builtin problem");
    sub->add_option("--out,-o", c.out, "output directory");
    sub->add_option("--tol", c.tol, "solver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--cache-dir", c.cache_dir, "directory for cached compiled forms");
    sub->add_option("--seed", c.seed, "recorded in meta.json; every algorithm here is deterministic");
    sub->add_option("--threads", c.threads, "worker threads for sweeps");
    sub->add_flag("--omit-timing", c.omit_timing, "write zero for all timings (byte-identical reruns)");
}

int run(std::vector<std::string> argv) {
    CLI::App app{"Max-plus approximate value iteration for deterministic MDPs"};
    app.require_subcommand(1);
    Common c;

    auto* bench = app.add_subcommand("benchmark", "build a benchmark MDP and its exact value function");
    add_common(bench, c);
    std::string action = "build";
    bench->add_option("action", action, "only 'build'")->check(CLI::IsMember({"build"}));

    auto* solve = app.add_subcommand("solve", "exact value iteration with a residual certificate");
    add_common(solve, c);

    ApproxArgs aa;
    auto* approx = app.add_subcommand("approx", "reduced value iteration on a fixed dictionary");
    add_common(approx, c);
    approx->add_option("--atoms", aa.atoms)->check(CLI::IsMember({"constant", "affine", "bregman"}));
    approx->add_option("--rho", aa.rho)->delimiter(',');
    approx->add_option("--n", aa.n)->delimiter(',');
    approx->add_option("--scale", aa.scale, "affine: distance scale c; bregman: slope range (default from V*)");
    approx->add_option("--lambda", aa.lambda, "bregman curvature")->check(CLI::NonNegativeNumber);

    GreedyArgs ga;
    auto* greedy = app.add_subcommand("greedy", "matching pursuit on the dictionaries");
    add_common(greedy, c);
    greedy->add_option("--atoms", ga.atoms)->check(CLI::IsMember({"constant", "affine"}));
    greedy->add_option("--rho", ga.rho)->delimiter(',');
    greedy->add_option("--n", ga.n, "atom budget")->delimiter(',');
    greedy->add_option("--norm", ga.norm)->check(CLI::IsMember({"l1", "linf"}));
    greedy->add_option("--scale", ga.scale, "scale of the seed atoms (affine)");
    greedy->add_option("--pool-cap", ga.pool_cap, "max candidate centers per scale");
    greedy->add_option("--resume", ga.resume, "checkpoint.json of an earlier run");

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "error of every (method, rho, n) cell");
    add_common(sweep, c);
    sweep->add_option("--methods", sa.methods)->delimiter(',');
    sweep->add_option("--rho", sa.rho)->delimiter(',');
    sweep->add_option("--n", sa.n)->delimiter(',');
    sweep->add_option("--norm", sa.norm)->check(CLI::IsMember({"l1", "linf"}));
    sweep->add_option("--scale", sa.scale, "distance scale for affine methods (default Lip of V*)");

    std::string meta_path, replay_out;
    auto* replay = app.add_subcommand("replay", "rerun the command recorded in a meta.json");
    replay->add_option("meta", meta_path)->required();
    replay->add_option("--out,-o", replay_out)->required();

    try {
        std::vector<std::string> rev(argv.rbegin(), argv.rend() - 1);
        app.parse(std::move(rev));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    auto* sub = app.get_subcommands().front();
    g_command = sub->get_name();
    g_args = strip_out(std::vector<std::string>(argv.begin() + 2, argv.end()));

    if (sub == bench) return cmd_benchmark(c);
    if (sub == solve) return cmd_solve(c);
    if (sub == approx) return cmd_approx(c, aa);
    if (sub == greedy) return cmd_greedy(c, ga);
    if (sub == sweep) return cmd_sweep(c, sa);
    return cmd_replay(meta_path, replay_out);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(std::vector<std::string>(argv, argv + argc));
    } catch (const UsageError& e) {
        std::cerr << "mpadp: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "mpadp: " << e.what() << "\n";
        return kIo;
    } catch (const FormatError& e) {
        std::cerr << "mpadp: " << e.what() << "\n";
        return kIo;
    } catch (const SerializationError& e) {
        std::cerr << "mpadp: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "mpadp: solver error: " << e.what() << "\n";
        return kSolver;
    }
}

#pragma once

/**
 * @file experiments.hpp
 * @brief Fixed and greedy approximation runs on benchmark problems, and
 * the (method x rho x n) sweep behind the error-vs-size curves.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "benchmarks.hpp"
#include "dictionaries.hpp"
#include "matching_pursuit.hpp"
#include "mdp.hpp"
#include "partition.hpp"
#include "reduced_vi.hpp"

namespace mpadp {

enum class Method { FixedConstant, FixedAffine, GreedyConstant, GreedyAffine };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::FixedConstant: return "fixed-constant";
        case Method::FixedAffine: return "fixed-affine";
        case Method::GreedyConstant: return "greedy-constant";
        case Method::GreedyAffine: return "greedy-affine";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    for (auto m : {Method::FixedConstant, Method::FixedAffine, Method::GreedyConstant, Method::GreedyAffine})
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown method '" + s + "'");
}

/// Exact optimum of the discretized problem, by value iteration to `tol`.
inline ValueVector discrete_optimum(const DeterministicMdp& M, double tol = 1e-11) {
    return value_iteration(M, ValueVector(M.state_count(), 0.0), tol * (1.0 - M.gamma()), 100000000).values;
}

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

inline unsigned log2_exact(std::size_t n) {
    unsigned k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

// levels handed out one at a time, starting with the first dimension
inline std::vector<unsigned> round_robin_levels(std::size_t total, std::size_t d) {
    std::vector<unsigned> levels(d, 0);
    for (std::size_t i = 0; i < total; ++i) ++levels[i % d];
    return levels;
}

inline std::size_t exact_root(std::size_t n, std::size_t d) {
    const auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d))));
    std::size_t p = 1;
    for (std::size_t k = 0; k < d; ++k) p *= m;
    return p == n ? m : 0;
}

}  // namespace detail

/**
 * n piecewise-constant cells: a uniform dyadic partition when n is a power
 * of two (finer along the first dimensions first), else the Voronoi cells
 * of a greedy n-center cover in l_inf.
 */
inline Partition fixed_constant_partition(const Grid& grid, std::size_t n) {
    if (n == 0 || n > grid.state_count()) throw std::invalid_argument("fixed_constant_partition: bad n");
    if (detail::is_power_of_two(n)) {
        auto P = dyadic_partition(grid, detail::round_robin_levels(detail::log2_exact(n), grid.dimension()));
        if (P.cell_count() == n) return P;
    }
    return voronoi_partition(grid, k_center_cover(grid, n, Metric::LInf), Metric::LInf);
}

/// n centers on a regular sub-grid (ends included) when n factors evenly over the dimensions, else a greedy cover.
inline std::vector<StateId> fixed_affine_centers(const Grid& grid, std::size_t n) {
    if (n == 0 || n > grid.state_count()) throw std::invalid_argument("fixed_affine_centers: bad n");
    const std::size_t d = grid.dimension();
    std::vector<std::size_t> per_dim;
    if (std::size_t m = detail::exact_root(n, d)) {
        per_dim.assign(d, m);
    } else if (detail::is_power_of_two(n)) {
        for (auto l : detail::round_robin_levels(detail::log2_exact(n), d)) per_dim.push_back(std::size_t{1} << l);
    }
    if (!per_dim.empty()) {
        bool fits = true;
        for (std::size_t k = 0; k < d; ++k) fits = fits && per_dim[k] <= grid.size(k);
        if (fits) {
            auto c = uniform_centers(grid, per_dim, true);
            if (c.size() == n) return c;
        }
    }
    return k_center_cover(grid, n, Metric::L1).centers;
}

struct ApproxResult {
    ValueVector V;
    std::size_t atoms = 0;
    double compile_ms = 0.0;
    double wall_ms = 0.0;
    std::size_t iterations = 0;
    std::vector<TraceRow> trace;  // greedy methods only
};

struct ApproxOptions {
    double tol = 1e-8;
    Norm norm = Norm::L1;
    std::size_t max_iter = 1000000;
    std::size_t pool_cap = 512;
    /// Scale of fixed and seed distance atoms; <= 0 selects the Lipschitz constant of the reference.
    double scale = 0.0;
    PowerStrategy strategy = PowerStrategy::Auto;
};

inline ApproxResult run_method(const DeterministicMdp& M, std::shared_ptr<const Grid> grid,
                               const ValueVector& reference, Method method, std::size_t rho, std::size_t n,
                               const ApproxOptions& opt) {
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
    const auto t0 = clock::now();
    auto T = std::make_shared<const BellmanPower>(M, rho, opt.strategy);
    ApproxResult out;
    GreedyOptions gopt;
    gopt.norm = opt.norm;
    gopt.tol = opt.tol;
    gopt.max_iter = opt.max_iter;
    gopt.pool_cap = opt.pool_cap;
    const auto affine_scale = [&] {
        const double c = opt.scale > 0.0 ? opt.scale : lipschitz_estimate(reference, *grid, Metric::L1);
        return c > 0.0 ? c : 1.0;
    };
    switch (method) {
        case Method::FixedConstant:
        case Method::FixedAffine: {
            Dictionary W;
            if (method == Method::FixedConstant) {
                W = make_partition_dictionary(fixed_constant_partition(*grid, n), grid);
            } else {
                W = make_distance_dictionary(fixed_affine_centers(*grid, n), affine_scale(), {}, Metric::L1, grid);
            }
            const auto F = compile_forms(*T, W, W);
            out.compile_ms = ms(clock::now() - t0);
            auto res = run_reduced_vi(F, W, opt.tol, opt.max_iter);
            out.V = std::move(res.V);
            out.iterations = res.state.iteration;
            out.atoms = W.size();
            break;
        }
        case Method::GreedyConstant: {
            auto st = make_partition_state(T, grid, single_cell_partition(*grid), reference, gopt);
            run_matching_pursuit(st, n, gopt);
            out.V = st.V;
            out.atoms = st.atom_count();
            out.trace = st.error_trace;
            out.iterations = st.solver_iterations;
            break;
        }
        case Method::GreedyAffine: {
            // seeded with cones at the grid corners; each step adds one atom to both W and Z
            const std::size_t corners = std::min(std::size_t{1} << grid->dimension(), n);
            const auto D = make_distance_dictionary(fixed_affine_centers(*grid, corners), affine_scale(), {},
                                                    Metric::L1, grid);
            gopt.coupled = true;
            auto st = make_greedy_state(T, D, D, reference, gopt);
            run_matching_pursuit(st, n, gopt);
            out.V = st.V;
            out.atoms = st.atom_count();
            out.trace = st.error_trace;
            out.iterations = st.solver_iterations;
            break;
        }
    }
    out.wall_ms = ms(clock::now() - t0);
    return out;
}

struct SweepRow {
    Method method = Method::FixedConstant;
    std::size_t rho = 1;
    std::size_t n = 1;
    double err_l1 = 0.0;
    double err_linf = 0.0;
    double wall_ms = 0.0;
    double compile_ms = 0.0;
};

struct SweepConfig {
    std::vector<Method> methods{Method::FixedConstant, Method::FixedAffine, Method::GreedyConstant,
                                Method::GreedyAffine};
    std::vector<std::size_t> rhos;
    std::vector<std::size_t> ns;
    ApproxOptions approx;
    std::size_t threads = 1;
};

/**
 * Runs every (method, rho, n) cell, possibly in parallel. Rows come back
 * sorted by method, rho, n whatever the completion order.
 */
inline std::vector<SweepRow> run_sweep(const DeterministicMdp& M, std::shared_ptr<const Grid> grid,
                                       const ValueVector& reference, const SweepConfig& cfg) {
    if (cfg.rhos.empty() || cfg.ns.empty() || cfg.methods.empty())
        throw std::invalid_argument("run_sweep: method, rho and n lists must be nonempty");
    std::vector<std::tuple<Method, std::size_t, std::size_t>> cells;
    for (auto m : cfg.methods)
        for (auto r : cfg.rhos)
            for (auto n : cfg.ns) cells.emplace_back(m, r, n);
    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            try {
                const auto [m, r, n] = cells[i];
                const auto res = run_method(M, grid, reference, m, r, n, cfg.approx);
                const auto e = error_metrics(res.V, reference);
                rows[i] = {m, r, n, e.l1, e.linf, res.wall_ms, res.compile_ms};
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t nt = std::max<std::size_t>(1, std::min(cfg.threads, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tie(a.method, a.rho, a.n) < std::tie(b.method, b.rho, b.n);
    });
    return rows;
}

}  // namespace mpadp

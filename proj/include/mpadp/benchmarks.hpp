#pragma once

/**
 * @file benchmarks.hpp
 * @brief Grid MDPs discretizing dx/dt = a on [0,1]^d with a known optimal
 * value function V. The running reward b is recovered from V through
 *
 *     V(x) log(eta) + max_i |dV/dx_i(x)| + b(x) = 0,
 *
 * moves to a neighbouring node earn delta * b(reached node), the discount
 * is eta^delta, and boundary nodes are absorbing with self-loop reward
 * (1 - gamma) V(x) so their value is V(x) exactly.
 */

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "extended_value.hpp"
#include "grid.hpp"
#include "mdp.hpp"

namespace mpadp {

enum class ValueSpecId { V1dBumps, V1dConvex, V2dSparse, V2dFull };

inline const char* to_string(ValueSpecId id) {
    switch (id) {
        case ValueSpecId::V1dBumps: return "v1d_bumps";
        case ValueSpecId::V1dConvex: return "v1d_convex";
        case ValueSpecId::V2dSparse: return "v2d_sparse";
        case ValueSpecId::V2dFull: return "v2d_full";
    }
    return "?";
}

inline ValueSpecId value_spec_from_string(const std::string& s) {
    if (s == "v1d_bumps") return ValueSpecId::V1dBumps;
    if (s == "v1d_convex") return ValueSpecId::V1dConvex;
    if (s == "v2d_sparse") return ValueSpecId::V2dSparse;
    if (s == "v2d_full") return ValueSpecId::V2dFull;
    throw std::invalid_argument("unknown problem '" + s + "'");
}

namespace detail {

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

inline double convex_part(double x) { return pos(1.0 - 3.0 * x) + pos(6.0 * x - 4.0); }

// derivative from the left; at x = 0 the right derivative is used
inline double convex_part_deriv(double x) {
    double d = 0.0;
    if (x <= 1.0 / 3.0) d += -3.0;
    if (x > 2.0 / 3.0) d += 6.0;
    return d;
}

inline double bump(double x) { return pos(1.0 - 36.0 * (x - 0.5) * (x - 0.5)); }

inline double bump_deriv(double x) {
    if (x > 1.0 / 3.0 && x <= 2.0 / 3.0) return -72.0 * (x - 0.5);
    return 0.0;
}

}  // namespace detail

struct ValueSpec {
    ValueSpecId id = ValueSpecId::V1dConvex;

    std::size_t dimension() const {
        return id == ValueSpecId::V1dBumps || id == ValueSpecId::V1dConvex ? 1 : 2;
    }

    double value(const std::vector<double>& x) const {
        switch (id) {
            case ValueSpecId::V1dBumps: return detail::convex_part(x[0]) + detail::bump(x[0]);
            case ValueSpecId::V1dConvex:
            case ValueSpecId::V2dSparse: return detail::convex_part(x[0]);
            case ValueSpecId::V2dFull: return detail::convex_part(x[0]) + detail::convex_part(x[1]);
        }
        return 0.0;
    }

    /// Left partial derivative along `dim` (right derivative at 0).
    double partial(const std::vector<double>& x, std::size_t dim) const {
        switch (id) {
            case ValueSpecId::V1dBumps: return detail::convex_part_deriv(x[0]) + detail::bump_deriv(x[0]);
            case ValueSpecId::V1dConvex:
            case ValueSpecId::V2dSparse: return dim == 0 ? detail::convex_part_deriv(x[0]) : 0.0;
            case ValueSpecId::V2dFull: return detail::convex_part_deriv(x[dim]);
        }
        return 0.0;
    }

    /// Exact l1 Lipschitz constant (largest slope magnitude).
    double lipschitz() const {
        switch (id) {
            case ValueSpecId::V1dBumps: return 12.0;
            default: return 6.0;
        }
    }
};

/// b(x) = -V(x) log(eta) - max_i |dV/dx_i(x)|.
inline double reward_from_value(const ValueSpec& spec, const std::vector<double>& x, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("reward_from_value: eta must lie in (0,1]");
    double slope = 0.0;
    for (std::size_t k = 0; k < spec.dimension(); ++k) slope = std::max(slope, std::abs(spec.partial(x, k)));
    return -spec.value(x) * std::log(eta) - slope;
}

inline double reward_from_value_1d(const ValueSpec& spec, double x, double eta) {
    if (spec.dimension() != 1) throw std::invalid_argument("reward_from_value_1d: spec is not one-dimensional");
    return reward_from_value(spec, {x}, eta);
}

struct BenchmarkProblem {
    ValueSpec spec;
    DeterministicMdp mdp;
    std::shared_ptr<const Grid> grid;
    ValueVector v_star;
    double eta = 0.5;
    double delta = 0.0;
};

namespace detail {

inline BenchmarkProblem build_grid_benchmark(const ValueSpec& spec, std::size_t nodes, double eta) {
    if (nodes < 3) throw std::invalid_argument("benchmark: need at least 3 nodes per dimension");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("benchmark: eta must lie in (0,1)");
    const std::size_t d = spec.dimension();
    auto grid = std::make_shared<const Grid>(std::vector<std::size_t>(d, nodes));
    const double delta = 1.0 / static_cast<double>(nodes - 1);
    const double gamma = std::pow(eta, delta);
    const std::size_t n = grid->state_count();

    std::vector<double> b(n);
    ValueVector v_star(n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto x = grid->coordinates(static_cast<StateId>(s));
        v_star[s] = spec.value(x);
        b[s] = reward_from_value(spec, x, eta);
    }

    std::vector<Edge> edges;
    edges.reserve(n * 2 * d);
    for (std::size_t s = 0; s < n; ++s) {
        const auto sid = static_cast<StateId>(s);
        if (grid->on_boundary(sid)) {
            edges.push_back({sid, sid, (1.0 - gamma) * v_star[s].value()});
            continue;
        }
        for (std::size_t k = 0; k < d; ++k) {
            for (int dir : {-1, +1}) {
                StateId t;
                if (grid->neighbor(sid, k, dir, t)) edges.push_back({sid, t, delta * b[t]});
            }
        }
    }
    BenchmarkProblem p{spec, DeterministicMdp(n, gamma, std::move(edges), grid), grid, std::move(v_star), eta,
                       delta};
    return p;
}

}  // namespace detail

/// Chain on `nodes` points of [0,1]; interior moves go one step left or right.
inline BenchmarkProblem build_1d(ValueSpec spec, std::size_t nodes, double eta) {
    if (spec.dimension() != 1) throw std::invalid_argument("build_1d: spec is not one-dimensional");
    return detail::build_grid_benchmark(spec, nodes, eta);
}

/// nodes x nodes grid on [0,1]^2; interior nodes have four moves, every boundary node is absorbing.
inline BenchmarkProblem build_2d(ValueSpec spec, std::size_t nodes, double eta) {
    if (spec.dimension() != 2) throw std::invalid_argument("build_2d: spec is not two-dimensional");
    return detail::build_grid_benchmark(spec, nodes, eta);
}

inline BenchmarkProblem build_benchmark(ValueSpecId id, std::size_t nodes, double eta) {
    ValueSpec spec{id};
    return spec.dimension() == 1 ? build_1d(spec, nodes, eta) : build_2d(spec, nodes, eta);
}

struct ErrorMetrics {
    double l1 = 0.0;    // mean absolute error (grid-weighted integral over the unit cube)
    double linf = 0.0;
};

inline ErrorMetrics error_metrics(const ValueVector& V, const ValueVector& v_star) {
    require_same_size(V.size(), v_star.size(), "error_metrics");
    if (V.empty()) throw std::invalid_argument("error_metrics: empty vectors");
    ErrorMetrics m;
    for (std::size_t s = 0; s < V.size(); ++s) {
        if (V[s].is_bottom() || v_star[s].is_bottom())
            throw std::invalid_argument("error_metrics: vectors must be finite");
        const double e = std::abs(V[s].value() - v_star[s].value());
        m.l1 += e;
        m.linf = std::max(m.linf, e);
    }
    m.l1 /= static_cast<double>(V.size());
    return m;
}

}  // namespace mpadp

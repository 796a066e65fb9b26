#pragma once

/**
 * @file mdp.hpp
 * @brief Deterministic MDPs given by an edge set with rewards r(s, s'),
 * the Bellman operator TV(s) = max_{s'} r(s,s') + gamma V(s'), value
 * iteration, and operator powers T^rho compiled by max-plus squaring.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "extended_value.hpp"
#include "grid.hpp"

namespace mpadp {

struct Edge {
    StateId source;
    StateId target;
    double reward;
};

struct Transition {
    StateId target;
    double reward;
};

class DeterministicMdp {
public:
    DeterministicMdp() = default;

    /**
     * Builds the adjacency lists. Parallel edges collapse to their maximal
     * reward. Throws if gamma is outside [0,1), a reward is not finite, an id
     * is out of range, or a state has no outgoing edge.
     */
    DeterministicMdp(std::size_t state_count, double gamma, std::vector<Edge> edges,
                     std::shared_ptr<const Grid> grid = nullptr)
        : state_count_(state_count), gamma_(gamma), grid_(std::move(grid)) {
        if (state_count_ == 0) throw std::invalid_argument("DeterministicMdp: no states");
        if (!(gamma_ >= 0.0 && gamma_ < 1.0))
            throw std::invalid_argument("DeterministicMdp: discount must lie in [0,1)");
        if (grid_ && grid_->state_count() != state_count_)
            throw std::invalid_argument("DeterministicMdp: grid size differs from state_count");
        for (const auto& e : edges) {
            if (e.source >= state_count_ || e.target >= state_count_)
                throw std::out_of_range("DeterministicMdp: edge endpoint out of range");
            if (!std::isfinite(e.reward)) throw std::invalid_argument("DeterministicMdp: reward must be finite");
        }
        std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
            return a.source != b.source ? a.source < b.source : a.target < b.target;
        });
        offsets_.assign(state_count_ + 1, 0);
        transitions_.reserve(edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const auto& e = edges[i];
            if (!transitions_.empty() && i > 0 && edges[i - 1].source == e.source &&
                edges[i - 1].target == e.target) {
                transitions_.back().reward = std::max(transitions_.back().reward, e.reward);
                continue;
            }
            transitions_.push_back({e.target, e.reward});
            ++offsets_[e.source + 1];
        }
        for (std::size_t s = 0; s < state_count_; ++s) {
            if (offsets_[s + 1] == 0)
                throw std::invalid_argument("DeterministicMdp: state " + std::to_string(s) +
                                            " has no outgoing edge");
            offsets_[s + 1] += offsets_[s];
        }
    }

    std::size_t state_count() const noexcept { return state_count_; }
    double gamma() const noexcept { return gamma_; }
    std::size_t edge_count() const noexcept { return transitions_.size(); }
    const Grid* grid() const noexcept { return grid_.get(); }
    const std::shared_ptr<const Grid>& grid_ptr() const noexcept { return grid_; }

    std::span<const Transition> out_edges(StateId s) const {
        return {transitions_.data() + offsets_[s], transitions_.data() + offsets_[s + 1]};
    }

    /// r(s,t), bottom when (s,t) is not an edge.
    ExtendedValue reward(StateId s, StateId t) const {
        const auto row = out_edges(s);
        auto it = std::lower_bound(row.begin(), row.end(), t,
                                   [](const Transition& tr, StateId x) { return tr.target < x; });
        if (it == row.end() || it->target != t) return kBottom;
        return it->reward;
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(transitions_.size());
        for (std::size_t s = 0; s < state_count_; ++s)
            for (const auto& tr : out_edges(static_cast<StateId>(s)))
                out.push_back({static_cast<StateId>(s), tr.target, tr.reward});
        return out;
    }

private:
    std::size_t state_count_ = 0;
    double gamma_ = 0.0;
    std::shared_ptr<const Grid> grid_;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> transitions_;
};

struct Policy {
    std::vector<StateId> successor;
};

/// Effective horizon 1/(1-gamma).
inline double horizon(double gamma) { return 1.0 / (1.0 - gamma); }

/**
 * out = T V. Bottom entries of V are absorbing (gamma * bottom = bottom), so
 * T may be applied to atoms that are bottom outside their support.
 */
inline void bellman_apply_into(const DeterministicMdp& M, const ValueVector& V, ValueVector& out) {
    require_same_size(V.size(), M.state_count(), "bellman_apply");
    out.resize(M.state_count());
    const double g = M.gamma();
    for (std::size_t s = 0; s < M.state_count(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& tr : M.out_edges(static_cast<StateId>(s))) {
            const ExtendedValue v = V[tr.target];
            if (v.is_bottom()) continue;
            const double cand = tr.reward + g * v.value();
            if (cand > best) best = cand;
        }
        out[s] = best;
    }
}

inline ValueVector bellman_apply(const DeterministicMdp& M, const ValueVector& V) {
    ValueVector out(M.state_count());
    bellman_apply_into(M, V, out);
    return out;
}

/// T^rho V by rho successive sweeps.
inline ValueVector bellman_power_apply(const DeterministicMdp& M, const ValueVector& V, std::size_t rho) {
    ValueVector cur = V, next(M.state_count());
    for (std::size_t k = 0; k < rho; ++k) {
        bellman_apply_into(M, cur, next);
        std::swap(cur, next);
    }
    return cur;
}

/// ||TV - V||_inf for a finite V.
inline double bellman_residual(const DeterministicMdp& M, const ValueVector& V) {
    return sup_distance(bellman_apply(M, V), V);
}

/// max_s max_{s'} r(s,s') - min_s max_{s'} r(s,s').
inline double range_of_rewards(const DeterministicMdp& M) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < M.state_count(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& tr : M.out_edges(static_cast<StateId>(s))) best = std::max(best, tr.reward);
        hi = std::max(hi, best);
        lo = std::min(lo, best);
    }
    return hi - lo;
}

/// Per-state argmax of r(s,s') + gamma V(s'); ties go to the smallest successor id.
inline Policy greedy_policy(const DeterministicMdp& M, const ValueVector& V) {
    require_same_size(V.size(), M.state_count(), "greedy_policy");
    Policy p;
    p.successor.resize(M.state_count());
    for (std::size_t s = 0; s < M.state_count(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        StateId arg = M.out_edges(static_cast<StateId>(s)).front().target;
        for (const auto& tr : M.out_edges(static_cast<StateId>(s))) {
            if (V[tr.target].is_bottom()) continue;
            const double cand = tr.reward + M.gamma() * V[tr.target].value();
            if (cand > best) {
                best = cand;
                arg = tr.target;
            }
        }
        p.successor[s] = arg;
    }
    return p;
}

struct ValueIterationResult {
    ValueVector values;
    std::size_t iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;  // ||T V_t - V_t|| for t = 0..iterations
};

/// Thrown when an iterative solver exhausts its budget; carries the last iterate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, ValueVector last, double residual, std::size_t iterations)
        : std::runtime_error(what), last_(std::move(last)), residual_(residual), iterations_(iterations) {}

    const ValueVector& last_iterate() const noexcept { return last_; }
    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    ValueVector last_;
    double residual_;
    std::size_t iterations_;
};

/**
 * V_t = T V_{t-1} until ||T V_t - V_t||_inf <= tol. The returned V_t then
 * satisfies ||V_t - V*||_inf <= residual / (1 - gamma).
 */
inline ValueIterationResult value_iteration(const DeterministicMdp& M, const ValueVector& V0, double tol,
                                            std::size_t max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    require_same_size(V0.size(), M.state_count(), "value_iteration");
    if (!V0.all_finite()) throw std::invalid_argument("value_iteration: V0 must be finite");
    ValueIterationResult res;
    ValueVector V = V0, TV(M.state_count());
    for (std::size_t t = 0;; ++t) {
        bellman_apply_into(M, V, TV);
        const double r = sup_distance(TV, V);
        res.residual_history.push_back(r);
        if (r <= tol) {
            res.values = std::move(V);
            res.iterations = t;
            res.residual = r;
            return res;
        }
        if (t == max_iter)
            throw ConvergenceError("value_iteration: no convergence after " + std::to_string(max_iter) +
                                       " iterations",
                                   std::move(V), r, t);
        std::swap(V, TV);
    }
}

struct CompilePowerOptions {
    /// Dense |S|x|S| reward matrices are used up to this many states.
    std::size_t dense_threshold = 512;
};

namespace detail {

struct PowerMatrix {
    std::size_t length = 0;  // path length a; rewards are discounted sums over a steps
    std::vector<std::vector<Transition>> rows;
};

inline PowerMatrix power_from_mdp(const DeterministicMdp& M) {
    PowerMatrix P;
    P.length = 1;
    P.rows.resize(M.state_count());
    for (std::size_t s = 0; s < M.state_count(); ++s) {
        auto row = M.out_edges(static_cast<StateId>(s));
        P.rows[s].assign(row.begin(), row.end());
    }
    return P;
}

// R_{a+b}(s,s'') = max_{s'} R_a(s,s') + gamma^a R_b(s',s'')
inline PowerMatrix combine_sparse(const PowerMatrix& A, const PowerMatrix& B, double gamma) {
    const std::size_t n = A.rows.size();
    const double ga = std::pow(gamma, static_cast<double>(A.length));
    PowerMatrix C;
    C.length = A.length + B.length;
    C.rows.resize(n);
    std::vector<double> buf(n, -std::numeric_limits<double>::infinity());
    std::vector<StateId> touched;
    for (std::size_t s = 0; s < n; ++s) {
        touched.clear();
        for (const auto& a : A.rows[s]) {
            for (const auto& b : B.rows[a.target]) {
                const double v = a.reward + ga * b.reward;
                double& slot = buf[b.target];
                if (slot == -std::numeric_limits<double>::infinity()) touched.push_back(b.target);
                if (v > slot) slot = v;
            }
        }
        std::sort(touched.begin(), touched.end());
        auto& row = C.rows[s];
        row.reserve(touched.size());
        for (auto t : touched) {
            row.push_back({t, buf[t]});
            buf[t] = -std::numeric_limits<double>::infinity();
        }
    }
    return C;
}

inline PowerMatrix combine_dense(const PowerMatrix& A, const PowerMatrix& B, double gamma) {
    const std::size_t n = A.rows.size();
    const double ninf = -std::numeric_limits<double>::infinity();
    const double ga = std::pow(gamma, static_cast<double>(A.length));
    std::vector<double> a(n * n, ninf), b(n * n, ninf), c(n * n, ninf);
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& tr : A.rows[s]) a[s * n + tr.target] = tr.reward;
        for (const auto& tr : B.rows[s]) b[s * n + tr.target] = tr.reward;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = &c[i * n];
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i * n + k];
            if (aik == ninf) continue;
            const double* bk = &b[k * n];
            for (std::size_t j = 0; j < n; ++j) {
                const double v = aik + ga * bk[j];
                if (v > ci[j]) ci[j] = v;
            }
        }
    }
    PowerMatrix C;
    C.length = A.length + B.length;
    C.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (c[i * n + j] != ninf) C.rows[i].push_back({static_cast<StateId>(j), c[i * n + j]});
    return C;
}

}  // namespace detail

/**
 * The MDP whose Bellman operator is T^rho: discount gamma^rho and rewards
 * R_rho(s,s'') = max over length-rho paths of sum_k gamma^k r(s_k, s_{k+1}).
 * Built by binary powering with R_{a+b} = max_{s'} R_a(s,s') + gamma^a R_b(s',s'').
 */
inline DeterministicMdp compile_power(const DeterministicMdp& M, std::size_t rho,
                                      const CompilePowerOptions& opts = {}) {
    if (rho == 0) throw std::invalid_argument("compile_power: rho must be at least 1");
    const bool dense = M.state_count() <= opts.dense_threshold;
    auto combine = [&](const detail::PowerMatrix& A, const detail::PowerMatrix& B) {
        return dense ? detail::combine_dense(A, B, M.gamma()) : detail::combine_sparse(A, B, M.gamma());
    };
    detail::PowerMatrix base = detail::power_from_mdp(M);
    detail::PowerMatrix acc;
    bool have_acc = false;
    for (std::size_t r = rho;;) {
        if (r & 1U) {
            acc = have_acc ? combine(acc, base) : base;
            have_acc = true;
        }
        r >>= 1U;
        if (r == 0) break;
        base = combine(base, base);
    }
    std::vector<Edge> edges;
    for (std::size_t s = 0; s < acc.rows.size(); ++s)
        for (const auto& tr : acc.rows[s]) edges.push_back({static_cast<StateId>(s), tr.target, tr.reward});
    return DeterministicMdp(M.state_count(), std::pow(M.gamma(), static_cast<double>(rho)), std::move(edges),
                            M.grid_ptr());
}

/**
 * Number of integer points in the l1-ball of radius rho in dimension d:
 * sum_{i=0}^{min(d,rho)} 2^i C(d,i) C(rho,i). This is the out-degree of a
 * d-dimensional grid graph raised to the power rho, away from the boundary.
 */
inline std::uint64_t neighborhood_degree(std::uint64_t rho, std::uint64_t d) {
    auto binom = [](std::uint64_t n, std::uint64_t k) {
        std::uint64_t r = 1;
        for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i <= std::min(d, rho); ++i) total += (std::uint64_t{1} << i) * binom(d, i) * binom(rho, i);
    return total;
}

}  // namespace mpadp

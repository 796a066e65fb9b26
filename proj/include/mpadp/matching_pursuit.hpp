#pragma once

/**
 * @file matching_pursuit.hpp
 * @brief Greedy growth of the dictionaries W and Z.
 *
 * At a fixed point V = W alpha, U = Z^T+ beta = Z^T+ Z^T T V. A candidate
 * atom is scored by the residual left after adding it:
 *
 *     w:  agg_s min{ U - V,  U - w + <w|-U> }
 *     z:  agg_s min{ U - TV, -TV - z + <TV|z> }
 *
 * where agg is max (linf) or sum (l1). With partitions (W = Z = cell
 * indicators) only the worst cell is split, at a dyadic midpoint.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "atom.hpp"
#include "benchmarks.hpp"
#include "dictionaries.hpp"
#include "dictionary.hpp"
#include "extended_value.hpp"
#include "maxplus_core.hpp"
#include "partition.hpp"
#include "reduced_vi.hpp"

namespace mpadp {

enum class Norm { L1, LInf };

inline const char* to_string(Norm n) { return n == Norm::L1 ? "l1" : "linf"; }

inline Norm norm_from_string(const std::string& s) {
    if (s == "l1") return Norm::L1;
    if (s == "linf") return Norm::LInf;
    throw std::invalid_argument("unknown norm '" + s + "' (expected l1 or linf)");
}

namespace detail {

struct Aggregate {
    Norm norm;
    double acc = 0.0;
    void add(double v) { acc = norm == Norm::L1 ? acc + v : std::max(acc, v); }
};

inline ValueVector tabulate_atom(const Atom& a, std::size_t n, const Grid* grid) {
    detail::validate_atom(a, n, grid);
    ValueVector out(n);
    for (std::size_t s = 0; s < n; ++s) out[s] = evaluate_atom(a, static_cast<StateId>(s), grid);
    return out;
}

}  // namespace detail

/// Residual norm of U - V (l1: sum, linf: max). Both must be finite.
inline double residual_norm(const ValueVector& U, const ValueVector& V, Norm norm) {
    require_same_size(U.size(), V.size(), "residual_norm");
    detail::Aggregate agg{norm};
    for (std::size_t s = 0; s < U.size(); ++s) agg.add(U[s].value() - V[s].value());
    return agg.acc;
}

/// Score of a new W atom (tabulated): residual of U after projecting on W ∪ {w}.
inline double criterion_w(const ValueVector& U, const ValueVector& V, const ValueVector& w, Norm norm) {
    require_same_size(U.size(), V.size(), "criterion_w");
    require_same_size(U.size(), w.size(), "criterion_w");
    // coefficient of w in the new projection: min_s U(s) - w(s) = -<w|-U>
    double coef = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < U.size(); ++s)
        if (w[s].is_finite()) coef = std::min(coef, U[s].value() - w[s].value());
    if (coef == std::numeric_limits<double>::infinity())
        throw ResiduationError("criterion_w: atom is bottom everywhere");
    detail::Aggregate agg{norm};
    for (std::size_t s = 0; s < U.size(); ++s) {
        double r = U[s].value() - V[s].value();
        if (w[s].is_finite()) r = std::min(r, U[s].value() - w[s].value() - coef);
        agg.add(r);
    }
    return agg.acc;
}

inline double criterion_w(const ValueVector& U, const ValueVector& V, const Atom& w, Norm norm,
                          const Grid* grid) {
    return criterion_w(U, V, detail::tabulate_atom(w, U.size(), grid), norm);
}

/// Score of a new Z atom (tabulated): residual of TV's upper projection on Z ∪ {z}.
inline double criterion_z(const ValueVector& TV, const ValueVector& U, const ValueVector& z, Norm norm) {
    require_same_size(TV.size(), U.size(), "criterion_z");
    require_same_size(TV.size(), z.size(), "criterion_z");
    double dot = -std::numeric_limits<double>::infinity();  // <TV|z>
    for (std::size_t s = 0; s < TV.size(); ++s)
        if (z[s].is_finite()) dot = std::max(dot, TV[s].value() + z[s].value());
    if (dot == -std::numeric_limits<double>::infinity())
        throw ResiduationError("criterion_z: atom is bottom everywhere");
    detail::Aggregate agg{norm};
    for (std::size_t s = 0; s < TV.size(); ++s) {
        double r = U[s].value() - TV[s].value();
        if (z[s].is_finite()) r = std::min(r, dot - TV[s].value() - z[s].value());
        agg.add(r);
    }
    return agg.acc;
}

inline double criterion_z(const ValueVector& TV, const ValueVector& U, const Atom& z, Norm norm,
                          const Grid* grid) {
    return criterion_z(TV, U, detail::tabulate_atom(z, TV.size(), grid), norm);
}

struct TraceRow {
    std::size_t n = 0;
    double err_l1 = 0.0;
    double err_linf = 0.0;
    std::string atom_kind;
    std::string atom_desc;
    std::size_t rho = 1;
    Norm norm = Norm::L1;
    int split_dim = -1;  // partition mode: dimension of the adopted split (0-based)
};

struct GreedyOptions {
    Norm norm = Norm::L1;
    double tol = 1e-8;
    std::size_t max_iter = 1000000;
    /// Cap on the number of distance-atom centers in the candidate pool.
    std::size_t pool_cap = 512;
    /// Distance-atom scales, as multiples of the Lipschitz constant of TV.
    std::vector<double> scale_factors{0.5, 1.0, 2.0};
    /// Add the same atom to W and Z, chosen by the sum of both criteria.
    bool coupled = false;
};

struct GreedyRunState {
    std::shared_ptr<const Grid> grid;
    std::shared_ptr<const BellmanPower> T;
    Dictionary W, Z;
    CompiledForms forms;
    FormsWorkspace workspace;
    Coefficients alpha, beta;
    ValueVector V, U, TV;
    std::optional<Partition> partition;  // set in partition mode (W = Z = its indicators)
    std::optional<ValueVector> reference;  // V* for error reporting
    std::vector<TraceRow> error_trace;
    std::size_t solver_iterations = 0;

    std::size_t atom_count() const noexcept { return W.size(); }
};

struct SplitProposal {
    std::size_t cell = 0;
    std::size_t dim = 0;
};

struct CandidatePool {
    std::vector<Atom> atoms;            // non-partition mode
    std::vector<SplitProposal> splits;  // partition mode

    bool empty() const noexcept { return atoms.empty() && splits.empty(); }
    std::size_t size() const noexcept { return atoms.size() + splits.size(); }
};

namespace detail {

/// Solves to the fixed point from alpha0 and refreshes V, TV, U.
inline void solve_state(GreedyRunState& st, const Coefficients& alpha0, const GreedyOptions& opt) {
    auto res = run_reduced_vi(st.forms, st.W, alpha0, opt.tol, opt.max_iter);
    st.solver_iterations = res.state.iteration;
    st.alpha = std::move(res.state.alpha);
    st.V = std::move(res.V);
    st.TV = st.T->apply(st.V);
    st.beta = transpose_apply(st.Z, st.TV);
    st.U = transpose_residuate(st.Z, st.beta);
}

inline void push_trace(GreedyRunState& st, const std::string& kind, const std::string& desc, Norm norm,
                       int split_dim) {
    TraceRow row;
    row.n = st.atom_count();
    if (st.reference) {
        const auto e = error_metrics(st.V, *st.reference);
        row.err_l1 = e.l1;
        row.err_linf = e.linf;
    } else {
        row.err_l1 = row.err_linf = std::numeric_limits<double>::quiet_NaN();
    }
    row.atom_kind = kind;
    row.atom_desc = desc;
    row.rho = st.T->rho();
    row.norm = norm;
    row.split_dim = split_dim;
    st.error_trace.push_back(std::move(row));
}

inline std::string box_desc(const Box& b) {
    std::string out;
    for (std::size_t k = 0; k < b.size(); ++k) {
        if (k) out += "x";
        out += std::to_string(b[k].index) + "/" + std::to_string(std::uint64_t{1} << b[k].level);
    }
    return out;
}

}  // namespace detail

/**
 * Initial state with explicit dictionaries. The first trace row records
 * the starting error with atom kind "initial".
 */
inline GreedyRunState make_greedy_state(std::shared_ptr<const BellmanPower> T, Dictionary W, Dictionary Z,
                                        std::optional<ValueVector> reference, const GreedyOptions& opt,
                                        std::optional<Coefficients> alpha0 = std::nullopt) {
    GreedyRunState st;
    st.grid = W.grid_ptr() ? W.grid_ptr() : Z.grid_ptr();
    st.T = std::move(T);
    st.W = std::move(W);
    st.Z = std::move(Z);
    st.reference = std::move(reference);
    st.forms = compile_forms(*st.T, st.W, st.Z, &st.workspace);
    detail::solve_state(st, alpha0 ? *alpha0 : default_alpha0(st.W), opt);
    detail::push_trace(st, "initial", "", opt.norm, -1);
    return st;
}

/// Initial state in partition mode; P must carry a box description.
inline GreedyRunState make_partition_state(std::shared_ptr<const BellmanPower> T, std::shared_ptr<const Grid> grid,
                                           Partition P, std::optional<ValueVector> reference,
                                           const GreedyOptions& opt,
                                           std::optional<Coefficients> alpha0 = std::nullopt) {
    if (!P.has_boxes()) throw std::invalid_argument("make_partition_state: partition needs dyadic boxes");
    Dictionary D = make_partition_dictionary(P, grid);
    auto st = make_greedy_state(std::move(T), D, D, std::move(reference), opt, std::move(alpha0));
    st.grid = std::move(grid);
    st.partition = std::move(P);
    return st;
}

/**
 * One dyadic midpoint split per dimension of the cell containing the state
 * with the largest residual U - TV (first index on ties).
 */
inline CandidatePool propose_partition_split(const GreedyRunState& st) {
    if (!st.partition || !st.grid) throw std::logic_error("propose_partition_split: not in partition mode");
    ValueVector gap(st.U.size());
    for (std::size_t s = 0; s < gap.size(); ++s) gap[s] = st.U[s].value() - st.TV[s].value();
    const auto s_star = static_cast<StateId>(argmax(gap));
    const std::size_t cell = st.partition->cell_of(s_star);
    CandidatePool pool;
    for (std::size_t k = 0; k < st.grid->dimension(); ++k)
        if (can_split(*st.partition, *st.grid, cell, k)) pool.splits.push_back({cell, k});
    if (pool.splits.empty())
        throw std::runtime_error("propose_partition_split: cell " + std::to_string(cell) +
                                 " cannot be split in any dimension");
    return pool;
}

/// Residual of TV's upper projection after splitting `p.cell` (W = Z, so this is the whole criterion).
inline double score_split(const GreedyRunState& st, const SplitProposal& p, Norm norm) {
    auto [lo, hi] = split_halves(*st.partition, *st.grid, p.cell, p.dim);
    double mlo = -std::numeric_limits<double>::infinity(), mhi = mlo;
    for (auto s : lo) mlo = std::max(mlo, st.TV[s].value());
    for (auto s : hi) mhi = std::max(mhi, st.TV[s].value());
    ValueVector Unew = st.U;
    for (auto s : lo) Unew[s] = std::min(Unew[s].value(), mlo);
    for (auto s : hi) Unew[s] = std::min(Unew[s].value(), mhi);
    return residual_norm(Unew, st.TV, norm);
}

/**
 * Distance atoms centered on a sub-grid (every k-th node per dimension,
 * k as small as keeps at most `cap` centers), with scales {1/2, 1, 2} x the
 * Lipschitz constant of the current TV and, in several dimensions, every
 * nonempty subset of dimensions.
 */
inline CandidatePool distance_candidate_pool(const GreedyRunState& st, std::size_t cap = 512,
                                             const std::vector<double>& factors = {0.5, 1.0, 2.0},
                                             Metric metric = Metric::L1) {
    if (!st.grid) throw std::logic_error("distance_candidate_pool: grid required");
    const Grid& g = *st.grid;
    std::size_t k = 1;
    auto count_at = [&](std::size_t step) {
        std::size_t c = 1;
        for (std::size_t d = 0; d < g.dimension(); ++d) c *= (g.size(d) - 1) / step + 1;
        return c;
    };
    while (count_at(k) > cap) ++k;
    std::vector<StateId> centers;
    for (std::size_t s = 0; s < g.state_count(); ++s) {
        bool keep = true;
        for (std::size_t d = 0; d < g.dimension() && keep; ++d)
            keep = g.node_index(static_cast<StateId>(s), d) % k == 0;
        if (keep) centers.push_back(static_cast<StateId>(s));
    }
    double lip = lipschitz_estimate(st.TV, g, Metric::L1);
    if (!(lip > 0.0)) lip = 1.0;
    std::vector<std::vector<std::size_t>> subsets;
    for (std::size_t mask = 1; mask < (std::size_t{1} << g.dimension()); ++mask) {
        std::vector<std::size_t> dims;
        for (std::size_t d = 0; d < g.dimension(); ++d)
            if (mask & (std::size_t{1} << d)) dims.push_back(d);
        subsets.push_back(std::move(dims));
    }
    CandidatePool pool;
    for (const auto& dims : subsets)
        for (double f : factors)
            for (auto c : centers) pool.atoms.push_back(make_distance(c, f * lip, dims, metric));
    return pool;
}

/**
 * Scores the pool and adopts the best proposal (first index on ties), then
 * recompiles the affected forms and re-solves from a warm start.
 */
inline void greedy_step(GreedyRunState& st, const CandidatePool& pool, const GreedyOptions& opt) {
    if (pool.empty()) throw std::invalid_argument("greedy_step: empty candidate pool");
    const std::size_t nw_old = st.W.size();
    if (st.partition) {
        if (pool.splits.empty()) throw std::invalid_argument("greedy_step: partition mode needs split proposals");
        std::size_t best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pool.splits.size(); ++i) {
            const double sc = score_split(st, pool.splits[i], opt.norm);
            if (sc < best_score) {
                best_score = sc;
                best = i;
            }
        }
        const auto p = pool.splits[best];
        Partition next = split_cell(*st.partition, *st.grid, p.cell, p.dim);
        const std::size_t added = next.cell_count() - 1;
        st.W.replace(p.cell, IndicatorAtom{next.cell(p.cell)});
        st.W.add(IndicatorAtom{next.cell(added)});
        st.Z = st.W;
        st.partition = std::move(next);
        update_forms(st.forms, st.workspace, *st.T, st.W, st.Z, {p.cell, added}, {p.cell, added});
        detail::solve_state(st, residuate(st.W, st.V), opt);
        detail::push_trace(st, "indicator",
                           "split cell=" + std::to_string(p.cell) + " dim=" + std::to_string(p.dim + 1) +
                               " box=" + detail::box_desc(st.partition->box(p.cell)) + "|" +
                               detail::box_desc(st.partition->box(added)),
                           opt.norm, static_cast<int>(p.dim));
        return;
    }
    if (pool.atoms.empty()) throw std::invalid_argument("greedy_step: no atom proposals");
    const Grid* g = st.grid.get();
    std::size_t bw = 0, bz = 0;
    double sw = std::numeric_limits<double>::infinity(), sz = sw;
    for (std::size_t i = 0; i < pool.atoms.size(); ++i) {
        const ValueVector t = detail::tabulate_atom(pool.atoms[i], st.V.size(), g);
        const double cw = criterion_w(st.U, st.V, t, opt.norm);
        const double cz = criterion_z(st.TV, st.U, t, opt.norm);
        if (opt.coupled) {
            if (cw + cz < sw) {
                sw = cw + cz;
                bw = bz = i;
            }
            continue;
        }
        if (cw < sw) {
            sw = cw;
            bw = i;
        }
        if (cz < sz) {
            sz = cz;
            bz = i;
        }
    }
    st.W.add(pool.atoms[bw]);
    st.Z.add(pool.atoms[bz]);
    update_forms(st.forms, st.workspace, *st.T, st.W, st.Z, {nw_old}, {st.Z.size() - 1});
    detail::solve_state(st, residuate(st.W, st.V), opt);
    detail::push_trace(st, atom_kind(pool.atoms[bw]),
                       "w: " + describe(pool.atoms[bw]) + "; z: " + describe(pool.atoms[bz]), opt.norm, -1);
}

/// Greedy steps until the atom budget is reached. Returns the trace.
inline std::vector<TraceRow> run_matching_pursuit(GreedyRunState& st, std::size_t n_max, const GreedyOptions& opt) {
    if (n_max == 0) throw std::invalid_argument("run_matching_pursuit: budget must be positive");
    while (st.atom_count() < n_max) {
        const CandidatePool pool =
            st.partition ? propose_partition_split(st) : distance_candidate_pool(st, opt.pool_cap, opt.scale_factors);
        greedy_step(st, pool, opt);
    }
    return st.error_trace;
}

/// Linear family z_theta = sum_k theta_k phi_k with finite features.
struct LinearAtomParam {
    std::vector<ValueVector> features;
    std::vector<double> theta;
    double bound = 1e6;  // box constraint |theta_k| <= bound

    ValueVector evaluate() const {
        if (features.empty() || features.size() != theta.size())
            throw std::invalid_argument("LinearAtomParam: one coefficient per feature required");
        ValueVector z(features.front().size(), 0.0);
        for (std::size_t k = 0; k < features.size(); ++k) {
            if (!features[k].all_finite()) throw std::invalid_argument("LinearAtomParam: features must be finite");
            require_same_size(features[k].size(), z.size(), "LinearAtomParam");
            for (std::size_t s = 0; s < z.size(); ++s) z[s] = z[s].value() + theta[k] * features[k][s].value();
        }
        return z;
    }
};

struct MmResult {
    Atom atom;
    std::vector<double> theta;
    double objective = 0.0;
    std::size_t rounds = 0;
    std::vector<double> history;  // criterion after each round, starting with the initial value
};

/// Branch weights: 1 where U - TV is the smaller branch of the criterion, else 0.
inline std::vector<double> mm_branch_weights(const ValueVector& TV, const ValueVector& U, const ValueVector& z) {
    double dot = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < TV.size(); ++s) dot = std::max(dot, TV[s].value() + z[s].value());
    std::vector<double> eta(TV.size());
    for (std::size_t s = 0; s < TV.size(); ++s) {
        const double a = U[s].value() - TV[s].value();
        const double b = dot - TV[s].value() - z[s].value();
        eta[s] = a <= b ? 1.0 : 0.0;
    }
    return eta;
}

/**
 * Majorization-minimization on the Z criterion over a linear atom family.
 * Each round fixes the branch weights at the current atom, then runs 50
 * projected subgradient steps (step 1/sqrt(t)) on the convex majorant.
 * The best atom seen is kept, so the criterion never increases; a round
 * without improvement ends the loop.
 */
inline MmResult mm_refine_atom(const ValueVector& TV, const ValueVector& U, LinearAtomParam param, Norm norm,
                               std::size_t max_rounds, std::size_t inner_steps = 50) {
    require_same_size(TV.size(), U.size(), "mm_refine_atom");
    MmResult res;
    ValueVector z = param.evaluate();
    double best = criterion_z(TV, U, z, norm);
    std::vector<double> best_theta = param.theta;
    res.history.push_back(best);
    const std::size_t n = TV.size(), K = param.features.size();
    for (std::size_t round = 0; round < max_rounds && best > 0.0; ++round) {
        const std::vector<double> eta = mm_branch_weights(TV, U, z);
        std::vector<double> theta = best_theta;
        const double start = best;
        for (std::size_t t = 1; t <= inner_steps; ++t) {
            param.theta = theta;
            const ValueVector zt = param.evaluate();
            // majorant: agg_s eta a + (1 - eta)(<TV|z> - TV - z)
            std::size_t s_dot = 0;
            for (std::size_t s = 1; s < n; ++s)
                if (TV[s].value() + zt[s].value() > TV[s_dot].value() + zt[s_dot].value()) s_dot = s;
            const double dot = TV[s_dot].value() + zt[s_dot].value();
            std::vector<double> grad(K, 0.0);
            if (norm == Norm::L1) {
                for (std::size_t s = 0; s < n; ++s) {
                    const double w = 1.0 - eta[s];
                    if (w == 0.0) continue;
                    for (std::size_t k = 0; k < K; ++k)
                        grad[k] += w * (param.features[k][s_dot].value() - param.features[k][s].value());
                }
            } else {
                std::size_t s_arg = 0;
                double m = -std::numeric_limits<double>::infinity();
                for (std::size_t s = 0; s < n; ++s) {
                    const double v = eta[s] * (U[s].value() - TV[s].value()) +
                                     (1.0 - eta[s]) * (dot - TV[s].value() - zt[s].value());
                    if (v > m) {
                        m = v;
                        s_arg = s;
                    }
                }
                const double w = 1.0 - eta[s_arg];
                for (std::size_t k = 0; k < K; ++k)
                    grad[k] = w * (param.features[k][s_dot].value() - param.features[k][s_arg].value());
            }
            double gn = 0.0;
            for (double gk : grad) gn += gk * gk;
            gn = std::sqrt(gn);
            if (gn == 0.0) break;
            const double step = 1.0 / std::sqrt(static_cast<double>(t));
            for (std::size_t k = 0; k < K; ++k)
                theta[k] = std::clamp(theta[k] - step * grad[k] / gn, -param.bound, param.bound);
            param.theta = theta;
            const ValueVector zc = param.evaluate();
            const double val = criterion_z(TV, U, zc, norm);
            if (val < best) {
                best = val;
                best_theta = theta;
            }
        }
        param.theta = best_theta;
        z = param.evaluate();
        res.history.push_back(best);
        ++res.rounds;
        if (!(best < start)) break;
    }
    param.theta = best_theta;
    res.theta = best_theta;
    res.objective = best;
    res.atom = TabulatedAtom{param.evaluate()};
    return res;
}

inline MmResult mm_refine_atom(const GreedyRunState& st, LinearAtomParam z_init, Norm norm, std::size_t max_rounds) {
    return mm_refine_atom(st.TV, st.U, std::move(z_init), norm, max_rounds);
}

}  // namespace mpadp

#pragma once

/**
 * @file reduced_vi.hpp
 * @brief Reduced value iteration on coefficients. With the forms
 * <z|w> and <z|T^rho w> tabulated once, each iteration costs O(|W| |Z|):
 *
 *     beta_{t+1}(z)  = max_w g alpha_t(w) + <z|T^rho w>
 *     alpha_{t+1}(w) = min_z beta_{t+1}(z) - <z|w>          (g = gamma^rho)
 *
 * which is V_{t+1} = W W+ Z^T+ Z^T T^rho V_t written on coefficients.
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dictionaries.hpp"
#include "dictionary.hpp"
#include "extended_value.hpp"
#include "hash.hpp"
#include "maxplus_core.hpp"
#include "mdp.hpp"
#include "partition.hpp"

namespace mpadp {

/// Dense |Z| x |W| matrix of extended values, row-major.
class FormMatrix {
public:
    FormMatrix() = default;
    FormMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, -std::numeric_limits<double>::infinity()) {}
    FormMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows * cols) throw std::invalid_argument("FormMatrix: data size mismatch");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    ExtendedValue at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double raw(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    void set(std::size_t r, std::size_t c, ExtendedValue v) { data_[r * cols_ + c] = v.value(); }

    /// Grows to rows x cols, keeping existing entries; new entries are bottom.
    void resize(std::size_t rows, std::size_t cols) {
        if (rows == rows_ && cols == cols_) return;
        std::vector<double> next(rows * cols, -std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < std::min(rows, rows_); ++r)
            for (std::size_t c = 0; c < std::min(cols, cols_); ++c) next[r * cols + c] = data_[r * cols_ + c];
        rows_ = rows;
        cols_ = cols;
        data_ = std::move(next);
    }

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const FormMatrix&, const FormMatrix&) = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

enum class PowerStrategy { Auto, Sweep, Compiled };

/**
 * The operator T^rho of an MDP. Either applied as rho Bellman sweeps or as
 * one sweep of the compiled power MDP. Auto compiles when the dense path
 * of compile_power applies.
 */
class BellmanPower {
public:
    BellmanPower(const DeterministicMdp& M, std::size_t rho, PowerStrategy strategy = PowerStrategy::Auto,
                 const CompilePowerOptions& opts = {})
        : base_(M), rho_(rho) {
        if (rho == 0) throw std::invalid_argument("BellmanPower: rho must be at least 1");
        if (strategy == PowerStrategy::Auto)
            strategy = rho > 1 && M.state_count() <= opts.dense_threshold ? PowerStrategy::Compiled
                                                                          : PowerStrategy::Sweep;
        if (strategy == PowerStrategy::Compiled && rho > 1) compiled_ = compile_power(M, rho, opts);
        gamma_eff_ = std::pow(M.gamma(), static_cast<double>(rho));
    }

    std::size_t rho() const noexcept { return rho_; }
    double gamma_eff() const noexcept { return gamma_eff_; }
    const DeterministicMdp& base() const noexcept { return base_; }
    bool is_compiled() const noexcept { return compiled_.has_value() || rho_ == 1; }
    std::size_t state_count() const noexcept { return base_.state_count(); }

    ValueVector apply(const ValueVector& V) const {
        if (compiled_) return bellman_apply(*compiled_, V);
        return bellman_power_apply(base_, V, rho_);
    }

    /// The MDP with Bellman operator T^rho (compiled on first use if needed).
    const DeterministicMdp& power_mdp() const {
        if (rho_ == 1) return base_;
        if (!compiled_) compiled_ = compile_power(base_, rho_);
        return *compiled_;
    }

private:
    DeterministicMdp base_;
    std::size_t rho_;
    double gamma_eff_ = 0.0;
    mutable std::optional<DeterministicMdp> compiled_;
};

struct CompiledForms {
    FormMatrix zw;   // <z|w>
    FormMatrix zTw;  // <z|T^rho w>
    std::size_t rho = 1;
    double gamma_eff = 0.0;
    std::uint64_t mdp_hash = 0;
    std::uint64_t w_hash = 0;
    std::uint64_t z_hash = 0;

    std::size_t z_count() const noexcept { return zw.rows(); }
    std::size_t w_count() const noexcept { return zw.cols(); }
};

/**
 * Dense tabulations kept between incremental recompilations: each atom w
 * and its image T^rho w.
 */
struct FormsWorkspace {
    std::vector<ValueVector> w_tab;
    std::vector<ValueVector> tw_tab;
};

namespace detail {

inline void require_nonempty_atoms(const Dictionary& D, const char* which) {
    for (std::size_t i = 0; i < D.size(); ++i)
        if (D.support(i).empty())
            throw ResiduationError(std::string("compile_forms: atom ") + std::to_string(i) + " of " + which +
                                   " is bottom everywhere");
}

inline void fill_column(CompiledForms& F, const Dictionary& Z, std::size_t w, const ValueVector& wt,
                        const ValueVector& twt) {
    for (std::size_t z = 0; z < Z.size(); ++z) {
        F.zw.set(z, w, maxplus_dot(Z, z, wt));
        F.zTw.set(z, w, maxplus_dot(Z, z, twt));
    }
}

}  // namespace detail

/**
 * Recomputes the columns listed in `w_changed` and the rows listed in
 * `z_changed`, growing the matrices to |Z| x |W| first. Indices past the
 * old sizes must be listed. The workspace is updated alongside.
 */
inline void update_forms(CompiledForms& F, FormsWorkspace& ws, const BellmanPower& T, const Dictionary& W,
                         const Dictionary& Z, const std::vector<std::size_t>& w_changed,
                         const std::vector<std::size_t>& z_changed) {
    require_same_size(W.state_count(), T.state_count(), "compile_forms");
    require_same_size(Z.state_count(), T.state_count(), "compile_forms");
    F.zw.resize(Z.size(), W.size());
    F.zTw.resize(Z.size(), W.size());
    ws.w_tab.resize(W.size());
    ws.tw_tab.resize(W.size());
    for (auto w : w_changed) {
        if (W.support(w).empty())
            throw ResiduationError("compile_forms: atom " + std::to_string(w) + " of W is bottom everywhere");
        ws.w_tab[w] = W.tabulate(w);
        ws.tw_tab[w] = T.apply(ws.w_tab[w]);
        detail::fill_column(F, Z, w, ws.w_tab[w], ws.tw_tab[w]);
    }
    for (auto z : z_changed) {
        if (Z.support(z).empty())
            throw ResiduationError("compile_forms: atom " + std::to_string(z) + " of Z is bottom everywhere");
        for (std::size_t w = 0; w < W.size(); ++w) {
            F.zw.set(z, w, maxplus_dot(Z, z, ws.w_tab[w]));
            F.zTw.set(z, w, maxplus_dot(Z, z, ws.tw_tab[w]));
        }
    }
    F.rho = T.rho();
    F.gamma_eff = T.gamma_eff();
    F.mdp_hash = hash_mdp(T.base());
    F.w_hash = hash_dictionary(W);
    F.z_hash = hash_dictionary(Z);
}

inline CompiledForms compile_forms(const BellmanPower& T, const Dictionary& W, const Dictionary& Z,
                                   FormsWorkspace* workspace = nullptr) {
    detail::require_nonempty_atoms(W, "W");
    detail::require_nonempty_atoms(Z, "Z");
    CompiledForms F;
    FormsWorkspace local;
    FormsWorkspace& ws = workspace ? *workspace : local;
    ws.w_tab.clear();
    ws.tw_tab.clear();
    std::vector<std::size_t> all_w(W.size());
    for (std::size_t i = 0; i < all_w.size(); ++i) all_w[i] = i;
    update_forms(F, ws, T, W, Z, all_w, {});
    return F;
}

inline CompiledForms compile_forms(const DeterministicMdp& M, const Dictionary& W, const Dictionary& Z,
                                   std::size_t rho, PowerStrategy strategy = PowerStrategy::Auto) {
    return compile_forms(BellmanPower(M, rho, strategy), W, Z);
}

struct ReducedState {
    Coefficients alpha;
    Coefficients beta;
    std::size_t iteration = 0;
    double residual = 0.0;  // ||alpha_t - alpha_{t-1}||_inf
};

/// beta_{t+1} = Z^T T^rho W alpha_t on coefficients.
inline Coefficients reduced_beta(const CompiledForms& F, const Coefficients& alpha) {
    require_same_size(alpha.size(), F.w_count(), "reduced_step");
    const std::size_t nz = F.z_count(), nw = F.w_count();
    Coefficients beta(nz);
    for (std::size_t z = 0; z < nz; ++z) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t w = 0; w < nw; ++w) {
            const double a = alpha[w].value();
            const double f = F.zTw.raw(z, w);
            if (a == -std::numeric_limits<double>::infinity() || f == -std::numeric_limits<double>::infinity())
                continue;
            const double v = F.gamma_eff * a + f;
            if (v > m) m = v;
        }
        beta[z] = m;
    }
    return beta;
}

/// alpha = W+ Z^T+ beta on coefficients.
inline Coefficients reduced_alpha(const CompiledForms& F, const Coefficients& beta) {
    require_same_size(beta.size(), F.z_count(), "reduced_step");
    const std::size_t nz = F.z_count(), nw = F.w_count();
    Coefficients alpha(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t z = 0; z < nz; ++z) {
            const double f = F.zw.raw(z, w);
            if (f == -std::numeric_limits<double>::infinity()) continue;
            const double v = beta[z].value() - f;
            if (v < m) m = v;
        }
        if (m == std::numeric_limits<double>::infinity())
            throw ResiduationError("reduced_step: atom " + std::to_string(w) + " of W meets no atom of Z");
        alpha[w] = m;
    }
    return alpha;
}

inline std::pair<Coefficients, Coefficients> reduced_step(const CompiledForms& F, const Coefficients& alpha) {
    Coefficients beta = reduced_beta(F, alpha);
    Coefficients next = reduced_alpha(F, beta);
    return {std::move(beta), std::move(next)};
}

struct ReducedResult {
    ReducedState state;
    ValueVector V;                          // W alpha at the returned iterate
    std::vector<double> residual_history;  // ||alpha_{t+1} - alpha_t||_inf per step
};

class ReducedConvergenceError : public std::runtime_error {
public:
    ReducedConvergenceError(const std::string& what, ReducedState last)
        : std::runtime_error(what), last_(std::move(last)) {}
    const ReducedState& last_state() const noexcept { return last_; }

private:
    ReducedState last_;
};

/// alpha_0 = W+ 0.
inline Coefficients default_alpha0(const Dictionary& W) { return residuate(W, ValueVector(W.state_count(), 0.0)); }

/**
 * Iterates reduced_step until ||alpha_{t+1} - alpha_t||_inf <= tol (1 - g).
 * By contraction the returned W alpha is then within tol of V_inf.
 */
inline ReducedResult run_reduced_vi(const CompiledForms& F, const Dictionary& W, const Coefficients& alpha0,
                                    double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("run_reduced_vi: tol must be positive");
    require_same_size(W.size(), F.w_count(), "run_reduced_vi");
    require_same_size(alpha0.size(), F.w_count(), "run_reduced_vi");
    const double threshold = tol * (1.0 - F.gamma_eff);
    ReducedResult res;
    ReducedState& st = res.state;
    st.alpha = alpha0;
    for (std::size_t t = 0;; ++t) {
        auto [beta, next] = reduced_step(F, st.alpha);
        const double r = sup_distance(next, st.alpha);
        res.residual_history.push_back(r);
        st.beta = std::move(beta);
        st.alpha = std::move(next);
        st.iteration = t + 1;
        st.residual = r;
        if (r <= threshold) break;
        if (t + 1 >= max_iter)
            throw ReducedConvergenceError("run_reduced_vi: no convergence after " + std::to_string(max_iter) +
                                              " iterations (residual " + std::to_string(r) + ")",
                                          st);
    }
    res.V = eval_dictionary(W, st.alpha);
    return res;
}

inline ReducedResult run_reduced_vi(const CompiledForms& F, const Dictionary& W, double tol,
                                    std::size_t max_iter) {
    return run_reduced_vi(F, W, default_alpha0(W), tol, max_iter);
}

/// Upper envelope U = Z^T+ beta.
inline ValueVector upper_envelope(const Dictionary& Z, const Coefficients& beta) {
    return transpose_residuate(Z, beta);
}

/**
 * Cluster MDP of T^rho: R(w,w') = max over s in A(w), s' in A(w') of
 * R_rho(s,s'), with discount gamma^rho. Without a compiled power, the
 * rows come from T^rho applied to cell indicators.
 */
inline DeterministicMdp cluster_mdp(const BellmanPower& T, const Partition& P) {
    if (T.is_compiled()) {
        auto R = reduced_mdp_from_partition(T.power_mdp(), P);
        return R;
    }
    const std::size_t k = P.cell_count();
    std::vector<Edge> edges;
    for (std::size_t c2 = 0; c2 < k; ++c2) {
        ValueVector ind(P.state_count());
        for (auto s : P.cell(c2)) ind[s] = 0.0;
        const ValueVector t = T.apply(ind);
        for (std::size_t c = 0; c < k; ++c) {
            double m = -std::numeric_limits<double>::infinity();
            for (auto s : P.cell(c)) m = std::max(m, t[s].value());
            if (m != -std::numeric_limits<double>::infinity())
                edges.push_back({static_cast<StateId>(c), static_cast<StateId>(c2), m});
        }
    }
    return DeterministicMdp(k, T.gamma_eff(), std::move(edges));
}

/**
 * Reduced value iteration with W = Z = indicators of P, run as plain value
 * iteration on the cluster MDP and broadcast back to states. The result is
 * within tol of V_inf.
 */
inline ValueVector partition_reduced_vi(const BellmanPower& T, const Partition& P, double tol,
                                        std::size_t max_iter = 1000000) {
    require_same_size(P.state_count(), T.state_count(), "partition_reduced_vi");
    const DeterministicMdp C = cluster_mdp(T, P);
    const double g = C.gamma();
    auto vi = value_iteration(C, ValueVector(C.state_count(), 0.0), tol * (1.0 - g), max_iter);
    ValueVector V(P.state_count());
    for (std::size_t s = 0; s < V.size(); ++s) V[s] = vi.values[P.cell_of(static_cast<StateId>(s))];
    return V;
}

inline ValueVector partition_reduced_vi(const DeterministicMdp& M, const Partition& P, std::size_t rho, double tol,
                                        std::size_t max_iter = 1000000) {
    return partition_reduced_vi(BellmanPower(M, rho), P, tol, max_iter);
}

/// 2 eta / (1 - gamma_eff): distance from V_inf to V* when both projections of V* are within eta.
inline double fixed_point_error_bound(double eta, double gamma_eff) {
    if (eta < 0.0) throw std::invalid_argument("fixed_point_error_bound: eta must be nonnegative");
    if (!(gamma_eff >= 0.0 && gamma_eff < 1.0))
        throw std::invalid_argument("fixed_point_error_bound: gamma_eff must lie in [0,1)");
    return 2.0 * eta / (1.0 - gamma_eff);
}

/// 2 eta (1 + tau/rho) with tau = 1/(1 - gamma): the same bound stated with the per-step horizon.
inline double fixed_point_error_bound_horizon(double eta, double gamma, std::size_t rho) {
    if (rho == 0) throw std::invalid_argument("fixed_point_error_bound_horizon: rho must be positive");
    return 2.0 * eta * (1.0 + horizon(gamma) / static_cast<double>(rho));
}

}  // namespace mpadp

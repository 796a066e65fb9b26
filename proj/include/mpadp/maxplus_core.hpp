#pragma once

/**
 * @file maxplus_core.hpp
 * @brief Dictionaries as max-plus linear operators and their residuations.
 *
 *   W alpha (s)     = max_w alpha(w) + w(s)          eval_dictionary
 *   W+ V (w)        = min_s V(s) - w(s)              residuate
 *   Z^T V (z)       = max_s V(s) + z(s)              transpose_apply
 *   Z^T+ beta (s)   = min_z beta(z) - z(s)           transpose_residuate
 *
 * W W+ is the lower projection onto the image of W (result <= V) and
 * Z^T+ Z^T the upper projection onto the image of Z^T+ (result >= V).
 * Pairs where an atom is bottom impose no constraint and are skipped.
 */

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dictionary.hpp"
#include "extended_value.hpp"

namespace mpadp {

/// Residuation over an empty constraint set (would be +infinity).
class ResiduationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline ValueVector eval_dictionary(const Dictionary& W, const Coefficients& alpha) {
    require_same_size(alpha.size(), W.size(), "eval_dictionary");
    ValueVector out(W.state_count());
    for (std::size_t w = 0; w < W.size(); ++w) {
        if (alpha[w].is_bottom()) continue;
        const double a = alpha[w].value();
        for (const auto& e : W.support(w)) {
            const double v = a + e.value;
            if (v > out[e.state].value()) out[e.state] = v;
        }
    }
    return out;
}

inline Coefficients residuate(const Dictionary& W, const ValueVector& V) {
    require_same_size(V.size(), W.state_count(), "residuate");
    Coefficients out(W.size());
    for (std::size_t w = 0; w < W.size(); ++w) {
        const auto sup = W.support(w);
        if (sup.empty())
            throw ResiduationError("residuate: atom " + std::to_string(w) + " is bottom everywhere");
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : sup) {
            // a bottom V(s) against a finite atom forces the coefficient to bottom
            const double v = V[e.state].value() - e.value;
            if (v < m) m = v;
        }
        out[w] = m;
    }
    return out;
}

inline Coefficients transpose_apply(const Dictionary& Z, const ValueVector& V) {
    require_same_size(V.size(), Z.state_count(), "transpose_apply");
    Coefficients out(Z.size());
    for (std::size_t z = 0; z < Z.size(); ++z) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& e : Z.support(z)) {
            if (V[e.state].is_bottom()) continue;
            const double v = V[e.state].value() + e.value;
            if (v > m) m = v;
        }
        out[z] = m;
    }
    return out;
}

inline ValueVector transpose_residuate(const Dictionary& Z, const Coefficients& beta) {
    require_same_size(beta.size(), Z.size(), "transpose_residuate");
    std::vector<double> acc(Z.state_count(), std::numeric_limits<double>::infinity());
    for (std::size_t z = 0; z < Z.size(); ++z) {
        const double b = beta[z].value();
        for (const auto& e : Z.support(z)) {
            const double v = b - e.value;
            if (v < acc[e.state]) acc[e.state] = v;
        }
    }
    ValueVector out(Z.state_count());
    for (std::size_t s = 0; s < acc.size(); ++s) {
        if (acc[s] == std::numeric_limits<double>::infinity())
            throw ResiduationError("transpose_residuate: state " + std::to_string(s) +
                                   " is not covered by any atom");
        out[s] = acc[s];
    }
    return out;
}

/// W W+ V: the largest element of the image of W below V.
inline ValueVector project_lower(const Dictionary& W, const ValueVector& V) {
    return eval_dictionary(W, residuate(W, V));
}

/// Z^T+ Z^T V: the smallest element of the image of Z^T+ above V.
inline ValueVector project_upper(const Dictionary& Z, const ValueVector& V) {
    return transpose_residuate(Z, transpose_apply(Z, V));
}

/// <a | b> = max_i a(i) + b(i).
template <class Tag>
ExtendedValue maxplus_dot(const ExtVector<Tag>& a, const ExtVector<Tag>& b) {
    require_same_size(a.size(), b.size(), "maxplus_dot");
    ExtendedValue m = kBottom;
    for (std::size_t i = 0; i < a.size(); ++i) m = oplus(m, otimes(a[i], b[i]));
    return m;
}

/// <z | V> for atom z of a dictionary.
inline ExtendedValue maxplus_dot(const Dictionary& Z, std::size_t z, const ValueVector& V) {
    require_same_size(V.size(), Z.state_count(), "maxplus_dot");
    ExtendedValue m = kBottom;
    for (const auto& e : Z.support(z)) m = oplus(m, otimes(e.value, V[e.state]));
    return m;
}

}  // namespace mpadp

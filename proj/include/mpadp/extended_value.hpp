#pragma once

/**
 * @file extended_value.hpp
 * @brief Max-plus scalars (reals extended with a bottom element) and the
 * dense vector types indexed by states or by atoms.
 *
 * In the max-plus semiring "addition" is max and "multiplication" is +.
 * The bottom element plays the role of zero: it is neutral for max and
 * absorbing for +. It is stored as -infinity; +infinity and NaN are
 * rejected at construction so they can never enter a computation.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpadp {

class ExtendedValue {
public:
    constexpr ExtendedValue() noexcept : v_(kBottomRaw) {}

    // implicit on purpose: finite doubles are the common case
    constexpr ExtendedValue(double x) : v_(check(x)) {}  // NOLINT

    static constexpr ExtendedValue bottom() noexcept { return ExtendedValue{}; }

    constexpr bool is_bottom() const noexcept { return v_ == kBottomRaw; }
    constexpr bool is_finite() const noexcept { return v_ != kBottomRaw; }

    /// Raw value, -infinity for bottom.
    constexpr double value() const noexcept { return v_; }
    constexpr operator double() const noexcept { return v_; }  // NOLINT

private:
    static constexpr double kBottomRaw = -std::numeric_limits<double>::infinity();

    static constexpr double check(double x) {
        if (x != x) throw std::domain_error("ExtendedValue: NaN is not a max-plus scalar");
        if (x == std::numeric_limits<double>::infinity())
            throw std::domain_error("ExtendedValue: +infinity is not a max-plus scalar");
        return x;
    }

    double v_;
};

inline constexpr ExtendedValue kBottom = ExtendedValue::bottom();

/// a ⊕ b = max(a, b); bottom is neutral.
constexpr ExtendedValue oplus(ExtendedValue a, ExtendedValue b) noexcept {
    return a.value() >= b.value() ? a : b;
}

/// a ⊗ b = a + b; bottom is absorbing.
constexpr ExtendedValue otimes(ExtendedValue a, ExtendedValue b) noexcept {
    if (a.is_bottom() || b.is_bottom()) return kBottom;
    return ExtendedValue{a.value() + b.value()};
}

/// c·a for a nonnegative real c (the max-plus power a^{⊗c}); bottom stays bottom.
constexpr ExtendedValue scale(double c, ExtendedValue a) noexcept {
    if (a.is_bottom()) return kBottom;
    return ExtendedValue{c * a.value()};
}

/// Residual a - b for a finite b. Callers skip pairs with bottom b explicitly.
constexpr ExtendedValue residual(ExtendedValue a, ExtendedValue b) {
    if (b.is_bottom()) throw std::domain_error("residual: subtracting bottom is undefined");
    if (a.is_bottom()) return kBottom;
    return ExtendedValue{a.value() - b.value()};
}

/**
 * Dense array of extended values. The tag separates vectors indexed by
 * state ids from coefficient vectors indexed by atom ids.
 */
template <class Tag>
class ExtVector {
public:
    using value_type = ExtendedValue;
    using iterator = typename std::vector<ExtendedValue>::iterator;
    using const_iterator = typename std::vector<ExtendedValue>::const_iterator;

    ExtVector() = default;
    explicit ExtVector(std::size_t n, ExtendedValue fill = kBottom) : data_(n, fill) {}
    ExtVector(std::initializer_list<ExtendedValue> init) : data_(init) {}
    explicit ExtVector(std::vector<ExtendedValue> values) : data_(std::move(values)) {}
    explicit ExtVector(const std::vector<double>& values) : data_(values.begin(), values.end()) {}

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    ExtendedValue& operator[](std::size_t i) noexcept { return data_[i]; }
    const ExtendedValue& operator[](std::size_t i) const noexcept { return data_[i]; }
    ExtendedValue& at(std::size_t i) { return data_.at(i); }
    const ExtendedValue& at(std::size_t i) const { return data_.at(i); }

    iterator begin() noexcept { return data_.begin(); }
    iterator end() noexcept { return data_.end(); }
    const_iterator begin() const noexcept { return data_.begin(); }
    const_iterator end() const noexcept { return data_.end(); }

    void push_back(ExtendedValue v) { data_.push_back(v); }
    void resize(std::size_t n, ExtendedValue fill = kBottom) { data_.resize(n, fill); }

    std::span<const ExtendedValue> span() const noexcept { return data_; }
    std::span<ExtendedValue> span() noexcept { return data_; }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](ExtendedValue v) { return v.is_finite(); });
    }

    std::vector<double> to_doubles() const { return {data_.begin(), data_.end()}; }

    friend bool operator==(const ExtVector& a, const ExtVector& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].value() != b[i].value()) return false;
        return true;
    }

private:
    std::vector<ExtendedValue> data_;
};

struct StateIndexed {};
struct AtomIndexed {};

/// Function S -> R ∪ {-inf}, indexed by state id.
using ValueVector = ExtVector<StateIndexed>;
/// Coefficients over a dictionary (alpha over W, beta over Z).
using Coefficients = ExtVector<AtomIndexed>;

using StateId = std::uint32_t;

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                    " vs " + std::to_string(b) + ")");
}

/// Pointwise negation. Only defined for finite vectors.
template <class Tag>
ExtVector<Tag> negate(const ExtVector<Tag>& v) {
    ExtVector<Tag> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].is_bottom()) throw std::domain_error("negate: bottom entry has no finite negation");
        out[i] = -v[i].value();
    }
    return out;
}

/// Pointwise max.
template <class Tag>
ExtVector<Tag> pointwise_max(const ExtVector<Tag>& a, const ExtVector<Tag>& b) {
    require_same_size(a.size(), b.size(), "pointwise_max");
    ExtVector<Tag> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = oplus(a[i], b[i]);
    return out;
}

/// v + c for every entry (bottom entries stay bottom).
template <class Tag>
ExtVector<Tag> shifted(const ExtVector<Tag>& v, double c) {
    ExtVector<Tag> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = otimes(v[i], c);
    return out;
}

/**
 * Sup-norm distance. Matching bottom entries contribute 0; a bottom entry
 * against a finite one makes the distance infinite.
 */
template <class Tag>
double sup_distance(const ExtVector<Tag>& a, const ExtVector<Tag>& b) {
    require_same_size(a.size(), b.size(), "sup_distance");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].is_bottom() && b[i].is_bottom()) continue;
        if (a[i].is_bottom() || b[i].is_bottom()) return std::numeric_limits<double>::infinity();
        d = std::max(d, std::abs(a[i].value() - b[i].value()));
    }
    return d;
}

/// Sup-norm of a finite vector.
template <class Tag>
double sup_norm(const ExtVector<Tag>& a) {
    double d = 0.0;
    for (auto v : a) {
        if (v.is_bottom()) return std::numeric_limits<double>::infinity();
        d = std::max(d, std::abs(v.value()));
    }
    return d;
}

/// True if a <= b entrywise (with bottom below everything), up to slack.
template <class Tag>
bool pointwise_le(const ExtVector<Tag>& a, const ExtVector<Tag>& b, double slack = 0.0) {
    require_same_size(a.size(), b.size(), "pointwise_le");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].is_bottom()) continue;
        if (b[i].is_bottom()) return false;
        if (a[i].value() > b[i].value() + slack) return false;
    }
    return true;
}

/// First index attaining the maximum (first-index tie-break).
template <class Tag>
std::size_t argmax(const ExtVector<Tag>& v) {
    if (v.empty()) throw std::invalid_argument("argmax: empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].value() > v[best].value()) best = i;
    return best;
}

}  // namespace mpadp

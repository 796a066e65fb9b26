#pragma once

/**
 * @file grid.hpp
 * @brief Regular grids on [0,1]^d. State ids are row-major with the first
 * dimension varying fastest.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "extended_value.hpp"

namespace mpadp {

enum class Metric { L1, LInf };

inline const char* to_string(Metric m) { return m == Metric::L1 ? "l1" : "linf"; }

inline Metric metric_from_string(const std::string& s) {
    if (s == "l1") return Metric::L1;
    if (s == "linf") return Metric::LInf;
    throw std::invalid_argument("unknown metric '" + s + "' (expected l1 or linf)");
}

class Grid {
public:
    Grid() = default;

    explicit Grid(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
        if (sizes_.empty()) throw std::invalid_argument("Grid: dimension must be positive");
        count_ = 1;
        for (auto n : sizes_) {
            if (n < 2) throw std::invalid_argument("Grid: every dimension needs at least 2 nodes");
            count_ *= n;
        }
        strides_.resize(sizes_.size());
        std::size_t stride = 1;
        for (std::size_t k = 0; k < sizes_.size(); ++k) {
            strides_[k] = stride;
            stride *= sizes_[k];
        }
    }

    std::size_t dimension() const noexcept { return sizes_.size(); }
    std::size_t state_count() const noexcept { return count_; }
    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t size(std::size_t dim) const { return sizes_.at(dim); }

    /// Grid step 1/(n_k - 1) along dimension k.
    double step(std::size_t dim) const { return 1.0 / static_cast<double>(sizes_.at(dim) - 1); }

    std::size_t node_index(StateId s, std::size_t dim) const noexcept {
        return (s / strides_[dim]) % sizes_[dim];
    }

    double coordinate(StateId s, std::size_t dim) const noexcept {
        return static_cast<double>(node_index(s, dim)) / static_cast<double>(sizes_[dim] - 1);
    }

    std::vector<double> coordinates(StateId s) const {
        std::vector<double> x(dimension());
        for (std::size_t k = 0; k < dimension(); ++k) x[k] = coordinate(s, k);
        return x;
    }

    StateId state_of(const std::vector<std::size_t>& idx) const {
        if (idx.size() != dimension()) throw std::invalid_argument("Grid::state_of: wrong index arity");
        std::size_t s = 0;
        for (std::size_t k = 0; k < dimension(); ++k) {
            if (idx[k] >= sizes_[k]) throw std::out_of_range("Grid::state_of: index out of range");
            s += idx[k] * strides_[k];
        }
        return static_cast<StateId>(s);
    }

    /// Neighbor one step along `dim` in direction `dir` (+1/-1), or false at the boundary.
    bool neighbor(StateId s, std::size_t dim, int dir, StateId& out) const noexcept {
        const std::size_t i = node_index(s, dim);
        if (dir < 0 && i == 0) return false;
        if (dir > 0 && i + 1 >= sizes_[dim]) return false;
        out = dir > 0 ? static_cast<StateId>(s + strides_[dim]) : static_cast<StateId>(s - strides_[dim]);
        return true;
    }

    bool on_boundary(StateId s) const noexcept {
        for (std::size_t k = 0; k < dimension(); ++k) {
            const std::size_t i = node_index(s, k);
            if (i == 0 || i + 1 == sizes_[k]) return true;
        }
        return false;
    }

    /// Distance between two states restricted to `dims` (all dims when empty).
    double distance(StateId a, StateId b, Metric metric, const std::vector<std::size_t>& dims = {}) const {
        double acc = 0.0;
        auto visit = [&](std::size_t k) {
            const double d = std::abs(coordinate(a, k) - coordinate(b, k));
            acc = metric == Metric::L1 ? acc + d : std::max(acc, d);
        };
        if (dims.empty()) {
            for (std::size_t k = 0; k < dimension(); ++k) visit(k);
        } else {
            for (auto k : dims) visit(k);
        }
        return acc;
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.sizes_ == b.sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> strides_;
    std::size_t count_ = 0;
};

}  // namespace mpadp

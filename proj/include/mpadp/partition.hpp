#pragma once

/**
 * @file partition.hpp
 * @brief Partitions of the state space, optionally described by dyadic
 * boxes prod_i [j_i / 2^{k_i}, (j_i + 1) / 2^{k_i}] on a grid.
 *
 * A grid node x lies in [lo, hi) along a dimension, or in [lo, 1] for the
 * last interval, so dyadic boxes of one level tile the grid exactly.
 * Membership is decided in integer arithmetic.
 */

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "extended_value.hpp"
#include "grid.hpp"

namespace mpadp {

struct DyadicInterval {
    unsigned level = 0;
    std::uint64_t index = 0;

    friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
};

using Box = std::vector<DyadicInterval>;

inline bool node_in_interval(std::size_t i, std::size_t nodes, const DyadicInterval& iv) {
    const std::uint64_t scaled = static_cast<std::uint64_t>(i) << iv.level;
    const std::uint64_t span = nodes - 1;
    if (scaled < iv.index * span) return false;
    const bool last = iv.index + 1 == (std::uint64_t{1} << iv.level);
    return last ? scaled <= (iv.index + 1) * span : scaled < (iv.index + 1) * span;
}

inline bool state_in_box(const Grid& grid, StateId s, const Box& box) {
    for (std::size_t k = 0; k < grid.dimension(); ++k)
        if (!node_in_interval(grid.node_index(s, k), grid.size(k), box[k])) return false;
    return true;
}

class Partition {
public:
    Partition() = default;

    /// From explicit cells; they must be nonempty, disjoint, and cover 0..n-1.
    static Partition from_cells(std::size_t state_count, std::vector<std::vector<StateId>> cells,
                                std::optional<std::vector<Box>> boxes = std::nullopt) {
        Partition p;
        p.cell_of_.assign(state_count, kUnassigned);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto& cell = cells[c];
            if (cell.empty()) throw std::invalid_argument("Partition: empty cell " + std::to_string(c));
            std::sort(cell.begin(), cell.end());
            for (auto s : cell) {
                if (s >= state_count) throw std::out_of_range("Partition: state id out of range");
                if (p.cell_of_[s] != kUnassigned)
                    throw std::invalid_argument("Partition: state " + std::to_string(s) + " in two cells");
                p.cell_of_[s] = static_cast<std::uint32_t>(c);
            }
        }
        for (std::size_t s = 0; s < state_count; ++s)
            if (p.cell_of_[s] == kUnassigned)
                throw std::invalid_argument("Partition: state " + std::to_string(s) + " is in no cell");
        p.cells_ = std::move(cells);
        if (boxes && boxes->size() != p.cells_.size())
            throw std::invalid_argument("Partition: one box per cell required");
        p.boxes_ = std::move(boxes);
        return p;
    }

    /// From a cell assignment; cell ids must be 0..k-1 with every id used.
    static Partition from_assignment(const std::vector<std::uint32_t>& cell_of) {
        std::uint32_t k = 0;
        for (auto c : cell_of) k = std::max(k, c + 1);
        std::vector<std::vector<StateId>> cells(k);
        for (std::size_t s = 0; s < cell_of.size(); ++s) cells[cell_of[s]].push_back(static_cast<StateId>(s));
        return from_cells(cell_of.size(), std::move(cells));
    }

    std::size_t state_count() const noexcept { return cell_of_.size(); }
    std::size_t cell_count() const noexcept { return cells_.size(); }
    std::uint32_t cell_of(StateId s) const { return cell_of_.at(s); }
    const std::vector<std::uint32_t>& assignment() const noexcept { return cell_of_; }
    const std::vector<StateId>& cell(std::size_t c) const { return cells_.at(c); }
    const std::vector<std::vector<StateId>>& cells() const noexcept { return cells_; }

    bool has_boxes() const noexcept { return boxes_.has_value(); }
    const Box& box(std::size_t c) const {
        if (!boxes_) throw std::logic_error("Partition: no box description");
        return boxes_->at(c);
    }

    /// Checks that every box matches its cell membership exactly.
    bool boxes_consistent(const Grid& grid) const {
        if (!boxes_) return true;
        for (std::size_t s = 0; s < state_count(); ++s)
            for (std::size_t c = 0; c < cells_.size(); ++c)
                if (state_in_box(grid, static_cast<StateId>(s), (*boxes_)[c]) != (cell_of_[s] == c)) return false;
        return true;
    }

private:
    static constexpr std::uint32_t kUnassigned = 0xffffffffU;
    std::vector<std::uint32_t> cell_of_;
    std::vector<std::vector<StateId>> cells_;
    std::optional<std::vector<Box>> boxes_;
};

inline Partition singleton_partition(std::size_t state_count) {
    std::vector<std::vector<StateId>> cells(state_count);
    for (std::size_t s = 0; s < state_count; ++s) cells[s] = {static_cast<StateId>(s)};
    return Partition::from_cells(state_count, std::move(cells));
}

/**
 * Uniform dyadic partition with 2^{levels[k]} intervals along dimension k.
 * Cells are ordered with the first dimension varying fastest.
 */
inline Partition dyadic_partition(const Grid& grid, const std::vector<unsigned>& levels) {
    if (levels.size() != grid.dimension()) throw std::invalid_argument("dyadic_partition: one level per dimension");
    const std::size_t d = grid.dimension();
    std::vector<std::uint64_t> counts(d);
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) {
        if (levels[k] >= 32) throw std::invalid_argument("dyadic_partition: level too deep");
        counts[k] = std::uint64_t{1} << levels[k];
        total *= counts[k];
    }
    std::vector<Box> boxes(total, Box(d));
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        for (std::size_t k = 0; k < d; ++k) {
            boxes[c][k] = {levels[k], rem % counts[k]};
            rem /= counts[k];
        }
    }
    std::vector<std::vector<StateId>> cells(total);
    for (std::size_t s = 0; s < grid.state_count(); ++s) {
        std::size_t c = 0, stride = 1;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t i = grid.node_index(static_cast<StateId>(s), k);
            // first candidate interval from the floor, then adjust for the half-open rule
            std::uint64_t j = std::min<std::uint64_t>(counts[k] - 1, (static_cast<std::uint64_t>(i) << levels[k]) / (grid.size(k) - 1));
            while (j > 0 && !node_in_interval(i, grid.size(k), {levels[k], j})) --j;
            c += j * stride;
            stride *= counts[k];
        }
        cells[c].push_back(static_cast<StateId>(s));
    }
    // boxes finer than the grid can be empty; drop them
    std::vector<std::vector<StateId>> nonempty;
    std::vector<Box> kept;
    for (std::size_t c = 0; c < total; ++c) {
        if (cells[c].empty()) continue;
        nonempty.push_back(std::move(cells[c]));
        kept.push_back(std::move(boxes[c]));
    }
    return Partition::from_cells(grid.state_count(), std::move(nonempty), std::move(kept));
}

inline Partition single_cell_partition(const Grid& grid) {
    return dyadic_partition(grid, std::vector<unsigned>(grid.dimension(), 0U));
}

/// Halves of a cell's box along `dim`, as (lower, upper) state lists.
inline std::pair<std::vector<StateId>, std::vector<StateId>> split_halves(const Partition& P, const Grid& grid,
                                                                          std::size_t cell, std::size_t dim) {
    const Box& b = P.box(cell);
    const DyadicInterval lower{b[dim].level + 1, 2 * b[dim].index};
    std::vector<StateId> lo, hi;
    for (auto s : P.cell(cell)) {
        if (node_in_interval(grid.node_index(s, dim), grid.size(dim), lower))
            lo.push_back(s);
        else
            hi.push_back(s);
    }
    return {std::move(lo), std::move(hi)};
}

/// A cell can be split along `dim` when both dyadic halves contain grid nodes.
inline bool can_split(const Partition& P, const Grid& grid, std::size_t cell, std::size_t dim) {
    if (!P.has_boxes() || dim >= grid.dimension()) return false;
    if (P.box(cell)[dim].level >= 62) return false;
    auto [lo, hi] = split_halves(P, grid, cell, dim);
    return !lo.empty() && !hi.empty();
}

/**
 * Splits `cell` at the dyadic midpoint along `dim`. The lower half keeps the
 * cell id and the upper half is appended as a new last cell.
 */
inline Partition split_cell(const Partition& P, const Grid& grid, std::size_t cell, std::size_t dim) {
    if (!can_split(P, grid, cell, dim))
        throw std::invalid_argument("split_cell: cell " + std::to_string(cell) + " cannot be split along dimension " +
                                    std::to_string(dim + 1));
    auto [lo, hi] = split_halves(P, grid, cell, dim);
    std::vector<std::vector<StateId>> cells = P.cells();
    std::vector<Box> boxes;
    boxes.reserve(P.cell_count() + 1);
    for (std::size_t c = 0; c < P.cell_count(); ++c) boxes.push_back(P.box(c));
    Box lower = boxes[cell], upper = boxes[cell];
    lower[dim] = {boxes[cell][dim].level + 1, 2 * boxes[cell][dim].index};
    upper[dim] = {boxes[cell][dim].level + 1, 2 * boxes[cell][dim].index + 1};
    cells[cell] = std::move(lo);
    boxes[cell] = std::move(lower);
    cells.push_back(std::move(hi));
    boxes.push_back(std::move(upper));
    return Partition::from_cells(P.state_count(), std::move(cells), std::move(boxes));
}

}  // namespace mpadp

#pragma once

/**
 * @file dictionary.hpp
 * @brief A finite family of atoms over a fixed state space.
 *
 * Each atom is tabulated once at insertion as the list of its finite
 * entries. Bottom entries are never stored, so every kernel that walks a
 * support skips them by construction.
 */

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "atom.hpp"
#include "extended_value.hpp"
#include "grid.hpp"

namespace mpadp {

struct SupportEntry {
    StateId state;
    double value;
};

class Dictionary {
public:
    Dictionary() = default;

    explicit Dictionary(std::size_t state_count, std::shared_ptr<const Grid> grid = nullptr)
        : state_count_(state_count), grid_(std::move(grid)) {
        if (state_count_ == 0) throw std::invalid_argument("Dictionary: state_count must be positive");
        if (grid_ && grid_->state_count() != state_count_)
            throw std::invalid_argument("Dictionary: grid size differs from state_count");
    }

    std::size_t size() const noexcept { return atoms_.size(); }
    bool empty() const noexcept { return atoms_.empty(); }
    std::size_t state_count() const noexcept { return state_count_; }
    const Grid* grid() const noexcept { return grid_.get(); }
    const std::shared_ptr<const Grid>& grid_ptr() const noexcept { return grid_; }

    const Atom& atom(std::size_t i) const { return atoms_.at(i); }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }

    /// Finite entries of atom i, sorted by state id.
    std::span<const SupportEntry> support(std::size_t i) const { return support_.at(i); }

    std::size_t add(Atom a) {
        auto sup = tabulate_support(a);
        atoms_.push_back(std::move(a));
        support_.push_back(std::move(sup));
        return atoms_.size() - 1;
    }

    void replace(std::size_t i, Atom a) {
        if (i >= atoms_.size()) throw std::out_of_range("Dictionary::replace: index out of range");
        auto sup = tabulate_support(a);
        atoms_[i] = std::move(a);
        support_[i] = std::move(sup);
    }

    /// Dense tabulation of atom i.
    ValueVector tabulate(std::size_t i) const {
        ValueVector out(state_count_);
        for (const auto& e : support(i)) out[e.state] = e.value;
        return out;
    }

    ExtendedValue value(std::size_t i, StateId s) const { return evaluate_atom(atom(i), s, grid_.get()); }

    /// True if some atom is finite at every state.
    bool covers_all_states() const {
        std::vector<char> hit(state_count_, 0);
        for (const auto& sup : support_)
            for (const auto& e : sup) hit[e.state] = 1;
        for (char h : hit)
            if (!h) return false;
        return true;
    }

private:
    std::vector<SupportEntry> tabulate_support(const Atom& a) const {
        if (state_count_ == 0) throw std::logic_error("Dictionary: default-constructed dictionary");
        detail::validate_atom(a, state_count_, grid_.get());
        std::vector<SupportEntry> sup;
        if (auto* ind = std::get_if<IndicatorAtom>(&a)) {
            sup.reserve(ind->cell.size());
            for (auto s : ind->cell) sup.push_back({s, 0.0});
            return sup;
        }
        sup.reserve(state_count_);
        for (std::size_t s = 0; s < state_count_; ++s) {
            const ExtendedValue v = evaluate_atom(a, static_cast<StateId>(s), grid_.get());
            if (v.is_finite()) sup.push_back({static_cast<StateId>(s), v.value()});
        }
        return sup;
    }

    std::size_t state_count_ = 0;
    std::shared_ptr<const Grid> grid_;
    std::vector<Atom> atoms_;
    std::vector<std::vector<SupportEntry>> support_;
};

}  // namespace mpadp

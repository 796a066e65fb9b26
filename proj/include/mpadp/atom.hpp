#pragma once

/**
 * @file atom.hpp
 * @brief Dictionary atoms: basis functions S -> R ∪ {-inf}.
 *
 *  - IndicatorAtom:  0 on a cell, bottom elsewhere (piecewise-constant images).
 *  - DistanceAtom:   -c * d(s, center) over a subset of dimensions (piecewise-affine images).
 *  - BregmanAtom:    -h(x_s) + slope^T x_s with h(x) = lambda/2 ||x||^2.
 *  - TabulatedAtom:  explicit values.
 */

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "extended_value.hpp"
#include "grid.hpp"

namespace mpadp {

struct IndicatorAtom {
    std::vector<StateId> cell;  // sorted, nonempty
};

struct DistanceAtom {
    StateId center = 0;
    double scale = 1.0;
    std::vector<std::size_t> dims;  // 0-based, nonempty
    Metric metric = Metric::L1;
};

struct BregmanAtom {
    std::vector<double> slope;  // one entry per grid dimension
    double lambda = 1.0;        // quadratic reference h(x) = lambda/2 ||x||^2
};

struct TabulatedAtom {
    ValueVector values;
};

using Atom = std::variant<IndicatorAtom, DistanceAtom, BregmanAtom, TabulatedAtom>;

inline IndicatorAtom make_indicator(std::vector<StateId> cell) {
    if (cell.empty()) throw std::invalid_argument("IndicatorAtom: cell must be nonempty");
    std::sort(cell.begin(), cell.end());
    cell.erase(std::unique(cell.begin(), cell.end()), cell.end());
    return IndicatorAtom{std::move(cell)};
}

inline DistanceAtom make_distance(StateId center, double scale, std::vector<std::size_t> dims,
                                  Metric metric) {
    if (!(scale > 0.0)) throw std::invalid_argument("DistanceAtom: scale must be positive");
    if (dims.empty()) throw std::invalid_argument("DistanceAtom: dims must be nonempty");
    std::sort(dims.begin(), dims.end());
    dims.erase(std::unique(dims.begin(), dims.end()), dims.end());
    return DistanceAtom{center, scale, std::move(dims), metric};
}

inline const char* atom_kind(const Atom& a) {
    struct V {
        const char* operator()(const IndicatorAtom&) const { return "indicator"; }
        const char* operator()(const DistanceAtom&) const { return "distance"; }
        const char* operator()(const BregmanAtom&) const { return "bregman"; }
        const char* operator()(const TabulatedAtom&) const { return "tabulated"; }
    };
    return std::visit(V{}, a);
}

namespace detail {

inline void validate_atom(const Atom& a, std::size_t state_count, const Grid* grid) {
    if (auto* ind = std::get_if<IndicatorAtom>(&a)) {
        if (ind->cell.empty()) throw std::invalid_argument("IndicatorAtom: empty cell");
        if (!std::is_sorted(ind->cell.begin(), ind->cell.end()))
            throw std::invalid_argument("IndicatorAtom: cell must be sorted");
        if (ind->cell.back() >= state_count) throw std::out_of_range("IndicatorAtom: state id out of range");
    } else if (auto* dist = std::get_if<DistanceAtom>(&a)) {
        if (!grid) throw std::invalid_argument("DistanceAtom requires grid metadata");
        if (!(dist->scale > 0.0)) throw std::invalid_argument("DistanceAtom: scale must be positive");
        if (dist->dims.empty()) throw std::invalid_argument("DistanceAtom: dims must be nonempty");
        if (dist->center >= state_count) throw std::out_of_range("DistanceAtom: center out of range");
        for (auto k : dist->dims)
            if (k >= grid->dimension()) throw std::out_of_range("DistanceAtom: dimension out of range");
    } else if (auto* br = std::get_if<BregmanAtom>(&a)) {
        if (!grid) throw std::invalid_argument("BregmanAtom requires grid metadata");
        if (br->slope.size() != grid->dimension())
            throw std::invalid_argument("BregmanAtom: slope arity differs from grid dimension");
        if (br->lambda < 0.0) throw std::invalid_argument("BregmanAtom: lambda must be nonnegative");
    } else {
        const auto& tab = std::get<TabulatedAtom>(a);
        require_same_size(tab.values.size(), state_count, "TabulatedAtom");
    }
}

}  // namespace detail

/// Value of an atom at state s. `grid` may be null for indicator and tabulated atoms.
inline ExtendedValue evaluate_atom(const Atom& a, StateId s, const Grid* grid) {
    struct V {
        StateId s;
        const Grid* grid;
        ExtendedValue operator()(const IndicatorAtom& ind) const {
            return std::binary_search(ind.cell.begin(), ind.cell.end(), s) ? ExtendedValue{0.0} : kBottom;
        }
        ExtendedValue operator()(const DistanceAtom& d) const {
            if (!grid) throw std::invalid_argument("DistanceAtom requires grid metadata");
            return -d.scale * grid->distance(s, d.center, d.metric, d.dims);
        }
        ExtendedValue operator()(const BregmanAtom& b) const {
            if (!grid) throw std::invalid_argument("BregmanAtom requires grid metadata");
            double lin = 0.0, sq = 0.0;
            for (std::size_t k = 0; k < grid->dimension(); ++k) {
                const double x = grid->coordinate(s, k);
                lin += b.slope[k] * x;
                sq += x * x;
            }
            return lin - 0.5 * b.lambda * sq;
        }
        ExtendedValue operator()(const TabulatedAtom& t) const { return t.values.at(s); }
    };
    return std::visit(V{s, grid}, a);
}

/// Short human-readable description, used in traces.
inline std::string describe(const Atom& a) {
    std::ostringstream os;
    os.precision(6);
    if (auto* ind = std::get_if<IndicatorAtom>(&a)) {
        os << "cell[" << ind->cell.size() << "]";
        if (!ind->cell.empty()) os << "{" << ind->cell.front() << ".." << ind->cell.back() << "}";
    } else if (auto* d = std::get_if<DistanceAtom>(&a)) {
        os << "center=" << d->center << " c=" << d->scale << " dims=";
        for (std::size_t i = 0; i < d->dims.size(); ++i) os << (i ? "+" : "") << d->dims[i] + 1;
        os << " " << to_string(d->metric);
    } else if (auto* b = std::get_if<BregmanAtom>(&a)) {
        os << "slope=";
        for (std::size_t i = 0; i < b->slope.size(); ++i) os << (i ? "," : "") << b->slope[i];
        os << " lambda=" << b->lambda;
    } else {
        os << "tabulated[" << std::get<TabulatedAtom>(a).values.size() << "]";
    }
    return os.str();
}

}  // namespace mpadp

#pragma once

/**
 * @file dictionaries.hpp
 * @brief Atom families built on a grid (indicators of partition cells,
 * scaled distances, Bregman affine functions), greedy covers with their
 * Voronoi partitions, and the cluster MDP induced by a partition.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "atom.hpp"
#include "dictionary.hpp"
#include "grid.hpp"
#include "mdp.hpp"
#include "partition.hpp"

namespace mpadp {

struct CoverResult {
    std::vector<StateId> centers;
    double radius = 0.0;
};

/// One indicator atom per cell. The image of W is the set of functions constant on cells.
inline Dictionary make_partition_dictionary(const Partition& P, std::shared_ptr<const Grid> grid = nullptr) {
    Dictionary W(P.state_count(), std::move(grid));
    for (const auto& cell : P.cells()) W.add(IndicatorAtom{cell});
    return W;
}

inline Dictionary make_distance_dictionary(std::span<const StateId> centers, double scale,
                                           std::vector<std::size_t> dims, Metric metric,
                                           std::shared_ptr<const Grid> grid) {
    if (!grid) throw std::invalid_argument("make_distance_dictionary: grid required");
    if (dims.empty()) {
        dims.resize(grid->dimension());
        std::iota(dims.begin(), dims.end(), std::size_t{0});
    }
    Dictionary W(grid->state_count(), grid);
    for (auto c : centers) W.add(make_distance(c, scale, dims, metric));
    return W;
}

/// Atoms -h(x) + slope^T x with h(x) = lambda/2 ||x||^2.
inline Dictionary make_bregman_dictionary(const std::vector<std::vector<double>>& slopes, double lambda,
                                          std::shared_ptr<const Grid> grid) {
    if (!grid) throw std::invalid_argument("make_bregman_dictionary: grid required");
    Dictionary W(grid->state_count(), grid);
    for (const auto& m : slopes) W.add(BregmanAtom{m, lambda});
    return W;
}

/**
 * Greedy farthest-point cover seeded at the first candidate state. The
 * radius it reports is at most twice the optimal n-center radius.
 */
inline CoverResult k_center_cover(const Grid& grid, std::size_t n, Metric metric,
                                  std::span<const StateId> states = {}) {
    std::vector<StateId> all;
    if (states.empty()) {
        all.resize(grid.state_count());
        std::iota(all.begin(), all.end(), StateId{0});
        states = all;
    }
    if (n < 1 || n > states.size()) throw std::invalid_argument("k_center_cover: need 1 <= n <= |S|");
    CoverResult res;
    std::vector<double> dist(states.size(), std::numeric_limits<double>::infinity());
    std::size_t next = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const StateId c = states[next];
        res.centers.push_back(c);
        for (std::size_t i = 0; i < states.size(); ++i) dist[i] = std::min(dist[i], grid.distance(states[i], c, metric));
        next = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    }
    res.radius = *std::max_element(dist.begin(), dist.end());
    return res;
}

/// Nearest-center assignment; ties go to the earlier center. Cells follow center order.
inline Partition voronoi_partition(const Grid& grid, const CoverResult& cover, Metric metric) {
    if (cover.centers.empty()) throw std::invalid_argument("voronoi_partition: no centers");
    std::vector<std::vector<StateId>> cells(cover.centers.size());
    for (std::size_t s = 0; s < grid.state_count(); ++s) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cover.centers.size(); ++c) {
            const double d = grid.distance(static_cast<StateId>(s), cover.centers[c], metric);
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        cells[best].push_back(static_cast<StateId>(s));
    }
    cells.erase(std::remove_if(cells.begin(), cells.end(), [](const auto& c) { return c.empty(); }), cells.end());
    return Partition::from_cells(grid.state_count(), std::move(cells));
}

/// Centers of a regular sub-grid with `per_dim[k]` points along dimension k: cell midpoints, or
/// evenly spaced from the first node to the last with `include_ends`.
inline std::vector<StateId> uniform_centers(const Grid& grid, const std::vector<std::size_t>& per_dim,
                                            bool include_ends = false) {
    if (per_dim.size() != grid.dimension()) throw std::invalid_argument("uniform_centers: one count per dimension");
    std::vector<std::vector<std::size_t>> axis(grid.dimension());
    for (std::size_t k = 0; k < grid.dimension(); ++k) {
        const auto m = static_cast<double>(per_dim[k]);
        if (per_dim[k] == 0) throw std::invalid_argument("uniform_centers: zero count");
        for (std::size_t i = 0; i < per_dim[k]; ++i) {
            const auto fi = static_cast<double>(i);
            const double x = include_ends ? (per_dim[k] == 1 ? 0.5 : fi / (m - 1.0)) : (fi + 0.5) / m;
            axis[k].push_back(static_cast<std::size_t>(std::lround(x * static_cast<double>(grid.size(k) - 1))));
        }
    }
    std::vector<StateId> out;
    std::vector<std::size_t> idx(grid.dimension(), 0), node(grid.dimension());
    while (true) {
        for (std::size_t k = 0; k < grid.dimension(); ++k) node[k] = axis[k][idx[k]];
        out.push_back(grid.state_of(node));
        std::size_t k = 0;
        for (; k < grid.dimension(); ++k) {
            if (++idx[k] < per_dim[k]) break;
            idx[k] = 0;
        }
        if (k == grid.dimension()) break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/**
 * Cluster MDP with R(w,w') = max_{s in A(w)} max_{s' in A(w')} r(s,s') and
 * the same discount. Its value iteration is the partition-reduced iteration.
 */
inline DeterministicMdp reduced_mdp_from_partition(const DeterministicMdp& M, const Partition& P) {
    require_same_size(P.state_count(), M.state_count(), "reduced_mdp_from_partition");
    const std::size_t k = P.cell_count();
    std::vector<Edge> edges;
    std::vector<double> row(k);
    std::vector<std::uint32_t> touched;
    const double ninf = -std::numeric_limits<double>::infinity();
    std::fill(row.begin(), row.end(), ninf);
    for (std::size_t c = 0; c < k; ++c) {
        touched.clear();
        for (auto s : P.cell(c)) {
            for (const auto& tr : M.out_edges(s)) {
                const auto c2 = P.cell_of(tr.target);
                if (row[c2] == ninf) touched.push_back(c2);
                row[c2] = std::max(row[c2], tr.reward);
            }
        }
        if (touched.empty())
            throw std::invalid_argument("reduced_mdp_from_partition: cluster " + std::to_string(c) +
                                        " has no outgoing edge");
        for (auto c2 : touched) {
            edges.push_back({static_cast<StateId>(c), c2, row[c2]});
            row[c2] = ninf;
        }
    }
    return DeterministicMdp(k, M.gamma(), std::move(edges));
}

/**
 * max over grid-adjacent pairs of |V(s) - V(s')| / d(s,s')^p. A lower bound
 * on the Hölder constant; exact for the l1 Lipschitz constant of grid
 * functions with p = 1.
 */
inline double lipschitz_estimate(const ValueVector& V, const Grid& grid, Metric metric, double p = 1.0) {
    require_same_size(V.size(), grid.state_count(), "lipschitz_estimate");
    if (!V.all_finite()) throw std::invalid_argument("lipschitz_estimate: V must be finite");
    double best = 0.0;
    for (std::size_t s = 0; s < grid.state_count(); ++s) {
        for (std::size_t k = 0; k < grid.dimension(); ++k) {
            StateId t;
            if (!grid.neighbor(static_cast<StateId>(s), k, +1, t)) continue;
            const double d = grid.distance(static_cast<StateId>(s), t, metric);
            best = std::max(best, std::abs(V[s].value() - V[t].value()) / std::pow(d, p));
        }
    }
    return best;
}

}  // namespace mpadp

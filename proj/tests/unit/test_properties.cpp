#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../common/laws.hpp"

using namespace mpadp;

namespace {

void expect_all_below(const laws::Report& r, double tol) {
    for (const auto& [law, worst] : r.worst) EXPECT_LE(worst, tol) << law;
}

}  // namespace

TEST(Laws, MaxPlusAlgebra) {
    std::mt19937_64 rng(11);
    laws::Report r;
    for (int i = 0; i < 60; ++i) laws::algebra_instance(rng, r);
    EXPECT_EQ(r.worst.size(), 8U);
    expect_all_below(r, 1e-12);
}

TEST(Laws, Bellman) {
    std::mt19937_64 rng(12);
    laws::Report r;
    for (int i = 0; i < 60; ++i) laws::bellman_instance(rng, r);
    expect_all_below(r, 1e-12);
}

TEST(Laws, ReducedStepMatchesComposition) {
    std::mt19937_64 rng(13);
    laws::Report r;
    for (int i = 0; i < 15; ++i) laws::reduced_instance(rng, r, 20);
    expect_all_below(r, 1e-10);
}

TEST(Laws, ResidualCertificate) {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 30; ++i) {
        const std::size_t n = laws::draw(rng, 2, 40);
        const double gamma = laws::uniform(rng, 0.3, 0.97);
        const auto M = oracle::random_mdp(rng, n, gamma, laws::draw(rng, 0, 2 * n));
        const auto ref = value_iteration(M, ValueVector(n, 0.0), 1e-12, 10000000).values;
        const double tol = std::pow(10.0, -laws::uniform(rng, 1.0, 8.0));
        const auto run = value_iteration(M, laws::random_vector<ValueVector>(rng, n), tol, 10000000);
        EXPECT_LE(run.residual, tol);
        EXPECT_LE(sup_distance(run.values, ref), (run.residual + 1e-12) / (1 - gamma) + 1e-13);
    }
}

TEST(Laws, ReducedOperatorContractsAtPowerRate) {
    std::mt19937_64 rng(15);
    for (int i = 0; i < 40; ++i) {
        const std::size_t n = laws::draw(rng, 2, 40), rho = laws::draw(rng, 1, 5);
        const double gamma = laws::uniform(rng, 0.5, 0.99);
        const auto M = oracle::random_mdp(rng, n, gamma, laws::draw(rng, 0, 2 * n));
        const auto W = oracle::random_dictionary(rng, n, laws::draw(rng, 1, 10), true);
        const auto Z = oracle::random_dictionary(rng, n, laws::draw(rng, 1, 10), true);
        auto hat = [&](const ValueVector& V) { return project_lower(W, project_upper(Z, bellman_power_apply(M, V, rho))); };
        const auto V = laws::random_vector<ValueVector>(rng, n), V2 = laws::random_vector<ValueVector>(rng, n);
        EXPECT_LE(sup_distance(hat(V), hat(V2)), std::pow(gamma, double(rho)) * sup_distance(V, V2) + 1e-12);
    }
}

TEST(Laws, PartitionRefinementIsMonotone) {
    std::mt19937_64 rng(16);
    for (auto [id, nodes] : {std::pair{ValueSpecId::V1dBumps, std::size_t{65}}, std::pair{ValueSpecId::V2dFull, std::size_t{17}}}) {
        const auto B = build_benchmark(id, nodes, 0.5);
        const auto ref = discrete_optimum(B.mdp);
        const BellmanPower T(B.mdp, 4);
        const double tol = 1e-9;
        auto P = single_cell_partition(*B.grid);
        double prev = oracle::kPosInf;
        for (int step = 0; step < 30; ++step) {
            const auto V = partition_reduced_vi(T, P, tol);
            EXPECT_TRUE(pointwise_le(ref, V, 2 * tol)) << "partition values bound V* from above";
            const double err = sup_distance(V, ref);
            EXPECT_LE(err, prev + 2 * tol) << to_string(id) << " step " << step;
            prev = err;
            std::vector<std::pair<std::size_t, std::size_t>> options;
            for (std::size_t c = 0; c < P.cell_count(); ++c)
                for (std::size_t d = 0; d < B.grid->dimension(); ++d)
                    if (can_split(P, *B.grid, c, d)) options.emplace_back(c, d);
            if (options.empty()) break;
            const auto [c, d] = options[laws::draw(rng, 0, options.size() - 1)];
            P = split_cell(P, *B.grid, c, d);
        }
    }
}

TEST(Laws, CompiledPowerMatchesRepeatedSweeps) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 30; ++i) {
        const std::size_t n = laws::draw(rng, 2, 50), rho = laws::draw(rng, 1, 8);
        const auto M = oracle::random_mdp(rng, n, laws::uniform(rng, 0.0, 0.99), laws::draw(rng, 0, 2 * n));
        const auto V = laws::random_vector<ValueVector>(rng, n);
        EXPECT_LE(sup_distance(bellman_apply(compile_power(M, rho), V), bellman_power_apply(M, V, rho)), 1e-10);
    }
}

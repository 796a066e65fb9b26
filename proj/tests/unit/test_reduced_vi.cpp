#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../common/oracles.hpp"

using namespace mpadp;
using oracle::kNegInf;

namespace {

Dictionary zero_atom(std::size_t n) {
    Dictionary D(n);
    D.add(TabulatedAtom{ValueVector(n, 0.0)});
    return D;
}

struct Instance {
    DeterministicMdp M;
    Dictionary W, Z;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t kw, std::size_t kz) {
    return {oracle::random_mdp(rng, n, 0.9, n), oracle::random_dictionary(rng, n, kw, true),
            oracle::random_dictionary(rng, n, kz, true)};
}

}  // namespace

TEST(CompileForms, ZeroAtoms) {
    std::mt19937_64 rng(1);
    const auto M = oracle::random_mdp(rng, 8, 0.7, 8);
    const auto F = compile_forms(M, zero_atom(8), zero_atom(8), 1);
    EXPECT_EQ(F.zw.at(0, 0).value(), 0.0);
    double best = kNegInf;
    for (const auto& e : M.edges()) best = std::max(best, e.reward);
    EXPECT_DOUBLE_EQ(F.zTw.at(0, 0).value(), best);
    EXPECT_DOUBLE_EQ(F.gamma_eff, 0.7);
}

TEST(CompileForms, TwoStateSingletons) {
    const auto M = oracle::two_state_mdp();
    const auto D = make_partition_dictionary(singleton_partition(2));
    const auto F = compile_forms(M, D, D, 1);
    EXPECT_EQ(F.zw, FormMatrix(2, 2, {0.0, kNegInf, kNegInf, 0.0}));
    EXPECT_EQ(F.zTw, FormMatrix(2, 2, {kNegInf, 1.0, 0.0, kNegInf}));
}

TEST(CompileForms, PowerMatchesCompiledMdp) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        auto I = random_instance(rng, 20, 4, 5);
        for (std::size_t rho : {2U, 4U}) {
            const auto F = compile_forms(I.M, I.W, I.Z, rho);
            const auto G = compile_forms(compile_power(I.M, rho), I.W, I.Z, 1);
            const auto S = compile_forms(I.M, I.W, I.Z, rho, PowerStrategy::Sweep);
            EXPECT_NEAR(F.gamma_eff, G.gamma_eff, 1e-15);
            EXPECT_EQ(F.zw, G.zw);
            for (std::size_t z = 0; z < F.z_count(); ++z)
                for (std::size_t w = 0; w < F.w_count(); ++w) {
                    const double a = F.zTw.raw(z, w), b = G.zTw.raw(z, w), c = S.zTw.raw(z, w);
                    if (a == kNegInf) {
                        EXPECT_EQ(b, kNegInf);
                        EXPECT_EQ(c, kNegInf);
                    } else {
                        EXPECT_NEAR(a, b, 1e-12);
                        EXPECT_NEAR(a, c, 1e-12);
                    }
                }
        }
    }
}

TEST(CompileForms, RejectsEmptyAtoms) {
    Dictionary W(2);
    W.add(TabulatedAtom{ValueVector(2)});
    EXPECT_THROW(compile_forms(oracle::two_state_mdp(), W, zero_atom(2), 1), ResiduationError);
}

TEST(ReducedStep, MatchesFullSpaceComposition) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + trial;
        auto I = random_instance(rng, n, 1 + trial % 5, 1 + (trial * 7) % 6);
        const std::size_t rho = std::size_t{1} << (trial % 3);
        const auto F = compile_forms(I.M, I.W, I.Z, rho);
        const auto R = oracle::reward_matrix(I.M);
        const auto Wd = oracle::dense_atoms(I.W), Zd = oracle::dense_atoms(I.Z);
        Coefficients alpha = default_alpha0(I.W);
        for (int t = 0; t < 10; ++t) {
            const auto V = oracle::eval(Wd, alpha.to_doubles(), n);
            const auto expect =
                oracle::project_lower(Wd, oracle::project_upper(Zd, oracle::bellman_power(R, 0.9, V, rho)));
            alpha = reduced_step(F, alpha).second;
            EXPECT_LT(oracle::sup_dist(oracle::eval(Wd, alpha.to_doubles(), n), expect), 1e-10);
        }
    }
}

TEST(ReducedStep, BottomCoefficientsDrop) {
    const auto M = oracle::two_state_mdp();
    const auto D = make_partition_dictionary(singleton_partition(2));
    const auto F = compile_forms(M, D, D, 1);
    const auto beta = reduced_beta(F, Coefficients{kNegInf, 0.0});
    EXPECT_EQ(beta, (Coefficients{1.0, kNegInf}));
}

TEST(RunReducedVi, SingletonsRecoverOptimum) {
    std::mt19937_64 rng(4);
    const auto M = oracle::random_mdp(rng, 25, 0.9, 30);
    const auto D = make_partition_dictionary(singleton_partition(25));
    const auto vstar = value_iteration(M, ValueVector(25, 0.0), 1e-13, 1000000).values;
    for (std::size_t rho : {1U, 3U}) {
        const auto res = run_reduced_vi(compile_forms(M, D, D, rho), D, 1e-9, 100000);
        EXPECT_LT(sup_distance(res.V, vstar), 1e-9 + 1e-12);
    }
}

TEST(RunReducedVi, ResidualDecayAndUniqueFixedPoint) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        auto I = random_instance(rng, 30, 6, 6);
        const auto F = compile_forms(I.M, I.W, I.Z, 2);
        const double tol = 1e-8;
        const auto a = run_reduced_vi(F, I.W, tol, 100000);
        const auto& h = a.residual_history;
        for (std::size_t t = 0; t < h.size(); ++t)
            EXPECT_LE(h[t], std::pow(F.gamma_eff, double(t)) * h[0] * (1 + 1e-9) + 1e-14);
        Coefficients alt(oracle::random_table(rng, I.W.size(), 5.0, 20.0));
        const auto b = run_reduced_vi(F, I.W, alt, tol, 100000);
        EXPECT_LE(sup_distance(a.V, b.V), 2 * tol);
    }
}

TEST(RunReducedVi, FixedPointIdentities) {
    std::mt19937_64 rng(6);
    auto I = random_instance(rng, 30, 5, 7);
    const auto F = compile_forms(I.M, I.W, I.Z, 1);
    const auto res = run_reduced_vi(F, I.W, 1e-11, 100000);
    const auto& alpha = res.state.alpha;
    const auto beta = transpose_apply(I.Z, bellman_apply(I.M, eval_dictionary(I.W, alpha)));
    const auto alpha2 = residuate(I.W, transpose_residuate(I.Z, beta));
    EXPECT_LT(sup_distance(alpha2, alpha), 1e-10);
    EXPECT_LT(sup_distance(beta, reduced_beta(F, alpha)), 1e-12);
}

TEST(RunReducedVi, BudgetAndValidation) {
    std::mt19937_64 rng(7);
    auto I = random_instance(rng, 10, 3, 3);
    const auto F = compile_forms(I.M, I.W, I.Z, 1);
    EXPECT_THROW(run_reduced_vi(F, I.W, 0.0, 10), std::invalid_argument);
    EXPECT_THROW(run_reduced_vi(F, I.W, 1e-300, 3), ReducedConvergenceError);
}

TEST(PartitionReducedVi, EqualsGeneralIteration) {
    const auto B = build_benchmark(ValueSpecId::V1dBumps, 91, 0.5);
    for (std::size_t rho : {1U, 4U}) {
        for (std::size_t n : {2U, 7U, 16U}) {
            const auto P = fixed_constant_partition(*B.grid, n);
            const auto D = make_partition_dictionary(P);
            const BellmanPower T(B.mdp, rho);
            const auto general = run_reduced_vi(compile_forms(T, D, D), D, 1e-11, 10000000).V;
            const auto fast = partition_reduced_vi(T, P, 1e-11);
            EXPECT_LT(sup_distance(general, fast), 1e-10) << "rho=" << rho << " n=" << n;
            const BellmanPower Ts(B.mdp, rho, PowerStrategy::Sweep);
            EXPECT_LT(sup_distance(partition_reduced_vi(Ts, P, 1e-11), fast), 1e-10);
        }
    }
    const auto M = oracle::two_state_mdp();
    const auto vstar = partition_reduced_vi(M, singleton_partition(2), 1, 1e-12);
    EXPECT_NEAR(vstar[0].value(), 4.0 / 3.0, 1e-11);
    EXPECT_NEAR(vstar[1].value(), 2.0 / 3.0, 1e-11);
}

TEST(ErrorBound, Arithmetic) {
    EXPECT_DOUBLE_EQ(fixed_point_error_bound(0.0, 0.5), 0.0);
    EXPECT_NEAR(fixed_point_error_bound(0.1, 0.9), 2.0, 1e-12);
    EXPECT_NEAR(fixed_point_error_bound_horizon(0.1, 0.9, 5), 0.2 * (1 + 10.0 / 5), 1e-12);
    EXPECT_THROW(fixed_point_error_bound(-1.0, 0.5), std::invalid_argument);
    EXPECT_THROW(fixed_point_error_bound(0.1, 1.0), std::invalid_argument);
}

TEST(ErrorBound, HoldsOnSmallBenchmark) {
    const auto B = build_benchmark(ValueSpecId::V1dConvex, 91, 0.5);
    const auto vstar = discrete_optimum(B.mdp);
    for (std::size_t n : {4U, 16U}) {
        const auto D = make_partition_dictionary(fixed_constant_partition(*B.grid, n));
        for (std::size_t rho : {1U, 8U}) {
            const BellmanPower T(B.mdp, rho);
            const double tol = 1e-9;
            const auto V = run_reduced_vi(compile_forms(T, D, D), D, tol, 10000000).V;
            const double eta =
                std::max(sup_distance(project_lower(D, vstar), vstar), sup_distance(project_upper(D, vstar), vstar));
            EXPECT_LE(sup_distance(V, vstar), fixed_point_error_bound(eta, T.gamma_eff()) + tol + 1e-9);
        }
    }
}

TEST(Forms, EpsilonPerturbationShiftsLimitBoundedly) {
    std::mt19937_64 rng(8);
    const double eps = 1e-6, tol = 1e-11;
    for (int trial = 0; trial < 5; ++trial) {
        auto I = random_instance(rng, 25, 5, 5);
        const auto F = compile_forms(I.M, I.W, I.Z, 2);
        CompiledForms G = F;
        std::uniform_real_distribution<double> noise(-eps / 2, eps / 2);
        for (std::size_t z = 0; z < F.z_count(); ++z)
            for (std::size_t w = 0; w < F.w_count(); ++w) {
                if (F.zw.at(z, w).is_finite()) G.zw.set(z, w, F.zw.raw(z, w) + noise(rng));
                if (F.zTw.at(z, w).is_finite()) G.zTw.set(z, w, F.zTw.raw(z, w) + noise(rng));
            }
        const auto a = run_reduced_vi(F, I.W, tol, 1000000).V;
        const auto b = run_reduced_vi(G, I.W, tol, 1000000).V;
        EXPECT_LE(sup_distance(a, b), eps / (1 - F.gamma_eff) + 2 * tol);
    }
}

TEST(Forms, IncrementalUpdateMatchesFullCompile) {
    std::mt19937_64 rng(9);
    auto I = random_instance(rng, 20, 4, 4);
    const BellmanPower T(I.M, 3);
    FormsWorkspace ws;
    auto F = compile_forms(T, I.W, I.Z, &ws);
    auto W2 = I.W;
    auto Z2 = I.Z;
    W2.add(TabulatedAtom{ValueVector(oracle::random_table(rng, 20))});
    Z2.add(TabulatedAtom{ValueVector(oracle::random_table(rng, 20))});
    update_forms(F, ws, T, W2, Z2, {W2.size() - 1}, {Z2.size() - 1});
    const auto full = compile_forms(T, W2, Z2);
    EXPECT_EQ(F.zw, full.zw);
    EXPECT_EQ(F.zTw, full.zTw);
    EXPECT_EQ(F.w_hash, full.w_hash);
}

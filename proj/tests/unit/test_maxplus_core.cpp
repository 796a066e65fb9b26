#include <gtest/gtest.h>

#include <random>

#include "../common/oracles.hpp"

using namespace mpadp;
using oracle::kNegInf;

namespace {

Dictionary two_cells() {
    Dictionary W(3);
    W.add(make_indicator({0, 1}));
    W.add(make_indicator({2}));
    return W;
}

Dictionary constant_atom(std::size_t n) {
    Dictionary W(n);
    W.add(TabulatedAtom{ValueVector(n, 0.0)});
    return W;
}

}  // namespace

TEST(Eval, Examples) {
    EXPECT_EQ(eval_dictionary(constant_atom(3), Coefficients{2.5}), ValueVector(3, 2.5));
    EXPECT_EQ(eval_dictionary(two_cells(), Coefficients{1.0, 2.0}), (ValueVector{1.0, 1.0, 2.0}));
    EXPECT_EQ(eval_dictionary(two_cells(), Coefficients{kNegInf, kNegInf}), ValueVector(3));
    EXPECT_THROW(eval_dictionary(two_cells(), Coefficients{1.0}), std::invalid_argument);
}

TEST(Residuate, Examples) {
    EXPECT_EQ(residuate(constant_atom(3), ValueVector{4.0, -1.0, 2.0}), Coefficients{-1.0});
    EXPECT_EQ(residuate(two_cells(), ValueVector{1.0, 3.0, 2.0}), (Coefficients{1.0, 2.0}));
    Dictionary empty_atom(2);
    empty_atom.add(TabulatedAtom{ValueVector(2)});
    EXPECT_THROW(residuate(empty_atom, ValueVector{0.0, 0.0}), ResiduationError);
}

TEST(Residuate, GaloisConsequenceOnImage) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto W = oracle::random_dictionary(rng, 8, 4, false);
        const Coefficients a(oracle::random_table(rng, 4));
        const auto back = residuate(W, eval_dictionary(W, a));
        EXPECT_TRUE(pointwise_le(a, back, 1e-12));
    }
}

TEST(TransposeApply, Examples) {
    EXPECT_EQ(transpose_apply(constant_atom(3), ValueVector{1.0, 3.0, 2.0}), Coefficients{3.0});
    Dictionary Z(2);
    Z.add(TabulatedAtom{ValueVector{5.0, kNegInf}});
    EXPECT_EQ(transpose_apply(Z, ValueVector{1.0, 2.0}), Coefficients{6.0});
}

TEST(TransposeResiduate, Examples) {
    EXPECT_EQ(transpose_residuate(constant_atom(3), Coefficients{1.25}), ValueVector(3, 1.25));
    EXPECT_EQ(transpose_residuate(two_cells(), Coefficients{4.0, 7.0}), (ValueVector{4.0, 4.0, 7.0}));
    Dictionary partial(2);
    partial.add(make_indicator({0}));
    EXPECT_THROW(transpose_residuate(partial, Coefficients{0.0}), ResiduationError);
}

TEST(Projections, Examples) {
    const ValueVector V{1.0, 3.0, 2.0};
    EXPECT_EQ(project_lower(two_cells(), V), (ValueVector{1.0, 1.0, 2.0}));
    EXPECT_EQ(project_upper(two_cells(), V), (ValueVector{3.0, 3.0, 2.0}));
    const auto S = make_partition_dictionary(singleton_partition(3));
    EXPECT_EQ(project_lower(S, V), V);
    EXPECT_EQ(project_upper(S, V), V);
}

TEST(Projections, PerCellMinAndMax) {
    std::mt19937_64 rng(11);
    const auto P = Partition::from_assignment({0, 0, 1, 2, 1, 2, 2, 0});
    const auto W = make_partition_dictionary(P);
    const ValueVector V(oracle::random_table(rng, 8));
    const auto lo = project_lower(W, V), hi = project_upper(W, V);
    for (std::size_t c = 0; c < P.cell_count(); ++c) {
        double mn = 1e300, mx = -1e300;
        for (auto s : P.cell(c)) {
            mn = std::min(mn, V[s].value());
            mx = std::max(mx, V[s].value());
        }
        for (auto s : P.cell(c)) {
            EXPECT_EQ(lo[s].value(), mn);
            EXPECT_EQ(hi[s].value(), mx);
        }
    }
}

TEST(MaxplusDot, Examples) {
    const ValueVector V{1.0, 3.0, 2.0};
    EXPECT_EQ(maxplus_dot(constant_atom(3), 0, V).value(), 3.0);
    EXPECT_EQ(maxplus_dot(V, negate(V)).value(), 0.0);
    EXPECT_TRUE(maxplus_dot(ValueVector{kNegInf}, ValueVector{1.0}).is_bottom());
}

TEST(Operators, AgreeWithBruteForce) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 20;
        const auto W = oracle::random_dictionary(rng, n, 1 + trial % 6, true);
        const auto dense = oracle::dense_atoms(W);
        const auto V = oracle::random_table(rng, n);
        const auto a = oracle::random_table(rng, W.size());
        EXPECT_EQ(eval_dictionary(W, Coefficients(a)).to_doubles(), oracle::eval(dense, a, n));
        EXPECT_EQ(residuate(W, ValueVector(V)).to_doubles(), oracle::residuate(dense, V));
        EXPECT_EQ(transpose_apply(W, ValueVector(V)).to_doubles(), oracle::transpose_apply(dense, V));
        EXPECT_EQ(transpose_residuate(W, Coefficients(a)).to_doubles(), oracle::transpose_residuate(dense, a, n));
        EXPECT_EQ(project_lower(W, ValueVector(V)).to_doubles(), oracle::project_lower(dense, V));
        EXPECT_EQ(project_upper(W, ValueVector(V)).to_doubles(), oracle::project_upper(dense, V));
    }
}

TEST(Dictionary, SupportSkipsBottomAndValidates) {
    Dictionary D(3);
    D.add(TabulatedAtom{ValueVector{1.0, kNegInf, 2.0}});
    ASSERT_EQ(D.support(0).size(), 2U);
    EXPECT_EQ(D.support(0)[1].state, 2U);
    EXPECT_FALSE(D.covers_all_states());
    D.add(make_indicator({1}));
    EXPECT_TRUE(D.covers_all_states());
    EXPECT_THROW(D.add(TabulatedAtom{ValueVector{1.0}}), std::invalid_argument);
    EXPECT_THROW(D.add(IndicatorAtom{{5}}), std::out_of_range);
    EXPECT_THROW(D.add(make_distance(0, 1.0, {0}, Metric::L1)), std::invalid_argument);  // no grid
}

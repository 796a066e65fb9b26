#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mpadp/extended_value.hpp"
#include "mpadp/grid.hpp"

using namespace mpadp;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(ExtendedValue, BottomIsNeutralForMaxAndAbsorbingForPlus) {
    EXPECT_EQ(oplus(kBottom, 3.0).value(), 3.0);
    EXPECT_EQ(oplus(-2.0, kBottom).value(), -2.0);
    EXPECT_TRUE(otimes(kBottom, 5.0).is_bottom());
    EXPECT_TRUE(otimes(5.0, kBottom).is_bottom());
    EXPECT_EQ(otimes(1.5, 2.0).value(), 3.5);
}

TEST(ExtendedValue, RejectsNanAndPlusInfinity) {
    EXPECT_THROW(ExtendedValue{std::nan("")}, std::domain_error);
    EXPECT_THROW(ExtendedValue{kInf}, std::domain_error);
    EXPECT_TRUE(ExtendedValue{-kInf}.is_bottom());
}

TEST(ExtendedValue, ScaleAndResidual) {
    EXPECT_TRUE(scale(0.5, kBottom).is_bottom());
    EXPECT_EQ(scale(0.5, 4.0).value(), 2.0);
    EXPECT_EQ(residual(3.0, 1.0).value(), 2.0);
    EXPECT_TRUE(residual(kBottom, 1.0).is_bottom());
    EXPECT_THROW(residual(1.0, kBottom), std::domain_error);
}

TEST(ExtVector, Helpers) {
    ValueVector a{1.0, kBottom, 3.0}, b{2.0, kBottom, 1.0};
    EXPECT_EQ(pointwise_max(a, b), (ValueVector{2.0, kBottom, 3.0}));
    EXPECT_EQ(shifted(a, 1.0), (ValueVector{2.0, kBottom, 4.0}));
    EXPECT_DOUBLE_EQ(sup_distance(a, b), 2.0);
    EXPECT_EQ(sup_distance(a, ValueVector{1.0, 0.0, 3.0}), kInf);
    EXPECT_TRUE(pointwise_le(ValueVector{kBottom, 1.0}, ValueVector{kBottom, 1.0}));
    EXPECT_FALSE(pointwise_le(ValueVector{0.0}, ValueVector{kBottom}));
    EXPECT_TRUE(pointwise_le(ValueVector{1.0 + 1e-12}, ValueVector{1.0}, 1e-9));
    EXPECT_EQ(argmax(ValueVector{1.0, 3.0, 3.0}), 1U);
    EXPECT_THROW(negate(a), std::domain_error);
    EXPECT_EQ(negate(ValueVector{1.0, -2.0}), (ValueVector{-1.0, 2.0}));
    EXPECT_DOUBLE_EQ(sup_norm(ValueVector{1.0, -4.0}), 4.0);
    EXPECT_THROW(pointwise_max(a, ValueVector{1.0}), std::invalid_argument);
}

TEST(Grid, RowMajorFirstDimensionFastest) {
    Grid g({3, 4});
    EXPECT_EQ(g.state_count(), 12U);
    EXPECT_EQ(g.state_of({2, 1}), 5U);
    EXPECT_EQ(g.node_index(5, 0), 2U);
    EXPECT_EQ(g.node_index(5, 1), 1U);
    EXPECT_DOUBLE_EQ(g.coordinate(5, 0), 1.0);
    EXPECT_DOUBLE_EQ(g.coordinate(5, 1), 1.0 / 3.0);
    StateId t;
    EXPECT_FALSE(g.neighbor(5, 0, +1, t));
    ASSERT_TRUE(g.neighbor(5, 1, +1, t));
    EXPECT_EQ(t, 8U);
    EXPECT_TRUE(g.on_boundary(5));
    EXPECT_FALSE(g.on_boundary(g.state_of({1, 1})));
    EXPECT_DOUBLE_EQ(g.distance(0, 11, Metric::L1), 2.0);
    EXPECT_DOUBLE_EQ(g.distance(0, 11, Metric::LInf), 1.0);
    EXPECT_DOUBLE_EQ(g.distance(0, 11, Metric::L1, {1}), 1.0);
    EXPECT_THROW(Grid({1}), std::invalid_argument);
    EXPECT_THROW(Grid(std::vector<std::size_t>{}), std::invalid_argument);
}

#include <gtest/gtest.h>

#include "bicomb/metric_core.hpp"
#include "bicomb/space_io.hpp"
#include "oracles.hpp"

using namespace bicomb;

namespace {

std::vector<std::vector<Scalar>> ints(const std::vector<std::vector<long>>& m)
{
    std::vector<std::vector<Scalar>> out;
    for (const auto& r : m) {
        out.emplace_back();
        for (long v : r)
            out.back().push_back(Scalar(v));
    }
    return out;
}

} // namespace

TEST(ParseScalar, AcceptsIntegersAndFractions)
{
    EXPECT_EQ(parse_scalar("3"), Scalar(3));
    EXPECT_EQ(parse_scalar("-7/14"), Scalar(-1, 2));
    EXPECT_EQ(parse_scalar(" 2/4 "), Scalar(1, 2));
    EXPECT_THROW(parse_scalar("1/0"), std::invalid_argument);
    EXPECT_THROW(parse_scalar("0.5"), std::invalid_argument);
    EXPECT_THROW(parse_scalar(""), std::invalid_argument);
    EXPECT_THROW(parse_scalar("1/-2"), std::invalid_argument);
}

TEST(ValidateMetric, TwoPointSpace)
{
    auto r = validate_metric(ints({{0, 1}, {1, 0}}));
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.space->size(), 2u);
    EXPECT_EQ((*r.space)(0, 1), Scalar(1));
}

TEST(ValidateMetric, ReportsAsymmetry)
{
    auto r = validate_metric(ints({{0, 1}, {2, 0}}));
    ASSERT_FALSE(r.ok());
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, MetricViolation::Kind::asymmetric);
    EXPECT_EQ(r.violations[0].i, 0u);
    EXPECT_EQ(r.violations[0].j, 1u);
}

TEST(ValidateMetric, ReportsTriangleWithDefect)
{
    auto r = validate_metric(ints({{0, 1, 3}, {1, 0, 1}, {3, 1, 0}}));
    ASSERT_FALSE(r.ok());
    ASSERT_EQ(r.violations.size(), 1u);
    const auto& v = r.violations[0];
    EXPECT_EQ(v.kind, MetricViolation::Kind::triangle);
    EXPECT_EQ(v.i, 0u);
    EXPECT_EQ(v.j, 2u);
    EXPECT_EQ(v.k, 1u);
    EXPECT_EQ(v.defect, Scalar(1));
}

TEST(ValidateMetric, ReportsDiagonalAndZeroDistance)
{
    auto r = validate_metric(ints({{1, 0}, {0, 0}}));
    ASSERT_FALSE(r.ok());
    bool diag = false, zero = false;
    for (const auto& v : r.violations) {
        diag = diag || v.kind == MetricViolation::Kind::nonzero_diagonal;
        zero = zero || v.kind == MetricViolation::Kind::nonpositive;
    }
    EXPECT_TRUE(diag);
    EXPECT_TRUE(zero);
}

TEST(ValidateMetric, RejectsMalformedInput)
{
    EXPECT_THROW(validate_metric(ints({{0, 1}, {1}})), std::invalid_argument);
    EXPECT_THROW(validate_metric(ints({{0, -1}, {-1, 0}})), std::invalid_argument);
    EXPECT_THROW(validate_metric({}), std::invalid_argument);
    EXPECT_THROW(validate_metric(ints({{0, 1}, {1, 0}}), {"a"}), std::invalid_argument);
}

TEST(ValidateMetric, AcceptsExactlyTheMetricsAmongRandomMatrices)
{
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(4);
        std::vector<std::vector<long>> m(n, std::vector<long>(n, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                m[i][j] = m[j][i] = rng.between(1, 6);
        bool metric = true;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    metric = metric && m[i][j] <= m[i][k] + m[k][j];
        EXPECT_EQ(validate_metric(ints(m)).ok(), metric);
    }
}

TEST(LinfDistance, Examples)
{
    EXPECT_EQ(linf_distance(LinfPoint{0, 0}, LinfPoint{0, 0}), Scalar(0));
    EXPECT_EQ(linf_distance(LinfPoint{-2, 1}, LinfPoint{2, 1}), Scalar(4));
    const Scalar eps(1, 10);
    EXPECT_EQ(linf_distance(LinfPoint{1, 1}, LinfPoint{1 + eps, 1 - eps}), eps);
    EXPECT_THROW(linf_distance(LinfPoint{1}, LinfPoint{1, 2}), std::invalid_argument);
}

TEST(LinfDistance, MetricAxiomsOnRandomRationalPoints)
{
    Rng rng(5);
    auto draw = [&] {
        LinfPoint p(3);
        for (auto& c : p)
            c = Scalar(rng.between(-50, 50), rng.between(1, 9));
        return p;
    };
    for (int trial = 0; trial < 500; ++trial) {
        auto p = draw(), q = draw(), r = draw();
        EXPECT_EQ(linf_distance(p, p), Scalar(0));
        EXPECT_EQ(linf_distance(p, q), linf_distance(q, p));
        if (p != q) {
            EXPECT_GT(linf_distance(p, q), Scalar(0));
        }
        EXPECT_LE(linf_distance(p, r), linf_distance(p, q) + linf_distance(q, r));
    }
}

TEST(Subspace, WholeSpaceAndAntipodes)
{
    auto H = oracle::polygon_arc(6);
    EXPECT_EQ(subspace(H, {0, 1, 2, 3, 4, 5}), H);
    auto S = subspace(H, {0, 3});
    EXPECT_EQ(S.size(), 2u);
    EXPECT_EQ(S(0, 1), Scalar(3));
    EXPECT_EQ(S.labels(), (std::vector<std::string>{"0", "3"}));
    EXPECT_THROW(subspace(H, std::span<const std::size_t>{}), std::invalid_argument);
    EXPECT_THROW(subspace(H, {0, 6}), std::out_of_range);
    EXPECT_THROW(subspace(H, {1, 1}), std::invalid_argument);
}

TEST(Subspace, NestedEqualsDirect)
{
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto X = oracle::random_path_metric(7, rng);
        auto outer = subspace(X, {6, 2, 4, 0, 5});
        auto nested = subspace(outer, {1, 3, 4});
        EXPECT_EQ(nested, subspace(X, {2, 0, 5}));
    }
}

TEST(Subspace, TreeTripleStaysTreeLike)
{
    auto T = oracle::tree_metric({0, 0, 0, 0}, {0, 1, 2, 3});
    auto S = subspace(T, {1, 2, 3});
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t e = 0; e < 3; ++e)
                    EXPECT_LE(four_point_defect(S, a, b, c, e), Scalar(0));
}

TEST(FourPointDefect, StarTree)
{
    // centre 0, leaves 1..3 at distance 1
    auto T = oracle::tree_metric({0, 0, 0, 0}, {0, 1, 1, 1});
    EXPECT_LE(four_point_defect(T, 1, 2, 3, 0), Scalar(0));
    EXPECT_EQ(four_point_defect(T, 1, 1, 2, 2), Scalar(-2) * T(1, 2));
}

TEST(FourPointDefect, EuclideanSquareIsNotTreeLike)
{
    // unit square in the plane, diagonals 1414/1000 approximating sqrt 2
    const Scalar diag(1414, 1000);
    std::vector<std::vector<Scalar>> d = {{0, 1, diag, 1}, {1, 0, 1, diag}, {diag, 1, 0, 1},
                                          {1, diag, 1, 0}};
    auto X = make_metric(d);
    EXPECT_EQ(four_point_defect(X, 0, 2, 1, 3), 2 * diag - 2);
    EXPECT_GT(four_point_defect(X, 0, 2, 1, 3), Scalar(0));
    EXPECT_THROW(four_point_defect(X, 0, 1, 2, 4), std::out_of_range);
}

TEST(FourPointDefect, NonPositiveOnRandomTrees)
{
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        auto T = oracle::random_tree(2 + rng.below(6), rng);
        EXPECT_LE(max_four_point_defect(T).first, Scalar(0));
    }
}

TEST(SpaceJson, RoundTrip)
{
    auto X = oracle::random_linf_points(5, 2, *std::make_unique<Rng>(2));
    auto j = space_to_json(X);
    EXPECT_EQ(space_from_json(json::parse(j.dump())), X);
    auto doc = json::parse(R"({"labels":["a","b"],"dist":[[0,"1/2"],["1/2",0]]})");
    auto Y = space_from_json(doc);
    EXPECT_EQ(Y(0, 1), Scalar(1, 2));
    EXPECT_EQ(Y.labels()[1], "b");
    EXPECT_THROW(space_from_json(json::parse(R"({"dist":[[0,1],[2,0]]})")), std::invalid_argument);
    EXPECT_THROW(space_from_json(json::parse(R"({"dist":[[0,0.5],[0.5,0]]})")),
                 std::invalid_argument);
}

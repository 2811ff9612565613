#include <gtest/gtest.h>

#include "bicomb/bicombing.hpp"
#include "bicomb/gallery.hpp"
#include "oracles.hpp"

using namespace bicomb;

namespace {

const Point bx{-2, 1}, by{2, 1}, bz{0, -1};

SampleSpec spec(std::size_t samples, std::uint64_t seed = 1, std::size_t grid = 8)
{
    return SampleSpec{samples, seed, grid, {}};
}

FiniteMetricSpace four_points()
{
    return oracle::from_ints({{0, 2, 3, 3}, {2, 0, 3, 3}, {3, 3, 0, 2}, {3, 3, 2, 0}});
}

} // namespace

TEST(Point, BasicsAndDistance)
{
    Point p{1, -2, 3};
    EXPECT_EQ(p.size(), 3u);
    EXPECT_EQ(linf(p, Point{0, 0, 0}), 3);
    EXPECT_EQ(lerp(p, Point{3, 2, 3}, 0.5), (Point{2, 0, 3}));
    EXPECT_EQ(lerp(p, Point{0.1, 0.2, 0.3}, 1.0), (Point{0.1, 0.2, 0.3}));
    EXPECT_THROW(Point(Point::capacity + 1), std::length_error);
    EXPECT_THROW(linf(p, Point{1, 2}), std::invalid_argument);
}

TEST(LinearBicombing, ValuesAndAxioms)
{
    auto s = linear_bicombing(2);
    EXPECT_EQ(s(bx, by, 0.5), (Point{0, 1}));
    EXPECT_EQ(s(bx, bx, 0.3), bx);
    EXPECT_EQ(s(bx, by, 0), bx);
    EXPECT_EQ(s(bx, by, 1), by);
    EXPECT_LE(conical_defect(s, spec(300)).max_defect, 1e-12);
    EXPECT_LE(convexity_defect(s, spec(300)).max_defect, 1e-12);
    for (std::size_t n : {2, 3, 7})
        EXPECT_LE(discrete_convexity_defect(s, n, spec(100)).max_defect, 1e-12);
    EXPECT_LE(consistency_defect(s, spec(100)).max_defect, 1e-12);
    EXPECT_LE(reversibility_defect(s, spec(100)).max_defect, 1e-12);
    EXPECT_LE(geodesic_defect(s, spec(100)).max_defect, 1e-12);
    EXPECT_THROW(discrete_convexity_defect(s, 1, spec(1)), std::invalid_argument);
}

TEST(Butterfly, RetractedLinearGeodesic)
{
    auto s = butterfly_bicombing();
    EXPECT_TRUE(s.warnings().empty());
    EXPECT_EQ(s(bx, by, 0.25), (Point{-1, 0}));
    EXPECT_EQ(s(bx, by, 0.5), (Point{0, 1}));
    EXPECT_EQ(s(bx, by, 0.75), (Point{1, 0}));
    const Point inner{0.5, 0.0};
    EXPECT_EQ(s(inner, inner, 0.4), inner);
}

TEST(Butterfly, ConicalButNotConvex)
{
    auto s = butterfly_bicombing();
    EXPECT_LE(conical_defect(s, spec(2000, 5)).max_defect, 1e-9);
    EXPECT_LE(discrete_convexity_defect(s, 2, spec(500, 6)).max_defect, 1e-9);
    EXPECT_LE(reversibility_defect(s, spec(500)).max_defect, 1e-12);
    EXPECT_LE(geodesic_defect(s, spec(300)).max_defect, 1e-12);

    // D = d(sigma_xy(t), z) is 1, 2, 1 at t = 1/4, 1/2, 3/4
    auto D = [&](double t) { return linf(s(bx, by, t), bz); };
    EXPECT_EQ(D(0.25), 1);
    EXPECT_EQ(D(0.5), 2);
    EXPECT_EQ(D(0.75), 1);
    SampleSpec anchored{0, 1, 8, {{bx, by, bz, bz}}};
    auto r = convexity_defect(s, anchored);
    EXPECT_GE(r.max_defect, 1.0);
    ASSERT_EQ(r.witness.points.size(), 4u);
    EXPECT_EQ(r.witness.points[2], bz);
    const auto& w = r.witness;
    EXPECT_DOUBLE_EQ(midpoint_gap(s, w.points[0], w.points[1], w.points[2], w.points[3], w.params[0], w.params[1]),
                     r.max_defect);

    EXPECT_GT(consistency_defect(s, spec(300)).max_defect, 1e-3);
}

TEST(Butterfly, BallsAreConvexForTheConicalBicombing)
{
    auto s = butterfly_bicombing();
    auto space = butterfly();
    Rng rng(17);
    std::size_t checked = 0;
    for (int k = 0; k < 3000; ++k) {
        Point z = space->sample(rng), x = space->sample(rng), y = space->sample(rng);
        const double r = std::max(linf(z, x), linf(z, y));
        const double t = rng.unit();
        EXPECT_LE(linf(z, s(x, y, t)), r + 1e-12);
        ++checked;
    }
    EXPECT_EQ(checked, 3000u);
}

TEST(DefectReports, WitnessesReproduceTheirValues)
{
    auto s = butterfly_bicombing();
    auto ss = spec(200, 11);
    auto con = conical_defect(s, ss);
    const auto& c = con.witness;
    EXPECT_DOUBLE_EQ(std::max(0.0, conical_gap(s, c.points[0], c.points[1], c.points[2], c.points[3], c.params[0])),
                     con.max_defect);
    auto cvx = convexity_defect(s, ss);
    const auto& v = cvx.witness;
    EXPECT_NEAR(midpoint_gap(s, v.points[0], v.points[1], v.points[2], v.points[3], v.params[0], v.params[1]),
                cvx.max_defect, 1e-12);
    auto cons = consistency_defect(s, ss);
    const auto& q = cons.witness;
    EXPECT_DOUBLE_EQ(consistency_gap(s, q.points[0], q.points[1], q.params[0], q.params[1], q.params[2]),
                     cons.max_defect);
    auto geo = geodesic_defect(s, ss);
    EXPECT_NEAR(geodesic_gap(s, geo.witness.points[0], geo.witness.points[1], geo.witness.params[0],
                             geo.witness.params[1]),
                geo.max_defect, 1e-12);
    EXPECT_EQ(con.samples, 200u);
}

TEST(DefectReports, DeterministicAcrossRuns)
{
    auto s = butterfly_bicombing();
    auto a = convexity_defect(s, spec(150, 3));
    auto b = convexity_defect(s, spec(150, 3));
    EXPECT_EQ(a.max_defect, b.max_defect);
    EXPECT_TRUE(a.witness == b.witness);
}

TEST(DefectReports, CorruptedBicombingIsDetected)
{
    auto swapped = bicombing_from("swapped", linf_space(2), [](const Point& x, const Point& y, double t) {
        return lerp(y, x, t);
    });
    EXPECT_GT(conical_defect(swapped, spec(200)).max_defect, 0.1);
    EXPECT_GT(geodesic_defect(swapped, spec(50)).max_defect, 0.1);
}

TEST(RetractBicombing, BrokenRetractionIsFlagged)
{
    auto bad = std::make_shared<RetractSpace>(*linf_space(2));
    bad->retract = [](const Point& p) { return Point{2 * p[0], p[1]}; };
    auto s = retract_bicombing(bad, linear_bicombing(2));
    EXPECT_EQ(s.warnings().size(), 2u);
    EXPECT_TRUE(retract_bicombing(linf_space(2), linear_bicombing(2)).warnings().empty());
}

TEST(RetractBicombing, TightSpanOfFourPointsIsConical)
{
    auto X = four_points();
    auto space = tight_span_space(X);
    auto s = retract_bicombing(space, linear_bicombing(4));
    EXPECT_TRUE(s.warnings().empty());
    Rng rng(4);
    for (int k = 0; k < 50; ++k) {
        Point f = space->sample(rng), g = space->sample(rng);
        EXPECT_TRUE(space->contains(s(f, g, rng.unit()), 1e-9));
    }
    EXPECT_LE(conical_defect(s, spec(300)).max_defect, 1e-9);
    EXPECT_LE(geodesic_defect(s, spec(100)).max_defect, 1e-9);
}

TEST(CatsCradle, ConstantOnTheDiagonalAndRefinesDiscreteConvexity)
{
    auto s = butterfly_bicombing();
    auto t = cats_cradle_step(s);
    EXPECT_EQ(t.discretization(), 3u);
    EXPECT_EQ(t.level(), 2);
    EXPECT_TRUE(t.warnings().empty());
    const Point p{1.5, 0.2};
    EXPECT_EQ(t(p, p, 0.37), p);
    EXPECT_EQ(t(bx, by, 0), bx);
    EXPECT_EQ(t(bx, by, 1), by);
    EXPECT_LE(discrete_convexity_defect(t, 3, spec(300, 21)).max_defect, 1e-9);
    EXPECT_LE(conical_defect(t, spec(300, 22)).max_defect, 1e-9);
    EXPECT_LE(geodesic_defect(t, spec(100, 23)).max_defect, 1e-9);
    auto stats = t.contraction_stats();
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_GT(stats[0].checks, 0u);
    EXPECT_EQ(stats[0].violations, 0u);
}

TEST(CatsCradle, RejectsInputsThatAreNotConical)
{
    auto swapped = bicombing_from("swapped", linf_space(2), [](const Point& x, const Point& y, double t) {
        return lerp(y, x, t);
    });
    EXPECT_THROW(cats_cradle_step(swapped), std::invalid_argument);
}

TEST(CatsCradle, LeavesConsistentGeodesicsAlone)
{
    auto lin = linear_bicombing(3);
    auto t = convexify(lin, 3).sigma;
    Rng rng(8);
    auto space = linf_space(3);
    for (int k = 0; k < 200; ++k) {
        Point x = space->sample(rng), y = space->sample(rng);
        const double u = rng.unit();
        EXPECT_LE(linf(t(x, y, u), lin(x, y, u)), 1e-12);
    }
}

TEST(CatsCradle, IterationCapIsEnforced)
{
    CatsCradleOptions opt;
    opt.max_iterations = 1;
    opt.verify_samples = 0;
    auto t = cats_cradle_step(butterfly_bicombing(), opt);
    EXPECT_THROW(t(Point{-1.5, 0.4}, Point{1.7, -0.6}, 0.5), std::runtime_error);
}

TEST(Convexify, ButterflyCascade)
{
    auto r = convexify(butterfly_bicombing(), 4, {}, spec(60, 2));
    ASSERT_EQ(r.levels.size(), 4u);
    const std::size_t ns[] = {2, 3, 5, 9};
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(r.levels[k].n, ns[k]);
        EXPECT_LE(r.levels[k].conical.max_defect, 1e-9);
        EXPECT_LE(r.levels[k].discrete.max_defect, 1e-9);
        EXPECT_EQ(r.levels[k].distance_to_previous.has_value(), k > 0);
    }
    EXPECT_LT(r.levels[3].convexity.max_defect, r.levels[0].convexity.max_defect);
    EXPECT_EQ(r.sigma.discretization(), 9u);
    for (const auto& st : r.sigma.contraction_stats())
        EXPECT_EQ(st.violations, 0u);
    EXPECT_LE(consistency_defect(r.sigma, spec(40)).max_defect, consistency_defect(butterfly_bicombing(), spec(40)).max_defect);
    EXPECT_THROW(convexify(butterfly_bicombing(), 0), std::invalid_argument);
}

TEST(Convexify, FourPointTightSpanFromTwoSeeds)
{
    auto X = four_points();
    auto space = tight_span_space(X);
    auto s1 = retract_bicombing(space, linear_bicombing(4));
    // a second 1-Lipschitz retraction: averaging step 1/3 instead of 1/2
    auto d = std::make_shared<SquareMatrix<double>>(X.distances_as_double());
    auto other = std::make_shared<RetractSpace>(*space);
    other->retract = [d](const Point& g) {
        auto v = g.to_vector();
        auto f = retract_to_delta<double>(*d, v);
        return Point(retract_to_tight_span<double>(*d, std::move(f), 1e-14, 100000, 1.0 / 3).form);
    };
    auto s2 = retract_bicombing(other, linear_bicombing(4));
    auto r1 = convexify(s1, 3, {}, spec(40, 5));
    auto r2 = convexify(s2, 3, {}, spec(40, 5));
    EXPECT_LE(r1.levels.back().convexity.max_defect, 1e-9);
    EXPECT_LE(r2.levels.back().convexity.max_defect, 1e-9);
    const double before = uniform_distance(s1, s2, spec(40, 6)).max_defect;
    const double after = uniform_distance(r1.sigma, r2.sigma, spec(40, 6)).max_defect;
    EXPECT_LE(after, before + 1e-9);
}

TEST(Straightness, LinearCurvesAndConvexCap)
{
    std::vector<std::vector<double>> line, wit;
    for (int k = 0; k <= 10; ++k)
        line.push_back({0.1 * k, -0.3 * k, 2.0});
    Rng rng(3);
    for (int k = 0; k < 50; ++k)
        wit.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)});
    EXPECT_LE(straightness_defect(line, wit).max_defect, 1e-12);

    auto C = convex_cap_set(9);
    auto r = straightness_defect(C.gamma, C.members);
    EXPECT_EQ(r.max_defect, 0);
    EXPECT_EQ(r.samples, C.members.size() * (C.gamma.size() - 2));
    EXPECT_THROW(straightness_defect(std::vector<std::vector<double>>{{0.0}, {1.0}}, wit), std::invalid_argument);
}

TEST(Straightness, BentGeodesicIsNotStraight)
{
    std::vector<std::vector<double>> bent;
    for (int k = 0; k <= 16; ++k) {
        const double t = k / 16.0;
        bent.push_back({2 * t, t <= 0.5 ? t : 1 - t});
    }
    std::vector<std::vector<double>> wit;
    for (int a = -4; a <= 12; ++a)
        for (int b = -8; b <= 8; ++b)
            wit.push_back({a / 4.0, b / 4.0});
    auto r = straightness_defect(bent, wit);
    EXPECT_GT(r.max_defect, 1e-3);
    ASSERT_EQ(r.witness.points.size(), 1u);
    // the bent curve is still a geodesic
    for (std::size_t k = 0; k + 1 < bent.size(); ++k)
        EXPECT_NEAR(std::max(std::abs(bent[k + 1][0] - bent[k][0]), std::abs(bent[k + 1][1] - bent[k][1])), 1.0 / 8,
                    1e-15);
}

TEST(Straightness, GeodesicsOfTheLinearBicombingAreStraight)
{
    auto s = linear_bicombing(3);
    auto space = linf_space(3);
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        Point x = space->sample(rng), y = space->sample(rng);
        std::vector<std::vector<double>> wit;
        for (int j = 0; j < 40; ++j)
            wit.push_back(space->sample(rng).to_vector());
        EXPECT_LE(straightness_defect(sample_curve(s, x, y, 17), wit).max_defect, 1e-12);
    }
}

TEST(UniquenessProbe, EqualCurvesAndRefusal)
{
    std::vector<std::vector<double>> a{{0, 0}, {1, 0.5}, {2, 1}}, wit{{0, 3}, {5, -1}};
    auto same = straight_uniqueness_probe(a, a, wit);
    EXPECT_FALSE(same.refused);
    EXPECT_EQ(same.distance_convexity.max_defect, 0);
    EXPECT_EQ(same.max_pointwise_distance, 0);

    std::vector<std::vector<double>> bent{{0, 0}, {1, 1}, {2, 0}}, flat{{0, 0}, {1, 0}, {2, 0}};
    auto r = straight_uniqueness_probe(bent, flat, {{1, -1}});
    EXPECT_TRUE(r.refused);
    EXPECT_GT(r.alpha_straightness.max_defect, 0);
}

TEST(UniquenessProbe, BigonHasTwoStraightSegments)
{
    auto B = bigon(4);
    const auto& X = B.space;
    std::vector<std::vector<Scalar>> ea, eb, wit;
    for (std::size_t k = 0; k <= B.m; ++k) {
        auto row = X.row(B.alpha[k]);
        ea.emplace_back(row.begin(), row.end());
        row = X.row(B.beta[k]);
        eb.emplace_back(row.begin(), row.end());
    }
    for (std::size_t i = 0; i < X.size(); ++i) {
        auto row = X.row(i);
        wit.emplace_back(row.begin(), row.end());
    }
    EXPECT_EQ(straightness_defect(ea, wit).max_defect, 0);
    EXPECT_EQ(straightness_defect(eb, wit).max_defect, 0);
    EXPECT_EQ(linf_distance(ea[2], eb[2]), Scalar(1) / 2);
}

TEST(UniquenessProbe, FourPointTightSpanSegmentsAgree)
{
    auto X = four_points();
    auto space = tight_span_space(X);
    auto s = retract_bicombing(space, linear_bicombing(4));
    auto t = convexify(s, 3).sigma;
    Rng rng(31);
    std::vector<std::vector<double>> wit;
    for (int k = 0; k < 60; ++k)
        wit.push_back(space->sample(rng).to_vector());
    std::size_t compared = 0;
    for (int k = 0; k < 15; ++k) {
        Point f = space->sample(rng), g = space->sample(rng);
        auto p = straight_uniqueness_probe(sample_curve(s, f, g, 9), sample_curve(t, f, g, 9), wit, 1e-9);
        if (p.refused)
            continue;
        ++compared;
        EXPECT_LE(p.distance_convexity.max_defect, 1e-9);
        EXPECT_LE(p.max_pointwise_distance, 1e-9);
    }
    EXPECT_GT(compared, 0u);
}

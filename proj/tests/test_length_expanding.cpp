#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace dendro;
using support::arc_interval;
using support::R;

namespace {

DenseFamily intervals() { return {DenseFamilyKind::all_closed_intervals, nullptr, {}}; }

/// Independent re-check of a witness against the definition.
void expect_genuine(const TreeMap& f, const LEWitness& w) {
    Subtree img = oracle::hull_image(f, w.set);
    EXPECT_NE(img, whole(f.codomain()));
    EXPECT_EQ(h1_measure(img), w.image_measure);
    EXPECT_EQ(h1_measure(w.set), w.measure);
    EXPECT_LT(w.image_measure, w.rho * w.measure);
}

}  // namespace

TEST(Checker, TentFailsAtRhoTwoOnTheMiddleInterval) {
    TreeMap t = support::tent();
    LEResult r = check_length_expanding(t, intervals(), R(2), 200, 1);
    ASSERT_FALSE(r.pass);
    ASSERT_TRUE(r.witness);
    EXPECT_EQ(r.witness->set, arc_interval(R(1, 4), R(3, 4)));
    expect_genuine(t, *r.witness);
}

TEST(Checker, ThreeLapZigzagPassesBelowItsSlope) {
    TreeMap z = support::zigzag(3);
    LEResult r = check_length_expanding(z, intervals(), R(3, 2), 400, 2);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.checked, 400u);
    EXPECT_FALSE(r.witness);
}

TEST(Checker, IdentityWitnessIsTheFirstDyadicInterval) {
    auto d = support::share(gallery::arc());
    TreeMap id = TreeMap::identity(d);
    LEResult r = check_length_expanding(id, intervals(), R(6, 5), 50, 3);
    ASSERT_FALSE(r.pass);
    EXPECT_EQ(r.witness->set, arc_interval(0, R(1, 2)));
    expect_genuine(id, *r.witness);
}

TEST(Checker, RejectsRhoAtMostOne) {
    TreeMap t = support::tent();
    EXPECT_THROW(check_length_expanding(t, intervals(), R(1), 10, 1), std::invalid_argument);
    EXPECT_THROW(check_length_expanding(t, {DenseFamilyKind::phi_images, nullptr, {}}, R(2), 10, 1),
                 std::invalid_argument);
}

TEST(Checker, ExplicitFamilies) {
    TreeMap t = support::tent();
    DenseFamily fam{DenseFamilyKind::explicit_sets, nullptr,
                    {arc_interval(0, R(1, 8)), arc_interval(R(1, 8), R(1, 2)), arc_interval(R(3, 8), R(5, 8))}};
    LEResult r = check_length_expanding(t, fam, R(3, 2), 0, 1);
    ASSERT_FALSE(r.pass);
    EXPECT_EQ(r.checked, 3u);
    EXPECT_EQ(r.witness->set, arc_interval(R(3, 8), R(5, 8)));
}

TEST(Checker, WitnessesAreAlwaysGenuine) {
    std::mt19937_64 rng(41);
    int found = 0;
    for (int t = 0; t < 80; ++t) {
        std::size_t laps = 1 + rng() % 4;
        TreeMap z = support::zigzag(laps);
        Rational rho = 1 + support::small_rational(rng, 4);
        if (rho <= 1) rho = R(5, 4);
        LEResult r = check_length_expanding(z, intervals(), rho, 60, rng());
        if (r.pass) continue;
        ++found;
        expect_genuine(z, *r.witness);
    }
    EXPECT_GT(found, 10);
}

TEST(Walk, DoubleCoverVisitsEveryEdgeTwice) {
    Dendrite d = gallery::comb(3);
    auto walk = detail::double_cover_walk(d, 0);
    EXPECT_EQ(walk.size(), 2 * d.edge_count() + 1);
    EXPECT_EQ(walk.front(), 0);
    EXPECT_EQ(walk.back(), 0);
    Rational len = 0;
    for (std::size_t i = 1; i < walk.size(); ++i) len += d.vertex_distance(walk[i - 1], walk[i]);
    EXPECT_EQ(len, 2 * d.total_length());
}

namespace {

void expect_pair_laws(const BuildPairResult& p, const Rational& rho) {
    ASSERT_TRUE(p.ok) << p.failure;
    const TreeMap& phi = *p.phi;
    const TreeMap& psi = *p.psi;
    EXPECT_EQ(p.tree->total_length(), 1);
    EXPECT_EQ(phi.apply(PointRef::vertex(0)), p.a);
    EXPECT_EQ(phi.apply(PointRef::vertex(1)), p.a);
    EXPECT_EQ(psi.apply(p.a), PointRef::vertex(0));
    EXPECT_EQ(phi.image(whole(*p.interval)), whole(*p.tree));
    EXPECT_EQ(psi.image(whole(*p.tree)), whole(*p.interval));
    EXPECT_EQ(p.laps % 2, 0u);
    // an independent seed finds no violation either
    EXPECT_TRUE(check_length_expanding(phi, intervals(), rho, 300, 99).pass);
    EXPECT_TRUE(check_length_expanding(psi, {DenseFamilyKind::phi_images, &phi, {}}, rho, 300, 98).pass);
}

}  // namespace

TEST(BuildPair, Arc) {
    Dendrite d = gallery::arc();
    BuildPairResult p = build_pair(d, d.marked("A.0"), R(6, 5));
    expect_pair_laws(p, R(6, 5));
    EXPECT_EQ(p.laps, 4u);
    EXPECT_EQ(p.attempts, 1u);
}

TEST(BuildPair, StarAtItsCenter) {
    Dendrite d = gallery::star();
    BuildPairResult p = build_pair(d, d.marked("center"), R(6, 5));
    expect_pair_laws(p, R(6, 5));
}

TEST(BuildPair, InteriorBasePointAndLargerRho) {
    Dendrite d = gallery::comb(2);
    BuildPairResult p = build_pair(d, PointRef::on_edge(0, R(1, 3)), R(3));
    expect_pair_laws(p, R(3));
    EXPECT_GE(p.laps, 6u);
}

TEST(BuildPair, RejectsBadInput) {
    Dendrite d = gallery::arc();
    EXPECT_THROW(build_pair(d, d.marked("A.0"), R(1)), std::invalid_argument);
    EXPECT_THROW(build_pair(Dendrite(1, {}), PointRef::vertex(0), R(2)), std::invalid_argument);
}

TEST(BuildPair, RandomTreesPassTheirOwnChecks) {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 12; ++t) {
        Dendrite d = support::random_tree(rng, 4);
        PointRef a = support::random_point_small(d, rng);
        Rational rho = 1 + support::small_rational(rng, 4);
        if (rho <= 1) rho = R(3, 2);
        BuildPairResult p = build_pair(d, a, rho);
        ASSERT_TRUE(p.ok) << p.failure;
        EXPECT_EQ(p.tree->total_length(), 1);
        EXPECT_EQ(p.phi->image(whole(*p.interval)), whole(*p.tree));
    }
}

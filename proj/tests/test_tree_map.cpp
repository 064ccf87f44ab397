#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace dendro;
using support::on_arc;
using support::R;

TEST(Apply, TentValues) {
    TreeMap t = support::tent();
    EXPECT_EQ(t.apply(on_arc(R(1, 2))), PointRef::vertex(1));
    EXPECT_EQ(t.apply(PointRef::vertex(0)), PointRef::vertex(0));
    EXPECT_EQ(t.apply(on_arc(R(3, 8))), on_arc(R(3, 4)));
    EXPECT_EQ(t.apply(on_arc(R(3, 4))), on_arc(R(1, 2)));
}

TEST(Apply, ComposedTent) {
    TreeMap t = support::tent();
    TreeMap tt = compose(t, t);
    EXPECT_EQ(tt.apply(on_arc(R(3, 8))), on_arc(R(1, 2)));
    EXPECT_EQ(power(t, 2).apply(on_arc(R(3, 8))), on_arc(R(1, 2)));
}

TEST(Apply, RejectsPointsOffTheDomain) {
    EXPECT_THROW(support::tent().apply(PointRef::on_edge(3, R(0))), std::invalid_argument);
}

TEST(TreeMapConstruction, ValidatesTables) {
    auto d = support::share(gallery::arc());
    EXPECT_THROW(TreeMap(d, {PointRef::vertex(0)}), std::invalid_argument);
    EdgeRule bad{{R(1, 2), R(1, 4)}, {PointRef::vertex(0), PointRef::vertex(1)}};
    EXPECT_THROW(TreeMap(d, {PointRef::vertex(0), PointRef::vertex(0)}, {bad}), std::invalid_argument);
}

TEST(Image, TentIntervals) {
    TreeMap t = support::tent();
    EXPECT_EQ(t.image(support::arc_interval(0, R(1, 4))), support::arc_interval(0, R(1, 2)));
    EXPECT_EQ(t.image(whole(t.domain())), whole(t.domain()));
    EXPECT_EQ(t.image(support::arc_interval(R(1, 4), R(3, 4))), support::arc_interval(R(1, 2), 1));
}

TEST(Image, StarArmFoldsOverTheOtherArms) {
    TreeMap f = support::star_fold();
    const Dendrite& d = f.domain();
    Subtree arm1 = geodesic(d, d.marked("center"), d.marked("e1"));
    Subtree expected = geodesic(d, d.marked("e2"), d.marked("e3"));
    EXPECT_EQ(f.image(arm1), expected);
    EXPECT_EQ(f.image(arm1), oracle::hull_image(f, arm1));
}

TEST(Relation, TentTrichotomyAtZero) {
    TreeMap t = support::tent();
    PointRef a = PointRef::vertex(0);
    EXPECT_EQ(classify_relation(t, a, on_arc(R(1, 2))), Relation::evades);
    EXPECT_EQ(classify_relation(t, a, on_arc(R(3, 4))), Relation::admires);
    EXPECT_EQ(classify_relation(t, a, on_arc(R(2, 3))), Relation::fixed);
    EXPECT_THROW(classify_relation(t, a, a), std::invalid_argument);
}

TEST(Relation, JumpOverAcrossAnInteriorPoint) {
    TreeMap f = support::flip();
    // a = 0 separates 1/2 from -1/2
    EXPECT_EQ(classify_relation(f, PointRef::vertex(1), PointRef::on_edge(1, R(1, 2))), Relation::jumps_over);
}

TEST(OrbitDecomposition, TentQuarter) {
    TreeMap t = support::tent();
    OrbitDecomposition od = orbit_decomposition(t, support::arc_interval(0, R(1, 4)), 10);
    ASSERT_TRUE(od.conclusive);
    EXPECT_EQ(od.n0, 0u);
    EXPECT_EQ(od.k, 1u);
    EXPECT_EQ(od.r, 1u);
    ASSERT_TRUE(od.all_stabilized());
    EXPECT_EQ(od.L[0], whole(t.domain()));
    EXPECT_EQ(od.cycle_verified, std::optional<bool>(true));
}

TEST(OrbitDecomposition, FlipSwapsHalves) {
    TreeMap f = support::flip();
    Subtree e = Subtree::from_spans({{1, R(1, 2), R(1)}});
    OrbitDecomposition od = orbit_decomposition(f, e, 10);
    ASSERT_TRUE(od.conclusive);
    EXPECT_EQ(od.n0, 0u);
    EXPECT_EQ(od.k, 2u);
    EXPECT_EQ(od.r, 2u);
    EXPECT_EQ(od.L[0], e);
    EXPECT_EQ(od.L[1], Subtree::from_spans({{0, R(0), R(1, 2)}}));
}

TEST(OrbitDecomposition, InvariantSet) {
    TreeMap t = support::tent();
    OrbitDecomposition od = orbit_decomposition(t, whole(t.domain()), 5);
    EXPECT_EQ(od.n0, 0u);
    EXPECT_EQ(od.k, 1u);
    EXPECT_EQ(od.r, 1u);
}

TEST(OrbitDecomposition, InconclusiveIsExplicit) {
    // x ↦ x/3: the images of [2/3, 1] are pairwise disjoint
    auto d = support::share(gallery::arc());
    TreeMap third(d, {PointRef::vertex(0), support::on_arc(R(1, 3))});
    OrbitDecomposition od = orbit_decomposition(third, support::arc_interval(R(2, 3), 1), 4);
    EXPECT_FALSE(od.conclusive);
    EXPECT_EQ(m_min(third, support::arc_interval(R(2, 3), 1), 4), std::nullopt);
    EXPECT_THROW(orbit_decomposition(third, support::arc_interval(R(1, 2), R(1, 2)), 4), std::invalid_argument);
}

TEST(MMin, Examples) {
    TreeMap t = support::tent();
    EXPECT_EQ(m_min(t, support::arc_interval(0, R(1, 4)), 10), std::optional<std::size_t>(1));
    EXPECT_EQ(m_min(support::flip(), Subtree::from_spans({{1, R(1, 2), R(1)}}), 10), std::optional<std::size_t>(2));
    EXPECT_EQ(m_min(t, whole(t.domain()), 10), std::optional<std::size_t>(1));
}

TEST(CoverTime, TentDoubling) {
    TreeMap t = support::tent();
    for (long m = 1; m <= 6; ++m) {
        Rational len = pow(R(1, 2), m);
        EXPECT_EQ(cover_time(t, support::arc_interval(0, len), 20), std::optional<std::size_t>(m));
    }
    EXPECT_EQ(cover_time(TreeMap::identity(t.domain_ptr()), support::arc_interval(0, R(1, 2)), 20), std::nullopt);
}

TEST(TreeMapProperties, ImagesAreConnectedAndMatchTheHull) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 150; ++t) {
        auto d = support::share(support::random_tree(rng));
        TreeMap f = support::random_map(d, rng);
        Subtree s = support::random_subtree(*d, rng, 3);
        Subtree img = f.image(s);
        ASSERT_EQ(img, oracle::hull_image(f, s));
        // connectivity: the hull of the image's own extreme points is the image
        ASSERT_EQ(span_of(*d, extreme_points(*d, img)), img);
    }
}

TEST(TreeMapProperties, PointImagesLieInSetImages) {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 100; ++t) {
        auto d = support::share(support::random_tree(rng));
        TreeMap f = support::random_map(d, rng);
        Subtree s = support::random_subtree(*d, rng, 3);
        Subtree img = f.image(s);
        for (const PointRef& p : oracle::sample_points(*d, s)) ASSERT_TRUE(contains(*d, img, f.apply(p)));
    }
}

TEST(TreeMapProperties, SemigroupLaw) {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 100; ++t) {
        auto d = support::share(support::random_tree(rng, 4));
        TreeMap f = support::random_map(d, rng);
        TreeMap ff = compose(f, f);
        Subtree s = support::random_subtree(*d, rng, 2);
        ASSERT_EQ(f.image(f.image(s)), ff.image(s));
        for (const PointRef& p : oracle::sample_points(*d, s)) ASSERT_EQ(ff.apply(p), f.apply(f.apply(p)));
    }
}

TEST(TreeMapProperties, TrichotomyMatchesGeodesicDefinition) {
    std::mt19937_64 rng(24);
    for (int t = 0; t < 200; ++t) {
        auto d = support::share(support::random_tree(rng));
        TreeMap f = support::random_map(d, rng);
        PointRef a = support::random_point_small(*d, rng), x = support::random_point_small(*d, rng);
        if (a == x) continue;
        Relation r = classify_relation(f, a, x);
        PointRef fx = f.apply(x);
        // definitional oracle on geodesics
        Relation expected = Relation::admires;
        if (fx == x) expected = Relation::fixed;
        else if (contains(*d, geodesic(*d, a, fx), x)) expected = Relation::evades;
        else if (fx != a && contains(*d, geodesic(*d, x, fx), a)) expected = Relation::jumps_over;
        ASSERT_EQ(r, expected);
        if (a.is_vertex() && d->degree(a.vertex_id()) == 1) ASSERT_NE(r, Relation::jumps_over);
    }
}

TEST(TreeMapProperties, DecompositionLaws) {
    std::mt19937_64 rng(25);
    int stabilized = 0;
    for (int t = 0; t < 60; ++t) {
        auto d = support::share(support::random_tree(rng, 5));
        TreeMap f = support::random_map(d, rng);
        Subtree e = support::random_nondegenerate_subtree(*d, rng);
        OrbitDecomposition od = orbit_decomposition(f, e, 12);
        if (!od.conclusive || !od.all_stabilized()) continue;
        ++stabilized;
        ASSERT_EQ(od.k % od.r, 0u);
        ASSERT_EQ(od.cycle_verified, std::optional<bool>(true));
        for (std::size_t j = 0; j < od.r; ++j) {
            std::vector<const Subtree*> parts;
            for (std::size_t l = j; l < od.k; l += od.r) parts.push_back(&od.K[l]);
            ASSERT_EQ(od.L[j], unite_all(parts));
        }
    }
    EXPECT_GT(stabilized, 20);
}

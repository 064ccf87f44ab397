#include "oracles.hpp"

#include "dendro/odometer.hpp"

#include <gtest/gtest.h>

using namespace dendro;
using support::R;

namespace {

Address random_address(std::mt19937_64& rng, std::size_t max_len) {
    std::vector<std::uint8_t> digits(rng() % (max_len + 1));
    for (auto& d : digits) d = static_cast<std::uint8_t>(rng() % 3);
    return Address(std::move(digits));
}

}  // namespace

TEST(Address, ParseAndPrint) {
    EXPECT_EQ(Address::parse("1^inf"), Address());
    EXPECT_EQ(Address::parse("0211^inf").str(), "021^inf");
    EXPECT_EQ(Address::parse("21^inf").digit(0), 2);
    EXPECT_EQ(Address::parse("21^inf").digit(40), 1);
    EXPECT_THROW(Address::parse("0213"), std::invalid_argument);
    EXPECT_THROW(Address::parse("031^inf"), std::invalid_argument);
    EXPECT_THROW(Address(std::vector<std::uint8_t>{3}), std::invalid_argument);
}

TEST(Address, AdditionCarries) {
    EXPECT_EQ(add(Address(), 1).str(), "21^inf");
    EXPECT_EQ(add(Address(), 2), Address::parse("021^inf"));
    EXPECT_EQ(add(Address::parse("21^inf"), -1), Address());
    EXPECT_EQ(add(Address(), -1).str(), "01^inf");
    for (std::uint64_t n = 0; n < 200; ++n) EXPECT_EQ(add(Address(), static_cast<std::int64_t>(n)).str(),
                                                      oracle::address_of_ones_plus(n));
}

TEST(Address, EllAndEmbedding) {
    EXPECT_EQ(ell(Address()), 0u);
    EXPECT_EQ(ell(Address::parse("0121^inf")), 2u);
    EXPECT_EQ(embed_x(Address()), R(1, 2));
    EXPECT_EQ(embed_x(Address::parse("01^inf")), R(1, 2) - R(2, 5));
    std::mt19937_64 rng(61);
    for (int t = 0; t < 200; ++t) {
        Address a = random_address(rng, 8);
        std::vector<int> digits(a.prefix().begin(), a.prefix().end());
        ASSERT_EQ(embed_x(a), oracle::embed_x_digits(digits));
        ASSERT_GE(embed_x(a), 0);
        ASSERT_LE(embed_x(a), 1);
    }
}

TEST(Address, Valuation) {
    EXPECT_EQ(valuation(Address(), Address()), std::nullopt);
    EXPECT_EQ(valuation(Address::parse("01^inf"), Address::parse("21^inf")), std::optional<std::size_t>(0));
    EXPECT_EQ(valuation(Address::parse("1121^inf"), Address()), std::optional<std::size_t>(2));
}

TEST(Step, Examples) {
    FiberPoint p{Address(), R(1)};
    FiberPoint q = step(p);
    EXPECT_EQ(q.alpha.str(), "21^inf");
    EXPECT_EQ(q.y, R(1, 3));
    EXPECT_EQ(step_inverse(q), p);
    EXPECT_THROW(step(FiberPoint{Address::parse("21^inf"), R(1, 2)}), std::invalid_argument);
    // carry that restores ones: 2 1 ... → 0 2 ...
    FiberPoint r = step(q);
    EXPECT_EQ(r.alpha.str(), "021^inf");
    EXPECT_EQ(r.y, R(1, 9));
}

TEST(Step, InverseOnRandomPoints) {
    std::mt19937_64 rng(62);
    for (int t = 0; t < 300; ++t) {
        Address a = random_address(rng, 6);
        FiberPoint p{a, fiber_length(a) * support::small_rational(rng, 9)};
        ASSERT_EQ(step_inverse(step(p)), p);
        ASSERT_EQ(step(step_inverse(p)), p);
        FiberPoint s = step(p);
        ASSERT_LE(s.y, fiber_length(s.alpha));
        ASSERT_GE(s.y, 0);
    }
}

TEST(Trajectory, DiameterMatchesTheDigitOracle) {
    auto traj = fiber_diam_traj(Address(), 2187);
    auto ells = ell_traj(Address(), 2187);
    ASSERT_EQ(traj.size(), 2188u);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        ASSERT_EQ(traj[n], oracle::diam_of_ones_plus(n)) << n;
        ASSERT_EQ(ells[n], oracle::ell_of_ones_plus(n)) << n;
    }
    EXPECT_EQ(traj[0], 1);
    EXPECT_EQ(traj[1], R(1, 3));
    EXPECT_EQ(traj[3], R(1, 3));
}

TEST(Trajectory, IteratingStepAgreesWithTheClosedForm) {
    FiberPoint p{Address(), R(1)};
    auto traj = fiber_diam_traj(Address(), 300);
    for (std::size_t n = 0; n <= 300; ++n) {
        ASSERT_EQ(p.y, traj[n]);
        p = step(p);
    }
}

TEST(Scrambled, CountsAndBound) {
    struct Case {
        Rational eps;
        std::size_t count;
    };
    for (const Case& c : {Case{R(1, 10), 4}, Case{R(1, 4), 2}, Case{R(1, 3), 1}}) {
        ScrambledCount s = eps_scrambled_max(Address(), c.eps, 1000);
        EXPECT_EQ(s.count, c.count);
        EXPECT_EQ(s.bound, c.count);
        EXPECT_EQ(s.count, oracle::max_separated(1000, 3 * c.eps));
    }
    EXPECT_THROW(eps_scrambled_max(Address(), R(0), 1000), std::invalid_argument);
    EXPECT_THROW(eps_scrambled_max(Address(), R(1, 4), 5), std::invalid_argument);
}

TEST(Scrambled, BoundAgreesWithBruteForceAcrossEpsilon) {
    for (long q = 2; q <= 40; ++q) {
        Rational eps = R(1, q);
        ScrambledCount s = eps_scrambled_max(Address(), eps, 1200);
        EXPECT_EQ(s.count, oracle::max_separated(1200, 3 * eps)) << "eps=1/" << q;
        EXPECT_EQ(s.count, s.bound) << "eps=1/" << q;
    }
}

TEST(Cantor, MembershipIsExact) {
    EXPECT_TRUE(in_cantor_set(R(0)));
    EXPECT_TRUE(in_cantor_set(R(1)));
    EXPECT_TRUE(in_cantor_set(R(1, 3)));
    EXPECT_TRUE(in_cantor_set(R(2, 3)));
    EXPECT_TRUE(in_cantor_set(R(1, 4)));
    EXPECT_TRUE(in_cantor_set(R(3, 4)));
    EXPECT_TRUE(in_cantor_set(R(1, 10)));
    EXPECT_FALSE(in_cantor_set(R(1, 2)));
    EXPECT_FALSE(in_cantor_set(R(2, 5)));
    EXPECT_FALSE(in_cantor_set(R(5, 27) + R(1, 100)));
    EXPECT_FALSE(in_cantor_set(R(-1, 3)));
    EXPECT_TRUE(in_cantor_restriction({Address::parse("21^inf"), R(1, 9)}));
    EXPECT_FALSE(in_cantor_restriction({Address::parse("21^inf"), R(1, 2)}));
}

TEST(Cantor, RestrictionIsInvariant) {
    std::mt19937_64 rng(63);
    for (int t = 0; t < 200; ++t) {
        Address a = random_address(rng, 5);
        // Cantor point with a random finite ternary {0,2} expansion
        Rational y = 0, scale = 1;
        for (int i = 0; i < 6; ++i) {
            scale /= 3;
            if (rng() % 2) y += 2 * scale;
        }
        FiberPoint p{a, y * fiber_length(a)};
        if (!in_cantor_restriction(p)) continue;
        ASSERT_TRUE(in_cantor_restriction(step(p)));
    }
}

TEST(Distality, HorizontalGapStaysAboveTheValuationBound) {
    std::mt19937_64 rng(64);
    for (int t = 0; t < 100; ++t) {
        Address a = random_address(rng, 6), b = random_address(rng, 6);
        auto v = valuation(a, b);
        if (!v || *v > 5) continue;
        Rational floor_gap = pow(R(1, 5), static_cast<long>(*v) + 1);
        for (int n = 0; n < 200; ++n) {
            ASSERT_GE(abs(embed_x(a) - embed_x(b)), floor_gap);
            ASSERT_EQ(valuation(a, b), v);
            a = add(a, 1);
            b = add(b, 1);
        }
    }
}

TEST(Pattern, DepthOne) {
    auto rects = pattern(1);
    ASSERT_EQ(rects.size(), 3u);
    EXPECT_EQ(rects[0].word, "0");
    EXPECT_EQ(rects[0].b, R(1, 5));
    EXPECT_EQ(rects[0].d, R(1, 3));
    EXPECT_EQ(rects[1].a, R(2, 5));
    EXPECT_EQ(rects[1].d, 1);
    EXPECT_EQ(rects[2].a, R(4, 5));
    EXPECT_EQ(rects[2].b, 1);
    EXPECT_EQ(pattern(4).size(), 81u);
    EXPECT_THROW(pattern(11), std::invalid_argument);
    EXPECT_THROW(child(rects[0], 3), std::invalid_argument);
}

TEST(Pattern, RectanglesContainTheirFibers) {
    // the fiber of an address with prefix w lies in rectangle w at every depth
    std::mt19937_64 rng(65);
    auto rects = pattern(4);
    std::map<std::string, Rect> by_word;
    for (const Rect& r : rects) by_word[r.word] = r;
    for (int t = 0; t < 100; ++t) {
        Address a = random_address(rng, 4);
        std::string w;
        for (std::size_t i = 0; i < 4; ++i) w += static_cast<char>('0' + a.digit(i));
        const Rect& r = by_word.at(w);
        Rational x = embed_x(a);
        EXPECT_LE(r.a, x);
        EXPECT_LE(x, r.b);
        EXPECT_LE(fiber_length(a), r.d - r.c);
    }
}

TEST(Gehman, DepthTwoStructure) {
    GehmanExtension g = gehman_extend(2);
    const Dendrite& d = *g.dendrite;
    EXPECT_EQ(d.vertex_count(), 7u);
    ASSERT_EQ(g.leaves.size(), 4u);
    for (VertexId leaf : g.leaves) EXPECT_EQ(d.degree(leaf), 1u);
    for (std::size_t v = 1; v < d.vertex_count(); ++v)
        if (d.degree(static_cast<VertexId>(v)) > 1) EXPECT_EQ(d.degree(static_cast<VertexId>(v)), 3u);
    EXPECT_EQ(g.leaf_labels, (std::vector<std::string>{"00", "01", "10", "11"}));
    std::vector<std::size_t> perm = g.leaf_permutation;
    std::sort(perm.begin(), perm.end());
    EXPECT_EQ(perm, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(g.map->apply(PointRef::vertex(g.root)), PointRef::vertex(g.root));
    EXPECT_THROW(gehman_extend(1), std::invalid_argument);
}

TEST(Gehman, LeafActionFollowsTheSkewProduct) {
    GehmanExtension g = gehman_extend(4);
    for (std::size_t i = 0; i < g.leaves.size(); ++i) {
        Rational y = 0, scale = 1;
        for (char bit : g.leaf_labels[i]) {
            scale /= 3;
            if (bit == '1') y += 2 * scale;
        }
        FiberPoint img = step(FiberPoint{Address(), y});
        EXPECT_EQ(g.leaf_labels[g.leaf_permutation[i]], vertical_cylinder(img, 4));
        EXPECT_EQ(g.map->apply(PointRef::vertex(g.leaves[i])), PointRef::vertex(g.leaves[g.leaf_permutation[i]]));
    }
}

#pragma once

#include "dendro/counterexamples.hpp"

#include <random>
#include <vector>

namespace support {

using namespace dendro;

inline Rational R(long p, long q = 1) { return make_rational(p, q); }

inline std::shared_ptr<const Dendrite> share(Dendrite d) { return std::make_shared<const Dendrite>(std::move(d)); }

/// Point at parameter t of the single edge of an arc.
inline PointRef on_arc(const Rational& t) { return PointRef::on_edge(0, t); }

inline Subtree arc_interval(const Rational& lo, const Rational& hi) {
    if (lo == hi) return Subtree::point(PointRef::on_edge(0, lo));
    return Subtree::from_spans({{0, lo, hi}});
}

/// Tent map on [0,1]: slope 2, fixes 0.
inline TreeMap tent() {
    auto d = share(gallery::arc());
    EdgeRule r{{R(1, 2)}, {PointRef::vertex(1)}};
    return TreeMap(d, {PointRef::vertex(0), PointRef::vertex(0)}, {r});
}

/// x ↦ -x on the arc [-1,1] (vertices 0 = -1, 1 = 0, 2 = 1).
inline TreeMap flip() {
    auto d = share(Dendrite(3, {{0, 1, R(1)}, {1, 2, R(1)}}));
    return TreeMap(d, {PointRef::vertex(2), PointRef::vertex(1), PointRef::vertex(0)});
}

/// Piecewise-linear zigzag on [0,1] with `laps` laps, starting at 0.
inline TreeMap zigzag(std::size_t laps) {
    auto d = share(gallery::arc());
    EdgeRule r;
    for (std::size_t i = 1; i < laps; ++i) {
        r.knots.push_back(R(static_cast<long>(i), static_cast<long>(laps)));
        r.images.push_back(PointRef::vertex(i % 2 ? 1 : 0));
    }
    return TreeMap(d, {PointRef::vertex(0), PointRef::vertex(laps % 2 ? 1 : 0)}, {r});
}

/// star3 map sending the arm to e1 over arms 2 and 3 and fixing the other arms pointwise.
inline TreeMap star_fold() {
    auto d = share(gallery::star());
    EdgeRule r{{R(1, 4)}, {PointRef::vertex(2)}};
    return TreeMap(d, {PointRef::vertex(0), PointRef::vertex(3), PointRef::vertex(2), PointRef::vertex(3)},
                   {r, {}, {}});
}

// ---------------------------------------------------------------------------
// Generators

inline Rational small_rational(std::mt19937_64& rng, long max_den = 8) {
    long q = 1 + static_cast<long>(rng() % static_cast<unsigned long>(max_den));
    long p = static_cast<long>(rng() % static_cast<unsigned long>(q + 1));
    return make_rational(p, q);
}

/// Random tree with 1..max_edges edges and lengths in {1/4, 1/2, ..., 2}.
inline Dendrite random_tree(std::mt19937_64& rng, std::size_t max_edges = 6) {
    std::size_t m = 1 + rng() % max_edges;
    std::vector<Edge> edges;
    for (std::size_t v = 1; v <= m; ++v) {
        VertexId parent = static_cast<VertexId>(rng() % v);
        edges.push_back({parent, static_cast<VertexId>(v), R(1 + static_cast<long>(rng() % 8), 4)});
    }
    return Dendrite(m + 1, std::move(edges));
}

inline PointRef random_point_small(const Dendrite& d, std::mt19937_64& rng, long max_den = 8) {
    if (rng() % 4 == 0) return PointRef::vertex(static_cast<VertexId>(rng() % d.vertex_count()));
    EdgeId e = static_cast<EdgeId>(rng() % d.edge_count());
    return d.canonical(PointRef::on_edge(e, d.edge(e).length * small_rational(rng, max_den)));
}

inline Subtree random_subtree(const Dendrite& d, std::mt19937_64& rng, std::size_t points = 2) {
    std::vector<PointRef> pts;
    for (std::size_t i = 0; i < points; ++i) pts.push_back(random_point_small(d, rng));
    return span_of(d, pts);
}

inline Subtree random_nondegenerate_subtree(const Dendrite& d, std::mt19937_64& rng) {
    for (;;) {
        Subtree s = random_subtree(d, rng, 2 + rng() % 2);
        if (!s.degenerate()) return s;
    }
}

/// Random piecewise-geodesic self map: random vertex images and up to two knots per edge.
inline TreeMap random_map(std::shared_ptr<const Dendrite> d, std::mt19937_64& rng) {
    std::vector<PointRef> vimg;
    for (std::size_t v = 0; v < d->vertex_count(); ++v)
        vimg.push_back(PointRef::vertex(static_cast<VertexId>(rng() % d->vertex_count())));
    std::vector<EdgeRule> rules;
    for (std::size_t e = 0; e < d->edge_count(); ++e) {
        EdgeRule r;
        std::size_t k = rng() % 3;
        const Rational& len = d->edge(static_cast<EdgeId>(e)).length;
        for (std::size_t i = 1; i <= k; ++i) {
            r.knots.push_back(len * R(static_cast<long>(i), static_cast<long>(k + 1)));
            r.images.push_back(random_point_small(*d, rng, 4));
        }
        rules.push_back(std::move(r));
    }
    return TreeMap(d, std::move(vimg), std::move(rules));
}

}  // namespace support

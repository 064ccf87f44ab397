#pragma once

#include "dendro/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dendro {

using VertexId = int;
using EdgeId = int;

struct Edge {
    VertexId u = 0;
    VertexId v = 0;
    Rational length;
};

/// A position on a dendrite: a vertex, or an offset along an edge measured
/// from the edge's first endpoint `u`.
///
/// Offsets 0 and the full edge length denote the endpoint vertices; use
/// Dendrite::canonical to obtain the unique representation.
class PointRef {
public:
    PointRef() = default;

    static PointRef vertex(VertexId v) {
        PointRef p;
        p.vertex_ = v;
        return p;
    }

    static PointRef on_edge(EdgeId e, Rational offset) {
        PointRef p;
        p.edge_ = e;
        p.offset_ = std::move(offset);
        return p;
    }

    bool is_vertex() const { return edge_ < 0; }
    VertexId vertex_id() const { return vertex_; }
    EdgeId edge_id() const { return edge_; }
    const Rational& offset() const { return offset_; }

    friend bool operator==(const PointRef& a, const PointRef& b) {
        return a.vertex_ == b.vertex_ && a.edge_ == b.edge_ && a.offset_ == b.offset_;
    }
    friend bool operator!=(const PointRef& a, const PointRef& b) { return !(a == b); }
    friend bool operator<(const PointRef& a, const PointRef& b) {
        if (a.edge_ != b.edge_) return a.edge_ < b.edge_;
        if (a.vertex_ != b.vertex_) return a.vertex_ < b.vertex_;
        return a.offset_ < b.offset_;
    }

private:
    VertexId vertex_ = -1;
    EdgeId edge_ = -1;
    Rational offset_;
};

/// Provenance of a generated dendrite: family name plus parameters, all as text.
struct GeneratorDescriptor {
    std::string family;
    std::map<std::string, std::string> params;

    friend bool operator==(const GeneratorDescriptor&, const GeneratorDescriptor&) = default;
};

using PlanarPoint = std::pair<Rational, Rational>;

struct Incidence {
    EdgeId edge;
    VertexId other;
};

/// Finite metric tree with exact rational edge lengths and the path metric.
///
/// Vertices are numbered 0..vertex_count-1. The constructor rejects graphs that
/// are not trees, non-positive lengths and invalid marked points.
class Dendrite {
public:
    Dendrite() : Dendrite(1, {}) {}

    Dendrite(std::size_t vertex_count, std::vector<Edge> edges,
             std::map<std::string, PointRef> marked = {},
             std::optional<GeneratorDescriptor> descriptor = std::nullopt,
             std::vector<PlanarPoint> coordinates = {})
        : vertex_count_(vertex_count),
          edges_(std::move(edges)),
          descriptor_(std::move(descriptor)),
          coordinates_(std::move(coordinates)) {
        if (vertex_count_ == 0) throw std::invalid_argument("dendrite needs at least one vertex");
        if (edges_.size() + 1 != vertex_count_)
            throw std::invalid_argument("edge count " + std::to_string(edges_.size()) +
                                        " does not match a tree on " + std::to_string(vertex_count_) +
                                        " vertices");
        if (!coordinates_.empty() && coordinates_.size() != vertex_count_)
            throw std::invalid_argument("coordinate table size does not match vertex count");
        incident_.assign(vertex_count_, {});
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            const Edge& e = edges_[i];
            if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= vertex_count_ ||
                static_cast<std::size_t>(e.v) >= vertex_count_)
                throw std::invalid_argument("edge " + std::to_string(i) + " references an unknown vertex");
            if (e.u == e.v) throw std::invalid_argument("edge " + std::to_string(i) + " is a loop");
            if (e.length <= 0)
                throw std::invalid_argument("edge " + std::to_string(i) + " has non-positive length");
            incident_[e.u].push_back({static_cast<EdgeId>(i), e.v});
            incident_[e.v].push_back({static_cast<EdgeId>(i), e.u});
        }
        root_tree();
        for (auto& [name, p] : marked) marked_.emplace(name, canonical(p));
    }

    std::size_t vertex_count() const { return vertex_count_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(EdgeId e) const {
        if (e < 0 || static_cast<std::size_t>(e) >= edges_.size())
            throw std::invalid_argument("unknown edge " + std::to_string(e));
        return edges_[e];
    }
    const std::vector<Incidence>& incident(VertexId v) const { return incident_.at(v); }
    std::size_t degree(VertexId v) const { return incident_.at(v).size(); }

    const std::map<std::string, PointRef>& marked() const { return marked_; }
    const PointRef& marked(const std::string& name) const {
        auto it = marked_.find(name);
        if (it == marked_.end()) throw std::invalid_argument("no marked point named '" + name + "'");
        return it->second;
    }
    bool has_marked(const std::string& name) const { return marked_.count(name) != 0; }
    const std::optional<GeneratorDescriptor>& descriptor() const { return descriptor_; }
    const std::vector<PlanarPoint>& coordinates() const { return coordinates_; }

    /// Offset of endpoint v on edge e (0 or the edge length).
    Rational offset_of(EdgeId e, VertexId v) const {
        const Edge& ed = edge(e);
        if (ed.u == v) return 0;
        if (ed.v == v) return ed.length;
        throw std::invalid_argument("vertex " + std::to_string(v) + " is not on edge " + std::to_string(e));
    }

    /// Validates and canonicalizes: endpoint offsets become vertices.
    PointRef canonical(const PointRef& p) const {
        if (p.is_vertex()) {
            if (p.vertex_id() < 0 || static_cast<std::size_t>(p.vertex_id()) >= vertex_count_)
                throw std::invalid_argument("point references unknown vertex " + std::to_string(p.vertex_id()));
            return p;
        }
        const Edge& e = edge(p.edge_id());
        if (p.offset() < 0 || p.offset() > e.length)
            throw std::invalid_argument("offset " + to_string(p.offset()) + " outside edge " +
                                        std::to_string(p.edge_id()));
        if (p.offset() == 0) return PointRef::vertex(e.u);
        if (p.offset() == e.length) return PointRef::vertex(e.v);
        return p;
    }

    VertexId parent(VertexId v) const { return parent_[v]; }
    EdgeId parent_edge(VertexId v) const { return parent_edge_[v]; }
    int level(VertexId v) const { return level_[v]; }
    const Rational& root_distance(VertexId v) const { return root_distance_[v]; }

    VertexId lca(VertexId a, VertexId b) const {
        while (level_[a] > level_[b]) a = parent_[a];
        while (level_[b] > level_[a]) b = parent_[b];
        while (a != b) {
            a = parent_[a];
            b = parent_[b];
        }
        return a;
    }

    Rational vertex_distance(VertexId a, VertexId b) const {
        return root_distance_[a] + root_distance_[b] - 2 * root_distance_[lca(a, b)];
    }

    Rational total_length() const {
        Rational total = 0;
        for (const Edge& e : edges_) total += e.length;
        return total;
    }

    friend bool operator==(const Dendrite& a, const Dendrite& b) {
        if (a.vertex_count_ != b.vertex_count_ || a.edges_.size() != b.edges_.size()) return false;
        for (std::size_t i = 0; i < a.edges_.size(); ++i) {
            const Edge& x = a.edges_[i];
            const Edge& y = b.edges_[i];
            if (x.u != y.u || x.v != y.v || x.length != y.length) return false;
        }
        return a.marked_ == b.marked_ && a.descriptor_ == b.descriptor_ && a.coordinates_ == b.coordinates_;
    }

private:
    void root_tree() {
        parent_.assign(vertex_count_, -1);
        parent_edge_.assign(vertex_count_, -1);
        level_.assign(vertex_count_, -1);
        root_distance_.assign(vertex_count_, Rational(0));
        std::vector<VertexId> stack{0};
        level_[0] = 0;
        std::size_t seen = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (const Incidence& inc : incident_[v]) {
                if (inc.edge == parent_edge_[v]) continue;
                if (level_[inc.other] >= 0) throw std::invalid_argument("edge graph contains a cycle");
                parent_[inc.other] = v;
                parent_edge_[inc.other] = inc.edge;
                level_[inc.other] = level_[v] + 1;
                root_distance_[inc.other] = root_distance_[v] + edges_[inc.edge].length;
                stack.push_back(inc.other);
                ++seen;
            }
        }
        if (seen != vertex_count_) throw std::invalid_argument("edge graph is not connected");
    }

    std::size_t vertex_count_ = 1;
    std::vector<Edge> edges_;
    std::map<std::string, PointRef> marked_;
    std::optional<GeneratorDescriptor> descriptor_;
    std::vector<PlanarPoint> coordinates_;
    std::vector<std::vector<Incidence>> incident_;
    std::vector<VertexId> parent_;
    std::vector<EdgeId> parent_edge_;
    std::vector<int> level_;
    std::vector<Rational> root_distance_;
};

// ---------------------------------------------------------------------------
// Distances and geodesics

/// One directed piece of a geodesic: along `edge` from offset `from` to `to`.
struct Step {
    EdgeId edge;
    Rational from;
    Rational to;
};

using Path = std::vector<Step>;

namespace detail {

struct Exit {
    VertexId vertex;
    Rational cost;
};

inline std::vector<Exit> exits(const Dendrite& d, const PointRef& p) {
    if (p.is_vertex()) return {{p.vertex_id(), Rational(0)}};
    const Edge& e = d.edge(p.edge_id());
    return {{e.u, p.offset()}, {e.v, Rational(e.length - p.offset())}};
}

// Edges walked from vertex a to vertex b, as directed steps.
inline void vertex_path(const Dendrite& d, VertexId a, VertexId b, Path& out) {
    VertexId top = d.lca(a, b);
    for (VertexId v = a; v != top; v = d.parent(v)) {
        EdgeId e = d.parent_edge(v);
        out.push_back({e, d.offset_of(e, v), d.offset_of(e, d.parent(v))});
    }
    Path down;
    for (VertexId v = b; v != top; v = d.parent(v)) {
        EdgeId e = d.parent_edge(v);
        down.push_back({e, d.offset_of(e, d.parent(v)), d.offset_of(e, v)});
    }
    out.insert(out.end(), down.rbegin(), down.rend());
}

}  // namespace detail

/// Path-metric distance between two points.
inline Rational dist(const Dendrite& d, const PointRef& x, const PointRef& y) {
    PointRef a = d.canonical(x);
    PointRef b = d.canonical(y);
    if (!a.is_vertex() && !b.is_vertex() && a.edge_id() == b.edge_id()) return abs(a.offset() - b.offset());
    std::optional<Rational> best;
    for (const auto& ea : detail::exits(d, a))
        for (const auto& eb : detail::exits(d, b)) {
            Rational c = ea.cost + eb.cost + d.vertex_distance(ea.vertex, eb.vertex);
            if (!best || c < *best) best = c;
        }
    return *best;
}

/// The geodesic from x to y as a sequence of directed edge steps. Empty iff x == y.
inline Path path(const Dendrite& d, const PointRef& x, const PointRef& y) {
    PointRef a = d.canonical(x);
    PointRef b = d.canonical(y);
    Path out;
    if (a == b) return out;
    if (!a.is_vertex() && !b.is_vertex() && a.edge_id() == b.edge_id()) {
        out.push_back({a.edge_id(), a.offset(), b.offset()});
        return out;
    }
    std::optional<Rational> best;
    detail::Exit ba{}, bb{};
    for (const auto& ea : detail::exits(d, a))
        for (const auto& eb : detail::exits(d, b)) {
            Rational c = ea.cost + eb.cost + d.vertex_distance(ea.vertex, eb.vertex);
            if (!best || c < *best) {
                best = c;
                ba = ea;
                bb = eb;
            }
        }
    if (!a.is_vertex()) out.push_back({a.edge_id(), a.offset(), d.offset_of(a.edge_id(), ba.vertex)});
    detail::vertex_path(d, ba.vertex, bb.vertex, out);
    if (!b.is_vertex()) out.push_back({b.edge_id(), d.offset_of(b.edge_id(), bb.vertex), b.offset()});
    return out;
}

inline Rational length(const Path& p) {
    Rational total = 0;
    for (const Step& s : p) total += abs(s.to - s.from);
    return total;
}

/// The point at arc length `s` along the path starting at `start`.
inline PointRef point_along(const Dendrite& d, const PointRef& start, const Path& p, const Rational& s) {
    if (s < 0) throw std::invalid_argument("negative arc length along path");
    Rational left = s;
    for (const Step& st : p) {
        Rational len = abs(st.to - st.from);
        if (left <= len) {
            Rational off = st.from < st.to ? Rational(st.from + left) : Rational(st.from - left);
            return d.canonical(PointRef::on_edge(st.edge, off));
        }
        left -= len;
    }
    if (left == 0) return d.canonical(start);
    throw std::invalid_argument("arc length exceeds path length");
}

// ---------------------------------------------------------------------------
// Subtrees

struct Span {
    EdgeId edge;
    Rational lo;
    Rational hi;

    friend bool operator==(const Span& a, const Span& b) {
        return a.edge == b.edge && a.lo == b.lo && a.hi == b.hi;
    }
};

/// A closed connected subset of a dendrite: either empty, a single point, or
/// a union of nondegenerate per-edge intervals (at most one per edge).
///
/// The representation is canonical, so `==` is set equality.
class Subtree {
public:
    Subtree() = default;

    static Subtree point(const PointRef& p) {
        Subtree s;
        s.point_ = p;
        return s;
    }

    /// Builds from arbitrary spans: degenerate spans dropped, same-edge spans
    /// merged by convex hull. The caller guarantees connectivity.
    static Subtree from_spans(std::vector<Span> spans) {
        Subtree s;
        std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.edge < b.edge; });
        for (Span& sp : spans) {
            if (sp.lo > sp.hi) std::swap(sp.lo, sp.hi);
            if (sp.lo == sp.hi) continue;
            if (!s.spans_.empty() && s.spans_.back().edge == sp.edge) {
                Span& last = s.spans_.back();
                if (sp.lo < last.lo) last.lo = sp.lo;
                if (sp.hi > last.hi) last.hi = sp.hi;
            } else {
                s.spans_.push_back(std::move(sp));
            }
        }
        return s;
    }

    bool empty() const { return spans_.empty() && !point_; }
    bool is_point() const { return spans_.empty() && point_.has_value(); }
    bool degenerate() const { return spans_.empty(); }
    const std::vector<Span>& spans() const { return spans_; }
    const std::optional<PointRef>& single_point() const { return point_; }

    const Span* span_on(EdgeId e) const {
        auto it = std::lower_bound(spans_.begin(), spans_.end(), e,
                                   [](const Span& s, EdgeId id) { return s.edge < id; });
        if (it == spans_.end() || it->edge != e) return nullptr;
        return &*it;
    }

    friend bool operator==(const Subtree& a, const Subtree& b) {
        if (!a.spans_.empty() || !b.spans_.empty()) return a.spans_ == b.spans_;
        return a.point_ == b.point_;
    }
    friend bool operator!=(const Subtree& a, const Subtree& b) { return !(a == b); }

private:
    std::vector<Span> spans_;
    std::optional<PointRef> point_;
};

inline Subtree whole(const Dendrite& d) {
    if (d.edge_count() == 0) return Subtree::point(PointRef::vertex(0));
    std::vector<Span> spans;
    for (std::size_t i = 0; i < d.edge_count(); ++i)
        spans.push_back({static_cast<EdgeId>(i), Rational(0), d.edges()[i].length});
    return Subtree::from_spans(std::move(spans));
}

inline Subtree from_path(const Dendrite& d, const PointRef& start, const Path& p) {
    if (p.empty()) return Subtree::point(d.canonical(start));
    std::vector<Span> spans;
    spans.reserve(p.size());
    for (const Step& s : p) spans.push_back({s.edge, s.from, s.to});
    Subtree t = Subtree::from_spans(std::move(spans));
    if (t.empty()) return Subtree::point(d.canonical(start));
    return t;
}

/// The arc [x, y]; the singleton {x} when x == y.
inline Subtree geodesic(const Dendrite& d, const PointRef& x, const PointRef& y) {
    return from_path(d, x, path(d, x, y));
}

inline bool contains(const Dendrite& d, const Subtree& s, const PointRef& x) {
    PointRef p = d.canonical(x);
    if (s.degenerate()) return s.single_point() && d.canonical(*s.single_point()) == p;
    if (p.is_vertex()) {
        for (const Incidence& inc : d.incident(p.vertex_id())) {
            const Span* sp = s.span_on(inc.edge);
            if (!sp) continue;
            Rational off = d.offset_of(inc.edge, p.vertex_id());
            if (sp->lo <= off && off <= sp->hi) return true;
        }
        return false;
    }
    const Span* sp = s.span_on(p.edge_id());
    return sp && sp->lo <= p.offset() && p.offset() <= sp->hi;
}

/// One-dimensional Hausdorff measure under the path metric.
inline Rational h1_measure(const Subtree& s) {
    Rational total = 0;
    for (const Span& sp : s.spans()) total += sp.hi - sp.lo;
    return total;
}

/// Span endpoints (canonical, deduplicated); the point itself for a singleton.
inline std::vector<PointRef> extreme_points(const Dendrite& d, const Subtree& s) {
    std::vector<PointRef> out;
    if (s.degenerate()) {
        if (s.single_point()) out.push_back(d.canonical(*s.single_point()));
        return out;
    }
    for (const Span& sp : s.spans()) {
        out.push_back(d.canonical(PointRef::on_edge(sp.edge, sp.lo)));
        out.push_back(d.canonical(PointRef::on_edge(sp.edge, sp.hi)));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Leaves of the subtree: extreme points that are not interior to it.
inline std::vector<PointRef> subtree_leaves(const Dendrite& d, const Subtree& s) {
    std::vector<PointRef> out;
    for (const PointRef& p : extreme_points(d, s)) {
        if (!p.is_vertex()) {
            out.push_back(p);
            continue;
        }
        int touching = 0;
        for (const Incidence& inc : d.incident(p.vertex_id())) {
            const Span* sp = s.span_on(inc.edge);
            if (!sp) continue;
            Rational off = d.offset_of(inc.edge, p.vertex_id());
            if (sp->lo <= off && off <= sp->hi) ++touching;
        }
        if (touching <= 1) out.push_back(p);
    }
    return out;
}

inline Rational diameter(const Dendrite& d, const Subtree& s) {
    std::vector<PointRef> pts = extreme_points(d, s);
    if (pts.size() <= 1) return 0;
    auto farthest = [&](const PointRef& from) {
        PointRef best = pts.front();
        Rational bd = -1;
        for (const PointRef& p : pts) {
            Rational v = dist(d, from, p);
            if (v > bd) {
                bd = v;
                best = p;
            }
        }
        return std::make_pair(best, bd);
    };
    auto [q, ignored] = farthest(pts.front());
    return farthest(q).second;
}

inline bool subset(const Dendrite& d, const Subtree& a, const Subtree& b) {
    if (a.empty()) return true;
    if (a.degenerate()) return contains(d, b, *a.single_point());
    for (const Span& sp : a.spans()) {
        const Span* other = b.span_on(sp.edge);
        if (!other || other->lo > sp.lo || other->hi < sp.hi) return false;
    }
    return true;
}

inline Subtree intersect(const Dendrite& d, const Subtree& a, const Subtree& b) {
    if (a.empty() || b.empty()) return {};
    if (a.degenerate()) return contains(d, b, *a.single_point()) ? a : Subtree{};
    if (b.degenerate()) return contains(d, a, *b.single_point()) ? b : Subtree{};
    std::vector<Span> spans;
    for (const Span& sp : a.spans()) {
        const Span* other = b.span_on(sp.edge);
        if (!other) continue;
        Rational lo = max(sp.lo, other->lo);
        Rational hi = min(sp.hi, other->hi);
        if (lo < hi) spans.push_back({sp.edge, lo, hi});
    }
    if (!spans.empty()) return Subtree::from_spans(std::move(spans));
    for (const PointRef& p : extreme_points(d, a))
        if (contains(d, b, p)) return Subtree::point(p);
    for (const PointRef& p : extreme_points(d, b))
        if (contains(d, a, p)) return Subtree::point(p);
    return {};
}

inline bool intersects(const Dendrite& d, const Subtree& a, const Subtree& b) {
    return !intersect(d, a, b).empty();
}

/// Union of subtrees whose union is connected (per-edge hull merge).
inline Subtree unite_all(const std::vector<const Subtree*>& parts) {
    std::vector<Span> spans;
    std::optional<PointRef> pt;
    for (const Subtree* s : parts) {
        spans.insert(spans.end(), s->spans().begin(), s->spans().end());
        if (!pt && s->single_point()) pt = s->single_point();
    }
    if (spans.empty()) return pt ? Subtree::point(*pt) : Subtree{};
    return Subtree::from_spans(std::move(spans));
}

inline Subtree unite(const Subtree& a, const Subtree& b) { return unite_all({&a, &b}); }

/// The unique point of `s` nearest to x (first-point map).
inline PointRef project(const Dendrite& d, const Subtree& s, const PointRef& x) {
    if (s.empty()) throw std::invalid_argument("projection onto an empty subtree");
    PointRef p = d.canonical(x);
    if (contains(d, s, p)) return p;
    if (s.degenerate()) return d.canonical(*s.single_point());
    PointRef target = extreme_points(d, s).front();
    for (const Step& st : path(d, p, target)) {
        if (const Span* sp = s.span_on(st.edge)) {
            Rational lo = min(st.from, st.to);
            Rational hi = max(st.from, st.to);
            if (sp->lo <= hi && lo <= sp->hi) {
                Rational entry = st.from < st.to ? max(st.from, sp->lo) : min(st.from, sp->hi);
                return d.canonical(PointRef::on_edge(st.edge, entry));
            }
        }
        PointRef end = d.canonical(PointRef::on_edge(st.edge, st.to));
        if (contains(d, s, end)) return end;
    }
    return target;
}

/// Distance between two subtrees (0 when they meet).
inline Rational set_distance(const Dendrite& d, const Subtree& a, const Subtree& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("distance to an empty subtree");
    if (intersects(d, a, b)) return 0;
    PointRef q = project(d, a, extreme_points(d, b).front());
    PointRef r = project(d, b, q);
    return dist(d, q, r);
}

/// All points within distance r of x (closed ball).
inline Subtree ball(const Dendrite& d, const PointRef& x, const Rational& r) {
    PointRef c = d.canonical(x);
    if (r < 0) throw std::invalid_argument("negative ball radius");
    std::vector<Span> spans;
    for (std::size_t i = 0; i < d.edge_count(); ++i) {
        EdgeId e = static_cast<EdgeId>(i);
        const Edge& ed = d.edges()[i];
        if (!c.is_vertex() && c.edge_id() == e) {
            spans.push_back({e, max(Rational(0), Rational(c.offset() - r)), min(ed.length, Rational(c.offset() + r))});
            continue;
        }
        Rational du = dist(d, c, PointRef::vertex(ed.u));
        Rational dv = dist(d, c, PointRef::vertex(ed.v));
        if (du <= dv) {
            if (r > du) spans.push_back({e, Rational(0), min(ed.length, Rational(r - du))});
        } else if (r > dv) {
            spans.push_back({e, max(Rational(0), Rational(ed.length - (r - dv))), ed.length});
        }
    }
    Subtree t = Subtree::from_spans(std::move(spans));
    return t.empty() ? Subtree::point(c) : t;
}

/// Smallest subtree containing all given points.
inline Subtree span_of(const Dendrite& d, const std::vector<PointRef>& points) {
    if (points.empty()) return {};
    std::vector<Subtree> parts;
    parts.reserve(points.size());
    for (const PointRef& p : points) parts.push_back(geodesic(d, points.front(), p));
    std::vector<const Subtree*> ptrs;
    for (const Subtree& s : parts) ptrs.push_back(&s);
    return unite_all(ptrs);
}

// ---------------------------------------------------------------------------
// Order sets and complements

/// Whole edges of the component of D \ {v} that contains edge `via` (which must be incident to v).
inline std::vector<EdgeId> branch_edges(const Dendrite& d, VertexId v, EdgeId via) {
    std::vector<EdgeId> out{via};
    const Edge& first = d.edge(via);
    VertexId start = first.u == v ? first.v : first.u;
    std::vector<std::pair<VertexId, EdgeId>> stack{{start, via}};
    while (!stack.empty()) {
        auto [w, from] = stack.back();
        stack.pop_back();
        for (const Incidence& inc : d.incident(w)) {
            if (inc.edge == from) continue;
            out.push_back(inc.edge);
            stack.push_back({inc.other, inc.edge});
        }
    }
    return out;
}

/// Whole edges reachable from v without passing through `from` (everything beyond v).
inline std::vector<EdgeId> edges_beyond(const Dendrite& d, VertexId v, EdgeId from) {
    std::vector<EdgeId> out;
    for (const Incidence& inc : d.incident(v)) {
        if (inc.edge == from) continue;
        auto part = branch_edges(d, v, inc.edge);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

namespace detail {

inline void add_whole_edges(const Dendrite& d, const std::vector<EdgeId>& edges, std::vector<Span>& spans) {
    for (EdgeId e : edges) spans.push_back({e, Rational(0), d.edge(e).length});
}

}  // namespace detail

/// D^a(x) = { y : x lies on [a, y] }.
inline Subtree upper_set(const Dendrite& d, const PointRef& a_in, const PointRef& x_in) {
    PointRef a = d.canonical(a_in);
    PointRef x = d.canonical(x_in);
    if (a == x) return whole(d);
    Path toward_a = path(d, x, a);
    const Step& first = toward_a.front();
    std::vector<Span> spans;
    if (!x.is_vertex()) {
        const Edge& e = d.edge(x.edge_id());
        bool a_on_u_side = first.to < first.from;
        if (a_on_u_side) {
            spans.push_back({x.edge_id(), x.offset(), e.length});
            detail::add_whole_edges(d, edges_beyond(d, e.v, x.edge_id()), spans);
        } else {
            spans.push_back({x.edge_id(), Rational(0), x.offset()});
            detail::add_whole_edges(d, edges_beyond(d, e.u, x.edge_id()), spans);
        }
        return Subtree::from_spans(std::move(spans));
    }
    for (const Incidence& inc : d.incident(x.vertex_id())) {
        if (inc.edge == first.edge) continue;
        detail::add_whole_edges(d, branch_edges(d, x.vertex_id(), inc.edge), spans);
    }
    if (spans.empty()) return Subtree::point(x);
    return Subtree::from_spans(std::move(spans));
}

/// D_[a,b]: the arc [a,b] together with everything hanging off its interior.
inline Subtree enclosed(const Dendrite& d, const PointRef& a_in, const PointRef& b_in) {
    PointRef a = d.canonical(a_in);
    PointRef b = d.canonical(b_in);
    if (a == b) return Subtree::point(a);
    Path p = path(d, a, b);
    std::vector<Span> spans;
    for (const Step& s : p) spans.push_back({s.edge, s.from, s.to});
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        // interior vertices of the arc are the junctions between consecutive steps
        PointRef junction = d.canonical(PointRef::on_edge(p[i].edge, p[i].to));
        VertexId w = junction.vertex_id();
        for (const Incidence& inc : d.incident(w)) {
            if (inc.edge == p[i].edge || inc.edge == p[i + 1].edge) continue;
            detail::add_whole_edges(d, branch_edges(d, w, inc.edge), spans);
        }
    }
    return Subtree::from_spans(std::move(spans));
}

struct Component {
    Subtree closure;     ///< the component together with its boundary point
    PointRef boundary;   ///< the single boundary point, lying in E
};

/// Components of D \ E, each with its (singleton) boundary in E.
struct Complement {
    std::vector<Component> components;
    bool covers_whole = false;  ///< E = D, so there are no components

    /// Bd*(E): distinct boundary points, in order of first appearance.
    std::vector<PointRef> escape_boundary() const {
        std::vector<PointRef> out;
        for (const Component& c : components)
            if (std::find(out.begin(), out.end(), c.boundary) == out.end()) out.push_back(c.boundary);
        return out;
    }

    /// Component indices grouped by boundary point (the sets B_c).
    std::map<PointRef, std::vector<std::size_t>> groups() const {
        std::map<PointRef, std::vector<std::size_t>> out;
        for (std::size_t i = 0; i < components.size(); ++i) out[components[i].boundary].push_back(i);
        return out;
    }
};

inline Complement components_minus(const Dendrite& d, const Subtree& e) {
    if (e.empty()) throw std::invalid_argument("complement of an empty subtree");
    Complement out;
    auto side_component = [&](EdgeId edge, const Rational& cut, bool toward_u) {
        const Edge& ed = d.edge(edge);
        std::vector<Span> spans;
        if (toward_u) {
            spans.push_back({edge, Rational(0), cut});
            detail::add_whole_edges(d, edges_beyond(d, ed.u, edge), spans);
        } else {
            spans.push_back({edge, cut, ed.length});
            detail::add_whole_edges(d, edges_beyond(d, ed.v, edge), spans);
        }
        out.components.push_back({Subtree::from_spans(std::move(spans)),
                                   d.canonical(PointRef::on_edge(edge, cut))});
    };
    auto vertex_branches = [&](VertexId w) {
        for (const Incidence& inc : d.incident(w)) {
            if (e.span_on(inc.edge)) continue;
            std::vector<Span> spans;
            detail::add_whole_edges(d, branch_edges(d, w, inc.edge), spans);
            out.components.push_back({Subtree::from_spans(std::move(spans)), PointRef::vertex(w)});
        }
    };
    if (e.degenerate()) {
        PointRef p = d.canonical(*e.single_point());
        if (p.is_vertex()) {
            vertex_branches(p.vertex_id());
        } else {
            side_component(p.edge_id(), p.offset(), true);
            side_component(p.edge_id(), p.offset(), false);
        }
    } else {
        for (const Span& sp : e.spans()) {
            if (sp.lo > 0) side_component(sp.edge, sp.lo, true);
            if (sp.hi < d.edge(sp.edge).length) side_component(sp.edge, sp.hi, false);
        }
        for (const PointRef& p : extreme_points(d, e))
            if (p.is_vertex()) vertex_branches(p.vertex_id());
    }
    out.covers_whole = out.components.empty();
    return out;
}

/// Number of components of D \ {x} in the finite tree.
inline std::size_t point_order(const Dendrite& d, const PointRef& x) {
    PointRef p = d.canonical(x);
    return p.is_vertex() ? d.degree(p.vertex_id()) : 2;
}

// ---------------------------------------------------------------------------
// Structural edits

/// A dendrite with extra vertices inserted; old points map into it.
struct Refinement {
    Dendrite dendrite;
    /// For every original edge: (start offset on the original edge, new edge id), ascending.
    std::vector<std::vector<std::pair<Rational, EdgeId>>> pieces;

    PointRef map(const PointRef& p) const {
        if (p.is_vertex()) return p;
        const auto& list = pieces.at(p.edge_id());
        auto it = std::upper_bound(list.begin(), list.end(), p.offset(),
                                   [](const Rational& off, const auto& piece) { return off < piece.first; });
        --it;
        return dendrite.canonical(PointRef::on_edge(it->second, p.offset() - it->first));
    }
};

/// Inserts vertices at the given edge-interior points (vertices are ignored).
/// The first piece of each split edge keeps the original edge id.
inline Refinement refine(const Dendrite& d, const std::vector<PointRef>& points) {
    std::vector<std::vector<Rational>> cuts(d.edge_count());
    for (const PointRef& raw : points) {
        PointRef p = d.canonical(raw);
        if (!p.is_vertex()) cuts[p.edge_id()].push_back(p.offset());
    }
    std::vector<Edge> edges = d.edges();
    std::size_t vertex_count = d.vertex_count();
    std::vector<PlanarPoint> coords = d.coordinates();
    Refinement r{Dendrite(), {}};
    r.pieces.resize(d.edge_count());
    for (std::size_t i = 0; i < d.edge_count(); ++i) {
        auto& c = cuts[i];
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        const Edge original = d.edges()[i];
        r.pieces[i].push_back({Rational(0), static_cast<EdgeId>(i)});
        if (c.empty()) continue;
        VertexId prev = original.u;
        Rational prev_off = 0;
        EdgeId current = static_cast<EdgeId>(i);
        for (const Rational& off : c) {
            VertexId nv = static_cast<VertexId>(vertex_count++);
            if (!coords.empty()) {
                const auto& pu = d.coordinates()[original.u];
                const auto& pv = d.coordinates()[original.v];
                Rational t = off / original.length;
                coords.push_back({pu.first + t * (pv.first - pu.first), pu.second + t * (pv.second - pu.second)});
            }
            edges[current] = {prev, nv, Rational(off - prev_off)};
            edges.push_back({nv, original.v, Rational(original.length - off)});
            current = static_cast<EdgeId>(edges.size() - 1);
            r.pieces[i].push_back({off, current});
            prev = nv;
            prev_off = off;
        }
    }
    std::map<std::string, PointRef> marked;
    Dendrite tmp(vertex_count, edges, {}, d.descriptor(), coords);
    r.dendrite = tmp;
    for (const auto& [name, p] : d.marked()) marked.emplace(name, r.map(p));
    r.dendrite = Dendrite(vertex_count, std::move(edges), std::move(marked), d.descriptor(), std::move(coords));
    return r;
}

/// Same tree with new edge lengths (indexed by edge id).
inline Dendrite with_lengths(const Dendrite& d, const std::vector<Rational>& lengths) {
    if (lengths.size() != d.edge_count()) throw std::invalid_argument("length table size mismatch");
    std::vector<Edge> edges = d.edges();
    std::map<std::string, PointRef> marked;
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i].length = lengths[i];
    for (const auto& [name, p] : d.marked()) {
        if (p.is_vertex()) {
            marked.emplace(name, p);
        } else {
            Rational scale = lengths[p.edge_id()] / d.edge(p.edge_id()).length;
            marked.emplace(name, PointRef::on_edge(p.edge_id(), p.offset() * scale));
        }
    }
    return Dendrite(d.vertex_count(), std::move(edges), std::move(marked), d.descriptor(), d.coordinates());
}

inline Dendrite scaled(const Dendrite& d, const Rational& factor) {
    std::vector<Rational> lengths;
    for (const Edge& e : d.edges()) lengths.push_back(e.length * factor);
    return with_lengths(d, lengths);
}

/// A subtree made of whole edges, re-indexed as a standalone dendrite.
struct SubDendrite {
    Dendrite local;
    std::vector<VertexId> to_global_vertex;
    std::vector<EdgeId> to_global_edge;
    std::map<VertexId, VertexId> to_local_vertex;
    /// Global length = local length * scale.
    Rational scale = 1;

    PointRef to_global(const PointRef& p) const {
        if (p.is_vertex()) return PointRef::vertex(to_global_vertex.at(p.vertex_id()));
        return PointRef::on_edge(to_global_edge.at(p.edge_id()), p.offset() * scale);
    }
};

/// Extracts the whole-edge subtree `s`, with local lengths = global / scale.
inline SubDendrite extract(const Dendrite& d, const Subtree& s, const Rational& scale = 1) {
    SubDendrite out;
    out.scale = scale;
    std::vector<Edge> edges;
    auto local_vertex = [&](VertexId g) {
        auto it = out.to_local_vertex.find(g);
        if (it != out.to_local_vertex.end()) return it->second;
        VertexId id = static_cast<VertexId>(out.to_global_vertex.size());
        out.to_global_vertex.push_back(g);
        out.to_local_vertex.emplace(g, id);
        return id;
    };
    if (s.degenerate()) {
        PointRef p = d.canonical(*s.single_point());
        if (!p.is_vertex()) throw std::invalid_argument("extract: degenerate subtree must be a vertex");
        local_vertex(p.vertex_id());
        out.local = Dendrite(1, {});
        return out;
    }
    for (const Span& sp : s.spans()) {
        const Edge& e = d.edge(sp.edge);
        if (sp.lo != 0 || sp.hi != e.length) throw std::invalid_argument("extract: subtree must consist of whole edges");
        VertexId u = local_vertex(e.u);
        VertexId v = local_vertex(e.v);
        edges.push_back({u, v, Rational(e.length / scale)});
        out.to_global_edge.push_back(sp.edge);
    }
    out.local = Dendrite(out.to_global_vertex.size(), std::move(edges));
    return out;
}

}  // namespace dendro

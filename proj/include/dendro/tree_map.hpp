#pragma once

#include "dendro/metric_tree.hpp"

#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace dendro {

/// Interior knots of one domain edge and the images of those knots.
/// Between consecutive knots (edge ends included) the map runs at constant
/// speed along the geodesic joining the two images.
struct EdgeRule {
    std::vector<Rational> knots;
    std::vector<PointRef> images;
};

/// Continuous map between finite metric trees, piecewise geodesic-linear.
class TreeMap {
public:
    TreeMap(std::shared_ptr<const Dendrite> domain, std::shared_ptr<const Dendrite> codomain,
            std::vector<PointRef> vertex_images, std::vector<EdgeRule> rules = {})
        : domain_(std::move(domain)), codomain_(std::move(codomain)) {
        if (!domain_) throw std::invalid_argument("tree map without a domain");
        if (!codomain_) codomain_ = domain_;
        if (vertex_images.size() != domain_->vertex_count())
            throw std::invalid_argument("vertex image table has " + std::to_string(vertex_images.size()) +
                                        " entries, domain has " + std::to_string(domain_->vertex_count()) +
                                        " vertices");
        for (auto& p : vertex_images) p = codomain_->canonical(p);
        vertex_images_ = std::move(vertex_images);
        if (rules.empty()) rules.resize(domain_->edge_count());
        if (rules.size() != domain_->edge_count())
            throw std::invalid_argument("edge rule table size does not match edge count");
        edges_.resize(domain_->edge_count());
        for (std::size_t i = 0; i < rules.size(); ++i) build_edge(static_cast<EdgeId>(i), std::move(rules[i]));
    }

    /// Self-map convenience.
    TreeMap(std::shared_ptr<const Dendrite> d, std::vector<PointRef> vertex_images, std::vector<EdgeRule> rules = {})
        : TreeMap(d, d, std::move(vertex_images), std::move(rules)) {}

    static TreeMap identity(std::shared_ptr<const Dendrite> d) {
        std::vector<PointRef> imgs;
        for (std::size_t v = 0; v < d->vertex_count(); ++v) imgs.push_back(PointRef::vertex(static_cast<VertexId>(v)));
        return TreeMap(d, std::move(imgs));
    }

    const Dendrite& domain() const { return *domain_; }
    const Dendrite& codomain() const { return *codomain_; }
    const std::shared_ptr<const Dendrite>& domain_ptr() const { return domain_; }
    const std::shared_ptr<const Dendrite>& codomain_ptr() const { return codomain_; }
    bool is_self_map() const { return domain_ == codomain_ || *domain_ == *codomain_; }

    const std::vector<PointRef>& vertex_images() const { return vertex_images_; }
    /// Knots of edge e including both ends (0 and the edge length).
    const std::vector<Rational>& knots(EdgeId e) const { return edges_.at(e).knots; }
    /// Images of all knots of edge e, ends included.
    const std::vector<PointRef>& knot_images(EdgeId e) const { return edges_.at(e).images; }
    std::size_t piece_count(EdgeId e) const { return edges_.at(e).paths.size(); }
    std::size_t piece_count() const {
        std::size_t n = 0;
        for (const auto& e : edges_) n += e.paths.size();
        return n;
    }

    EdgeRule rule(EdgeId e) const {
        const auto& ed = edges_.at(e);
        EdgeRule r;
        r.knots.assign(ed.knots.begin() + 1, ed.knots.end() - 1);
        r.images.assign(ed.images.begin() + 1, ed.images.end() - 1);
        return r;
    }

    PointRef apply(const PointRef& x) const {
        PointRef p = domain_->canonical(x);
        if (p.is_vertex()) return vertex_images_[p.vertex_id()];
        const EdgeData& ed = edges_[p.edge_id()];
        std::size_t i = piece_index(ed, p.offset());
        return eval_piece(ed, i, p.offset());
    }

    /// Exact image of a subtree of the domain.
    Subtree image(const Subtree& s) const {
        if (s.empty()) return {};
        if (s.degenerate()) return Subtree::point(apply(*s.single_point()));
        std::vector<Span> spans;
        std::optional<PointRef> pt;
        auto take = [&](const Subtree& t) {
            spans.insert(spans.end(), t.spans().begin(), t.spans().end());
            if (!pt && t.single_point()) pt = t.single_point();
        };
        for (const Span& sp : s.spans()) {
            const EdgeData& ed = edges_[sp.edge];
            std::size_t first = piece_index(ed, sp.lo);
            std::size_t last = piece_index_left(ed, sp.hi);
            if (first == last) {
                take(sub_image(ed, first, sp.lo, sp.hi));
                continue;
            }
            take(sub_image(ed, first, sp.lo, ed.knots[first + 1]));
            take(sub_image(ed, last, ed.knots[last], sp.hi));
            if (first + 1 < last) query(ed, first + 1, last, take);
        }
        if (spans.empty()) return Subtree::point(*pt);
        return Subtree::from_spans(std::move(spans));
    }

    /// f^n(s).
    Subtree image_iter(Subtree s, std::size_t n) const {
        for (std::size_t i = 0; i < n; ++i) s = image(s);
        return s;
    }

private:
    struct EdgeData {
        std::vector<Rational> knots;
        std::vector<PointRef> images;
        std::vector<Path> paths;
        std::vector<Rational> path_lengths;
        std::size_t leaves = 0;
        std::vector<Subtree> tree;  // segment tree over piece images
    };

    void build_edge(EdgeId e, EdgeRule rule) {
        const Edge& edge = domain_->edge(e);
        if (rule.knots.size() != rule.images.size())
            throw std::invalid_argument("edge " + std::to_string(e) + ": knot and image counts differ");
        EdgeData& ed = edges_[e];
        ed.knots.reserve(rule.knots.size() + 2);
        ed.knots.push_back(0);
        ed.images.push_back(vertex_images_[edge.u]);
        for (std::size_t i = 0; i < rule.knots.size(); ++i) {
            if (rule.knots[i] <= ed.knots.back() || rule.knots[i] >= edge.length)
                throw std::invalid_argument("edge " + std::to_string(e) + ": knots must increase strictly inside the edge");
            ed.knots.push_back(rule.knots[i]);
            ed.images.push_back(codomain_->canonical(rule.images[i]));
        }
        ed.knots.push_back(edge.length);
        ed.images.push_back(vertex_images_[edge.v]);
        std::size_t pieces = ed.knots.size() - 1;
        ed.paths.reserve(pieces);
        for (std::size_t i = 0; i < pieces; ++i) {
            ed.paths.push_back(path(*codomain_, ed.images[i], ed.images[i + 1]));
            ed.path_lengths.push_back(length(ed.paths.back()));
        }
        ed.leaves = 1;
        while (ed.leaves < pieces) ed.leaves *= 2;
        ed.tree.assign(2 * ed.leaves, Subtree{});
        for (std::size_t i = 0; i < pieces; ++i)
            ed.tree[ed.leaves + i] = from_path(*codomain_, ed.images[i], ed.paths[i]);
        for (std::size_t i = ed.leaves - 1; i >= 1; --i) {
            const Subtree& l = ed.tree[2 * i];
            const Subtree& r = ed.tree[2 * i + 1];
            if (r.empty()) ed.tree[i] = l;
            else if (l.empty()) ed.tree[i] = r;
            else ed.tree[i] = unite(l, r);
        }
    }

    // Piece containing offset t (the right-hand piece at a knot).
    static std::size_t piece_index(const EdgeData& ed, const Rational& t) {
        auto it = std::upper_bound(ed.knots.begin(), ed.knots.end(), t);
        std::size_t i = static_cast<std::size_t>(it - ed.knots.begin());
        i = i == 0 ? 0 : i - 1;
        return std::min(i, ed.paths.size() - 1);
    }

    // Piece containing offset t (the left-hand piece at a knot).
    static std::size_t piece_index_left(const EdgeData& ed, const Rational& t) {
        auto it = std::lower_bound(ed.knots.begin(), ed.knots.end(), t);
        std::size_t i = static_cast<std::size_t>(it - ed.knots.begin());
        i = i == 0 ? 0 : i - 1;
        return std::min(i, ed.paths.size() - 1);
    }

    PointRef eval_piece(const EdgeData& ed, std::size_t i, const Rational& t) const {
        if (t == ed.knots[i]) return ed.images[i];
        if (t == ed.knots[i + 1]) return ed.images[i + 1];
        Rational s = (t - ed.knots[i]) / (ed.knots[i + 1] - ed.knots[i]) * ed.path_lengths[i];
        return point_along(*codomain_, ed.images[i], ed.paths[i], s);
    }

    Subtree sub_image(const EdgeData& ed, std::size_t i, const Rational& lo, const Rational& hi) const {
        if (lo == ed.knots[i] && hi == ed.knots[i + 1]) return ed.tree[ed.leaves + i];
        return geodesic(*codomain_, eval_piece(ed, i, lo), eval_piece(ed, i, hi));
    }

    template <class Take>
    static void query(const EdgeData& ed, std::size_t lo, std::size_t hi, Take& take) {
        for (std::size_t l = lo + ed.leaves, r = hi + ed.leaves; l < r; l /= 2, r /= 2) {
            if (l & 1) take(ed.tree[l++]);
            if (r & 1) take(ed.tree[--r]);
        }
    }

    std::shared_ptr<const Dendrite> domain_;
    std::shared_ptr<const Dendrite> codomain_;
    std::vector<PointRef> vertex_images_;
    std::vector<EdgeData> edges_;
};

/// g ∘ f (f's codomain must be g's domain).
inline TreeMap compose(const TreeMap& g, const TreeMap& f) {
    if (!(f.codomain() == g.domain())) throw std::invalid_argument("compose: codomain/domain mismatch");
    const Dendrite& mid = f.codomain();
    std::vector<PointRef> vimg;
    for (const PointRef& p : f.vertex_images()) vimg.push_back(g.apply(p));
    std::vector<EdgeRule> rules(f.domain().edge_count());
    for (std::size_t e = 0; e < f.domain().edge_count(); ++e) {
        const auto& ks = f.knots(static_cast<EdgeId>(e));
        const auto& im = f.knot_images(static_cast<EdgeId>(e));
        EdgeRule& rule = rules[e];
        for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
            Path p = path(mid, im[i], im[i + 1]);
            Rational total = length(p);
            Rational walked = 0;
            Rational width = ks[i + 1] - ks[i];
            auto add_break = [&](const Rational& s) {
                if (s <= 0 || s >= total) return;
                rule.knots.push_back(ks[i] + s / total * width);
                rule.images.push_back(g.apply(point_along(mid, im[i], p, s)));
            };
            for (const Step& st : p) {
                const auto& gk = g.knots(st.edge);
                bool up = st.from < st.to;
                Rational lo = up ? st.from : st.to;
                Rational hi = up ? st.to : st.from;
                auto first = std::upper_bound(gk.begin(), gk.end(), lo);
                auto last = std::lower_bound(gk.begin(), gk.end(), hi);
                std::vector<Rational> inside(first, last);
                if (!up) std::reverse(inside.begin(), inside.end());
                for (const Rational& k : inside) add_break(walked + abs(k - st.from));
                walked += hi - lo;
                add_break(walked);
            }
            if (i + 2 < ks.size()) {
                rule.knots.push_back(ks[i + 1]);
                rule.images.push_back(g.apply(im[i + 1]));
            }
        }
    }
    return TreeMap(f.domain_ptr(), g.codomain_ptr(), std::move(vimg), std::move(rules));
}

inline TreeMap power(const TreeMap& f, std::size_t n) {
    TreeMap result = TreeMap::identity(f.domain_ptr());
    for (std::size_t i = 0; i < n; ++i) result = compose(f, result);
    return result;
}

// ---------------------------------------------------------------------------
// Point relations

enum class Relation { fixed, evades, admires, jumps_over };

inline const char* to_string(Relation r) {
    switch (r) {
        case Relation::fixed: return "fixed";
        case Relation::evades: return "evades";
        case Relation::admires: return "admires";
        case Relation::jumps_over: return "jumps_over";
    }
    return "?";
}

/// How x moves relative to a under f (a ≠ x).
inline Relation classify_relation(const TreeMap& f, const PointRef& a_in, const PointRef& x_in) {
    const Dendrite& d = f.domain();
    PointRef a = d.canonical(a_in);
    PointRef x = d.canonical(x_in);
    if (a == x) throw std::invalid_argument("classify_relation: a and x coincide");
    PointRef fx = f.apply(x);
    if (fx == x) return Relation::fixed;
    if (contains(d, upper_set(d, a, x), fx)) return Relation::evades;
    if (fx != a && contains(d, upper_set(d, x, a), fx)) return Relation::jumps_over;
    return Relation::admires;
}

// ---------------------------------------------------------------------------
// Orbits of subtrees

/// Cached forward images f^n(E).
class Orbit {
public:
    Orbit(const TreeMap& f, Subtree e) : f_(&f) { iterates_.push_back(std::move(e)); }

    const Subtree& operator[](std::size_t n) {
        while (iterates_.size() <= n) iterates_.push_back(f_->image(iterates_.back()));
        return iterates_[n];
    }

private:
    const TreeMap* f_;
    std::vector<Subtree> iterates_;
};

struct OrbitDecomposition {
    bool conclusive = false;
    std::size_t horizon = 0;
    std::size_t n0 = 0;
    std::size_t k = 0;
    std::vector<Subtree> K;
    std::vector<bool> K_stabilized;
    std::size_t r = 0;
    std::vector<Subtree> L;
    /// f(K_i) = K_{i+1} for i < k-1 and f(K_{k-1}) ⊆ K_0; only checked when all K are stabilized.
    std::optional<bool> cycle_verified;

    bool all_stabilized() const {
        return std::all_of(K_stabilized.begin(), K_stabilized.end(), [](bool b) { return b; });
    }
};

/// Least (n0, k) with f^{n0}(E) ∩ f^{n0+k}(E) ≠ ∅, then the sets
/// K_i = ∪_j f^{n0+i+jk}(E) and the components L_j of their union.
inline OrbitDecomposition orbit_decomposition(const TreeMap& f, const Subtree& e, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("orbit_decomposition: horizon must be positive");
    if (e.degenerate()) throw std::invalid_argument("orbit_decomposition: E must be nondegenerate");
    const Dendrite& d = f.domain();
    Orbit orbit(f, e);
    OrbitDecomposition out;
    out.horizon = horizon;
    bool found = false;
    for (std::size_t n = 0; n <= horizon && !found; ++n)
        for (std::size_t k = 1; k <= horizon; ++k)
            if (intersects(d, orbit[n], orbit[n + k])) {
                out.n0 = n;
                out.k = k;
                found = true;
                break;
            }
    if (!found) return out;
    out.conclusive = true;
    for (std::size_t i = 0; i < out.k; ++i) {
        Subtree acc = orbit[out.n0 + i];
        bool stable = false;
        for (std::size_t j = 1; j <= horizon; ++j) {
            Subtree next = unite(acc, orbit[out.n0 + i + j * out.k]);
            if (next == acc) {
                stable = true;
                break;
            }
            acc = std::move(next);
        }
        out.K.push_back(std::move(acc));
        out.K_stabilized.push_back(stable);
    }
    if (out.all_stabilized()) {
        bool ok = true;
        for (std::size_t i = 0; i + 1 < out.k && ok; ++i) ok = f.image(out.K[i]) == out.K[i + 1];
        if (ok) ok = subset(d, f.image(out.K[out.k - 1]), out.K[0]);
        out.cycle_verified = ok;
    }
    // components of ∪ K_i, ordered by their least K index
    std::vector<std::size_t> group(out.k);
    std::iota(group.begin(), group.end(), 0);
    auto find = [&](std::size_t x) {
        while (group[x] != x) x = group[x] = group[group[x]];
        return x;
    };
    for (std::size_t i = 0; i < out.k; ++i)
        for (std::size_t j = i + 1; j < out.k; ++j)
            if (intersects(d, out.K[i], out.K[j])) {
                std::size_t a = find(i), b = find(j);
                if (a != b) group[std::max(a, b)] = std::min(a, b);
            }
    std::vector<std::vector<const Subtree*>> members;
    std::vector<std::size_t> index_of(out.k, out.k);
    for (std::size_t i = 0; i < out.k; ++i) {
        std::size_t root = find(i);
        if (index_of[root] == out.k) {
            index_of[root] = members.size();
            members.emplace_back();
        }
        members[index_of[root]].push_back(&out.K[i]);
    }
    for (const auto& m : members) out.L.push_back(unite_all(m));
    out.r = out.L.size();
    return out;
}

/// min M_f(E): least l ≥ 1 with f^n(E) ∩ f^{n+l}(E) ≠ ∅ for some n ≤ horizon; nullopt if inconclusive.
inline std::optional<std::size_t> m_min(const TreeMap& f, const Subtree& e, std::size_t horizon) {
    Orbit orbit(f, e);
    const Dendrite& d = f.domain();
    for (std::size_t l = 1; l <= horizon; ++l)
        for (std::size_t n = 0; n <= horizon; ++n)
            if (intersects(d, orbit[n], orbit[n + l])) return l;
    return std::nullopt;
}

/// Least n ≤ n_max with f^n(S) = codomain; nullopt if not reached.
inline std::optional<std::size_t> cover_time(const TreeMap& f, const Subtree& s, std::size_t n_max) {
    Subtree all = whole(f.codomain());
    Subtree cur = s;
    for (std::size_t n = 0; n <= n_max; ++n) {
        if (cur == all) return n;
        if (n < n_max) cur = f.image(cur);
    }
    return std::nullopt;
}

}  // namespace dendro

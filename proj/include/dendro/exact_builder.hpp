#pragma once

#include "dendro/length_expanding.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dendro {

/// Closure of a component (or, around an arc, of all components sharing a
/// root) of D minus the base set.
struct Bush {
    Subtree set;
    PointRef root;
    Rational measure;
    Rational t;                 ///< root position along the base arc, in [0,1]
    std::optional<long> index;  ///< construction index from a marked "bush.k" point
};

struct BushDecomposition {
    std::shared_ptr<const Dendrite> dendrite;  ///< refined so the base ends are vertices
    bool point_case = false;
    PointRef a0, a1;                           ///< base arc ends (equal in the point case)
    Subtree base;
    std::vector<Bush> bushes;                  ///< bushes[k-1] is D_k
};

namespace detail {

inline std::optional<long> marked_index(const Dendrite& d, const Subtree& set, const PointRef& root) {
    std::optional<long> best;
    for (const auto& [name, p] : d.marked()) {
        if (name.rfind("bush.", 0) != 0) continue;
        if (p == root || !contains(d, set, p)) continue;
        try {
            long k = std::stol(name.substr(5));
            if (!best || k < *best) best = k;
        } catch (const std::exception&) {
        }
    }
    return best;
}

inline void order_bushes(const Dendrite& d, std::vector<Bush>& bushes) {
    for (Bush& b : bushes) b.index = marked_index(d, b.set, b.root);
    std::stable_sort(bushes.begin(), bushes.end(), [](const Bush& x, const Bush& y) {
        if (x.index.has_value() != y.index.has_value()) return x.index.has_value();
        if (x.index && *x.index != *y.index) return *x.index < *y.index;
        if (x.measure != y.measure) return x.measure > y.measure;
        if (x.t != y.t) return x.t < y.t;
        return x.set.spans().front().edge < y.set.spans().front().edge;
    });
}

}  // namespace detail

/// Bushes of D around the arc [a0, a1]: closures of components of D \ A,
/// merged per root.
inline BushDecomposition decompose_bushes(const Dendrite& d_in, const PointRef& a0_in, const PointRef& a1_in) {
    PointRef a0 = d_in.canonical(a0_in), a1 = d_in.canonical(a1_in);
    if (a0 == a1) throw std::invalid_argument("decompose_bushes: base arc is degenerate");
    Refinement ref = refine(d_in, {a0, a1});
    BushDecomposition dec;
    dec.dendrite = std::make_shared<const Dendrite>(ref.dendrite);
    const Dendrite& d = *dec.dendrite;
    dec.a0 = ref.map(a0);
    dec.a1 = ref.map(a1);
    dec.base = geodesic(d, dec.a0, dec.a1);
    Complement comp = components_minus(d, dec.base);
    if (comp.covers_whole) throw std::invalid_argument("decompose_bushes: the base arc is the whole dendrite");
    Rational len = h1_measure(dec.base);
    for (const auto& [root, idx] : comp.groups()) {
        std::vector<const Subtree*> parts;
        for (std::size_t i : idx) parts.push_back(&comp.components[i].closure);
        Bush b;
        b.set = unite_all(parts);
        b.root = root;
        b.measure = h1_measure(b.set);
        b.t = dist(d, dec.a0, root) / len;
        dec.bushes.push_back(std::move(b));
    }
    detail::order_bushes(d, dec.bushes);
    return dec;
}

/// Bushes of D around the point a: closures of the components of D \ {a}.
inline BushDecomposition decompose_bushes(const Dendrite& d_in, const PointRef& a_in) {
    PointRef a = d_in.canonical(a_in);
    Refinement ref = refine(d_in, {a});
    BushDecomposition dec;
    dec.dendrite = std::make_shared<const Dendrite>(ref.dendrite);
    const Dendrite& d = *dec.dendrite;
    dec.point_case = true;
    dec.a0 = dec.a1 = ref.map(a);
    dec.base = Subtree::point(dec.a0);
    Complement comp = components_minus(d, dec.base);
    if (comp.covers_whole) throw std::invalid_argument("decompose_bushes: the dendrite is a single point");
    for (const Component& c : comp.components) {
        Bush b;
        b.set = c.closure;
        b.root = c.boundary;
        b.measure = h1_measure(b.set);
        b.t = 0;
        dec.bushes.push_back(std::move(b));
    }
    detail::order_bushes(d, dec.bushes);
    return dec;
}

/// Weights λ_k = (1-q) q^k for k = 0..K.
inline std::vector<Rational> bush_weights(const Rational& q, std::size_t bushes) {
    if (q <= 0 || q >= 1) throw std::invalid_argument("weights: q must lie in (0,1)");
    std::vector<Rational> lambda;
    Rational p = 1;
    for (std::size_t k = 0; k <= bushes; ++k, p *= q) lambda.push_back((1 - q) * p);
    return lambda;
}

struct MetricAssignment {
    BushDecomposition dec;          ///< same decomposition in the new metric
    std::vector<Rational> lambda;   ///< λ_0..λ_K
    Rational total;                 ///< Σ λ_k = measure of D in the new metric
    Rational deficit;               ///< q^{K+1} = 1 - total (mass of the untruncated tail)
};

/// Rescales bush k to measure λ_k and the base arc to λ_0.
inline MetricAssignment assign_metric(const BushDecomposition& dec, const Rational& q) {
    MetricAssignment out;
    out.lambda = bush_weights(q, dec.bushes.size());
    const Dendrite& d = *dec.dendrite;
    std::vector<Rational> lengths(d.edge_count());
    std::vector<bool> done(d.edge_count(), false);
    auto scale_set = [&](const Subtree& s, const Rational& factor) {
        for (const Span& sp : s.spans()) {
            lengths[sp.edge] = d.edge(sp.edge).length * factor;
            done[sp.edge] = true;
        }
    };
    if (!dec.point_case) scale_set(dec.base, out.lambda[0] / h1_measure(dec.base));
    for (std::size_t k = 0; k < dec.bushes.size(); ++k)
        scale_set(dec.bushes[k].set, out.lambda[k + 1] / dec.bushes[k].measure);
    for (std::size_t e = 0; e < d.edge_count(); ++e)
        if (!done[e]) throw std::logic_error("assign_metric: edge outside base and bushes");
    out.dec = dec;
    out.dec.dendrite = std::make_shared<const Dendrite>(with_lengths(d, lengths));
    auto rescale_point = [&](const PointRef& p) {
        if (p.is_vertex()) return p;
        return PointRef::on_edge(p.edge_id(), p.offset() * lengths[p.edge_id()] / d.edge(p.edge_id()).length);
    };
    auto rescale_set = [&](const Subtree& s) {
        if (s.degenerate()) return Subtree::point(rescale_point(*s.single_point()));
        std::vector<Span> spans;
        for (const Span& sp : s.spans()) {
            Rational f = lengths[sp.edge] / d.edge(sp.edge).length;
            spans.push_back({sp.edge, sp.lo * f, sp.hi * f});
        }
        return Subtree::from_spans(std::move(spans));
    };
    out.dec.a0 = rescale_point(dec.a0);
    out.dec.a1 = rescale_point(dec.a1);
    out.dec.base = rescale_set(dec.base);
    out.total = 0;
    for (std::size_t k = 0; k < dec.bushes.size(); ++k) {
        out.dec.bushes[k].set = rescale_set(dec.bushes[k].set);
        out.dec.bushes[k].root = rescale_point(dec.bushes[k].root);
        out.dec.bushes[k].measure = out.lambda[k + 1];
        out.total += out.lambda[k + 1];
    }
    if (!dec.point_case) out.total += out.lambda[0];
    out.deficit = pow(q, static_cast<long>(dec.bushes.size()) + 1);
    return out;
}

/// Target bushes: ℓ_k (nearest earlier root) and N_k, 1-based (index 0 unused).
struct TargetPlan {
    std::vector<int> ell;
    std::vector<std::vector<int>> members;
};

inline TargetPlan plan_targets(const BushDecomposition& dec) {
    const Dendrite& d = *dec.dendrite;
    std::size_t K = dec.bushes.size();
    TargetPlan plan;
    plan.ell.assign(K + 1, 0);
    plan.members.assign(K + 1, {});
    for (std::size_t k = 2; k <= K; ++k) {
        const PointRef& xk = dec.bushes[k - 1].root;
        std::optional<Rational> best;
        for (std::size_t j = 1; j < k; ++j) {
            Rational dj = dist(d, xk, dec.bushes[j - 1].root);
            if (!best || dj < *best) {
                best = dj;
                plan.ell[k] = static_cast<int>(j);
            }
        }
        const Rational& tk = dec.bushes[k - 1].t;
        const Rational& tl = dec.bushes[plan.ell[k] - 1].t;
        Rational lo = min(tk, tl), hi = max(tk, tl);
        auto& n = plan.members[k];
        n.push_back(static_cast<int>(k));
        for (std::size_t h = k + 1; h <= K; ++h) {
            const Rational& th = dec.bushes[h - 1].t;
            if (lo < th && th < hi) n.push_back(static_cast<int>(h));
        }
        n.push_back(plan.ell[k]);
    }
    if (K >= 1)
        for (std::size_t h = 1; h <= K; ++h) plan.members[1].push_back(static_cast<int>(h));
    return plan;
}

/// ℓ-chain h → ℓ_h → … → 1.
inline std::vector<int> target_chain(const TargetPlan& plan, int h) {
    std::vector<int> chain{h};
    while (chain.back() > 1) chain.push_back(plan.ell[chain.back()]);
    return chain;
}

// ---------------------------------------------------------------------------
// Map assembly

struct PartialMap {
    std::shared_ptr<const Dendrite> dendrite;
    std::vector<std::optional<PointRef>> vertex_images;
    std::vector<std::optional<EdgeRule>> rules;

    explicit PartialMap(std::shared_ptr<const Dendrite> d)
        : dendrite(std::move(d)), vertex_images(dendrite->vertex_count()), rules(dendrite->edge_count()) {}

    void set_vertex(VertexId v, const PointRef& img) {
        PointRef p = dendrite->canonical(img);
        if (vertex_images[v] && *vertex_images[v] != p)
            throw std::logic_error("inconsistent images at vertex " + std::to_string(v));
        vertex_images[v] = p;
    }

    /// Copies a map defined on an extracted piece; images are global unless `local_codomain`.
    void lift(const SubDendrite& sub, const TreeMap& m, bool local_codomain) {
        auto img = [&](const PointRef& p) { return local_codomain ? sub.to_global(p) : p; };
        for (std::size_t lv = 0; lv < m.domain().vertex_count(); ++lv)
            set_vertex(sub.to_global_vertex[lv], img(m.vertex_images()[lv]));
        for (std::size_t le = 0; le < m.domain().edge_count(); ++le) {
            EdgeRule local = m.rule(static_cast<EdgeId>(le));
            EdgeRule global;
            for (std::size_t i = 0; i < local.knots.size(); ++i) {
                global.knots.push_back(local.knots[i] * sub.scale);
                global.images.push_back(img(local.images[i]));
            }
            rules[sub.to_global_edge[le]] = std::move(global);
        }
    }

    /// Identity wherever nothing was assigned.
    TreeMap finish() const {
        std::vector<PointRef> vimg;
        for (std::size_t v = 0; v < vertex_images.size(); ++v)
            vimg.push_back(vertex_images[v] ? *vertex_images[v] : PointRef::vertex(static_cast<VertexId>(v)));
        std::vector<EdgeRule> r;
        for (const auto& rule : rules) r.push_back(rule ? *rule : EdgeRule{});
        return TreeMap(dendrite, std::move(vimg), std::move(r));
    }
};

/// Per-bush construction record.
struct BushMap {
    std::string kind;               ///< "blowup", "tent" or "phi_psi"
    BuildPairResult pair;
    std::vector<int> route;         ///< bushes visited by g_k in order along J_k^+
    Rational j_plus;                ///< |J_k^+|
    Rational start;                 ///< ν_k(0)
    std::size_t nu_laps = 0;
    std::size_t pieces = 0;
};

namespace detail {

inline std::shared_ptr<const Dendrite> segment(const Rational& length) {
    return std::make_shared<const Dendrite>(2, std::vector<Edge>{{0, 1, length}});
}

/// Zigzag I → [0, L] starting at s0, going down to 0 and then sweeping with
/// full laps until the total traversed length is at least 2.
inline TreeMap nu_map(std::shared_ptr<const Dendrite> interval, std::shared_ptr<const Dendrite> jplus,
                      const Rational& s0, std::size_t& laps_out) {
    const Rational& len = jplus->edge(0).length;
    mpz_class l = ceil((2 - s0) / len);
    std::size_t laps = std::max<std::size_t>(1, l > 0 ? l.get_ui() : 1);
    laps_out = laps;
    Rational total = s0 + len * static_cast<long>(laps);
    EdgeRule rule;
    for (std::size_t i = 0; i < laps; ++i) {
        Rational u = (s0 + len * static_cast<long>(i)) / total;
        if (u == 0) continue;
        rule.knots.push_back(u);
        rule.images.push_back(PointRef::vertex(i % 2 == 0 ? 0 : 1));
    }
    PointRef start = jplus->canonical(PointRef::on_edge(0, s0));
    PointRef end = PointRef::vertex(laps % 2 == 0 ? 0 : 1);
    return TreeMap(interval, jplus, {start, end}, {rule});
}

}  // namespace detail

struct ArcPieceInput {
    std::shared_ptr<const Dendrite> dendrite;
    PointRef b0, b1;                    ///< base arc
    std::vector<const Bush*> bushes;    ///< ordered: bushes[k-1] is D_k
    std::vector<Rational> weights;      ///< λ_0..λ_K (λ_0 unused)
    TargetPlan plan;
    Rational rho;
    BuildPairOptions options;
};

/// Defines f on every bush of the input as g_k ∘ ν_k ∘ ψ_k; returns per-bush records.
/// Throws std::runtime_error naming the bush when a length-expanding pair cannot be built.
inline std::vector<BushMap> assemble_arc_pieces(const ArcPieceInput& in, PartialMap& pm) {
    const Dendrite& d = *in.dendrite;
    std::size_t K = in.bushes.size();
    Rational base_len = dist(d, in.b0, in.b1);
    auto t_of = [&](int h) { return dist(d, in.b0, in.bushes[h - 1]->root) / base_len; };
    std::vector<SubDendrite> subs;
    std::vector<BuildPairResult> pairs;
    for (std::size_t k = 1; k <= K; ++k) {
        const Bush& b = *in.bushes[k - 1];
        subs.push_back(extract(d, b.set, b.measure));
        PointRef local_root = PointRef::vertex(subs.back().to_local_vertex.at(b.root.vertex_id()));
        pairs.push_back(build_pair(subs.back().local, local_root, in.rho, in.options));
        if (!pairs.back().ok)
            throw std::runtime_error("length-expanding pair for bush " + std::to_string(k) + " failed (" +
                                     pairs.back().failure + ")");
    }
    auto lift_phi_image = [&](int h, const PointRef& p) { return subs[h - 1].to_global(p); };
    std::vector<BushMap> out;
    auto interval = unit_interval();
    for (std::size_t k = 1; k <= K; ++k) {
        BushMap rec;
        rec.kind = "blowup";
        // route along J_k^+
        std::vector<int> route;
        Rational t_start, t_end;
        if (k == 1) {
            route = in.plan.members[1];
            std::sort(route.begin(), route.end(), [&](int x, int y) { return t_of(x) < t_of(y); });
            t_start = 0;
            t_end = 1;
        } else {
            route = in.plan.members[k];
            Rational tk = t_of(static_cast<int>(k));
            std::sort(route.begin(), route.end(),
                      [&](int x, int y) { return abs(t_of(x) - tk) < abs(t_of(y) - tk); });
            t_start = tk;
            t_end = t_of(in.plan.ell[k]);
        }
        std::vector<std::pair<Rational, PointRef>> prog;  // (s, g(s))
        Rational s = 0;
        Rational t_prev = t_start;
        PointRef p_prev = k == 1 ? in.b0 : in.bushes[k - 1]->root;
        prog.push_back({Rational(0), p_prev});
        Rational s0 = 0;
        for (int h : route) {
            Rational th = t_of(h);
            if (th != t_prev) {
                s += abs(th - t_prev);
                prog.push_back({s, in.bushes[h - 1]->root});
            }
            if (h == static_cast<int>(k)) s0 = s;
            const TreeMap& phi = *pairs[h - 1].phi;
            const auto& ks = phi.knots(0);
            const auto& im = phi.knot_images(0);
            const Rational& w = in.weights[h];
            for (std::size_t i = 1; i < ks.size(); ++i) prog.push_back({s + w * ks[i], lift_phi_image(h, im[i])});
            s += w;
            t_prev = th;
        }
        if (t_end != t_prev) {
            s += abs(t_end - t_prev);
            prog.push_back({s, k == 1 ? in.b1 : in.bushes[in.plan.ell[k] - 1]->root});
        }
        auto jplus = detail::segment(s);
        EdgeRule grule;
        for (std::size_t i = 1; i + 1 < prog.size(); ++i) {
            grule.knots.push_back(prog[i].first);
            grule.images.push_back(prog[i].second);
        }
        TreeMap g(jplus, in.dendrite, {prog.front().second, prog.back().second}, {grule});
        TreeMap nu = detail::nu_map(interval, jplus, s0, rec.nu_laps);
        const TreeMap& psi = *pairs[k - 1].psi;
        TreeMap fk = compose(g, compose(nu, psi));
        rec.pieces = fk.piece_count();
        pm.lift(subs[k - 1], fk, false);
        rec.route = std::move(route);
        rec.j_plus = s;
        rec.start = s0;
        rec.pair = pairs[k - 1];
        out.push_back(std::move(rec));
    }
    return out;
}

namespace detail {

/// Tent map of an arc rooted at `root` (one of its ends) fixing the root.
inline TreeMap rooted_tent(std::shared_ptr<const Dendrite> arc, VertexId root) {
    const Dendrite& d = *arc;
    VertexId far = root;
    for (std::size_t v = 0; v < d.vertex_count(); ++v)
        if (static_cast<VertexId>(v) != root && d.degree(static_cast<VertexId>(v)) == 1) far = static_cast<VertexId>(v);
    Path p = path(d, PointRef::vertex(root), PointRef::vertex(far));
    Rational len = length(p);
    auto at = [&](const Rational& s) { return point_along(d, PointRef::vertex(root), p, s); };
    auto tent = [&](const Rational& s) { return s <= len / 2 ? Rational(2 * s) : Rational(2 * len - 2 * s); };
    std::vector<PointRef> vimg;
    std::vector<Rational> param(d.vertex_count());
    for (std::size_t v = 0; v < d.vertex_count(); ++v) {
        param[v] = d.vertex_distance(root, static_cast<VertexId>(v));
        vimg.push_back(at(tent(param[v])));
    }
    std::vector<EdgeRule> rules(d.edge_count());
    Rational half = len / 2;
    for (std::size_t e = 0; e < d.edge_count(); ++e) {
        const Edge& ed = d.edges()[e];
        Rational su = param[ed.u], sv = param[ed.v];
        if (min(su, sv) < half && half < max(su, sv)) {
            rules[e].knots.push_back(abs(half - su));
            rules[e].images.push_back(PointRef::vertex(far));
        }
    }
    return TreeMap(arc, std::move(vimg), std::move(rules));
}

inline bool is_rooted_arc(const Dendrite& d, VertexId root) {
    if (d.degree(root) != 1) return false;
    for (std::size_t v = 0; v < d.vertex_count(); ++v)
        if (d.degree(static_cast<VertexId>(v)) > 2) return false;
    return true;
}

}  // namespace detail

/// Per-bush self maps fixing the common point, glued there.
inline std::vector<BushMap> assemble_point_pieces(const BushDecomposition& dec, const Rational& rho,
                                                  const BuildPairOptions& opt, PartialMap& pm) {
    std::vector<BushMap> out;
    const Dendrite& d = *dec.dendrite;
    for (std::size_t k = 0; k < dec.bushes.size(); ++k) {
        const Bush& b = dec.bushes[k];
        SubDendrite sub = extract(d, b.set, 1);
        VertexId local_root = sub.to_local_vertex.at(b.root.vertex_id());
        auto local = std::make_shared<const Dendrite>(sub.local);
        BushMap rec;
        if (detail::is_rooted_arc(*local, local_root)) {
            rec.kind = "tent";
            TreeMap tent = detail::rooted_tent(local, local_root);
            rec.pieces = tent.piece_count();
            pm.lift(sub, tent, true);
        } else {
            rec.kind = "phi_psi";
            rec.pair = build_pair(*local, PointRef::vertex(local_root), rho, opt);
            if (!rec.pair.ok)
                throw std::runtime_error("length-expanding pair for bush " + std::to_string(k + 1) + " failed (" +
                                         rec.pair.failure + ")");
            TreeMap self = compose(*rec.pair.phi, *rec.pair.psi);
            rec.pieces = self.piece_count();
            // the pair lives on a copy of the piece normalized to measure 1
            SubDendrite normalized = sub;
            normalized.scale = b.measure;
            pm.lift(normalized, self, true);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

struct ExactBuild {
    BushDecomposition dec;           ///< in the metric the map is defined on
    std::vector<Rational> lambda;
    Rational deficit;
    TargetPlan plan;
    std::vector<BushMap> bush_maps;
    std::optional<TreeMap> map;
};

/// Exact-map construction fixing the arc [a0, a1] pointwise.
inline ExactBuild build_exact(const Dendrite& d, const PointRef& a0, const PointRef& a1, const Rational& q,
                              const Rational& rho, const BuildPairOptions& opt = {}) {
    BushDecomposition dec = decompose_bushes(d, a0, a1);
    MetricAssignment metric = assign_metric(dec, q);
    ExactBuild out;
    out.dec = metric.dec;
    out.lambda = metric.lambda;
    out.deficit = metric.deficit;
    out.plan = plan_targets(out.dec);
    ArcPieceInput in{out.dec.dendrite, out.dec.a0, out.dec.a1, {}, out.lambda, out.plan, rho, opt};
    for (const Bush& b : out.dec.bushes) in.bushes.push_back(&b);
    PartialMap pm(out.dec.dendrite);
    for (const Span& sp : out.dec.base.spans()) {
        const Edge& e = out.dec.dendrite->edge(sp.edge);
        pm.set_vertex(e.u, PointRef::vertex(e.u));
        pm.set_vertex(e.v, PointRef::vertex(e.v));
    }
    out.bush_maps = assemble_arc_pieces(in, pm);
    out.map.emplace(pm.finish());
    return out;
}

/// Point version: per-bush exact maps fixing a, glued at a.
inline ExactBuild build_exact(const Dendrite& d, const PointRef& a, const Rational& rho,
                              const BuildPairOptions& opt = {}) {
    ExactBuild out;
    out.dec = decompose_bushes(d, a);
    PartialMap pm(out.dec.dendrite);
    pm.set_vertex(out.dec.a0.vertex_id(), out.dec.a0);
    out.bush_maps = assemble_point_pieces(out.dec, rho, opt, pm);
    out.map.emplace(pm.finish());
    return out;
}

// ---------------------------------------------------------------------------
// Verification

struct BushCover {
    int index = 0;
    std::optional<std::size_t> steps;  ///< least m with f^m(D_h) = D
    std::vector<int> chain;
    std::size_t chain_bound = 0;       ///< chain length + 1
    bool chain_strict = true;
};

struct EdgeCover {
    EdgeId edge = 0;
    bool on_base = false;              ///< identity edge of the fixed arc
    std::optional<std::size_t> steps;  ///< least n with f^n(edge) = D
};

struct PieceSummary {
    std::size_t trapped_in_base = 0;   ///< linear pieces of bush edges mapped into the base arc
    std::size_t contains_bush = 0;
    std::size_t other = 0;
};

struct ExactCertificate {
    std::vector<BushCover> bushes;
    std::vector<EdgeCover> edges;
    PieceSummary pieces;
    bool bushes_within_bound = true;
    bool off_base_edges_covered = true;
};

inline ExactCertificate verify_exact(const ExactBuild& b, std::size_t n_max) {
    const TreeMap& f = *b.map;
    const Dendrite& d = f.domain();
    ExactCertificate cert;
    for (std::size_t h = 1; h <= b.dec.bushes.size(); ++h) {
        BushCover bc;
        bc.index = static_cast<int>(h);
        bc.steps = cover_time(f, b.dec.bushes[h - 1].set, n_max);
        if (!b.dec.point_case) {
            bc.chain = target_chain(b.plan, static_cast<int>(h));
            for (std::size_t i = 1; i < bc.chain.size(); ++i)
                if (bc.chain[i] >= bc.chain[i - 1]) bc.chain_strict = false;
            bc.chain_bound = bc.chain.size();
            if (!bc.steps || *bc.steps > bc.chain_bound || !bc.chain_strict) cert.bushes_within_bound = false;
        } else if (!bc.steps) {
            cert.bushes_within_bound = false;
        }
        cert.bushes.push_back(std::move(bc));
    }
    std::vector<Subtree> bush_sets;
    for (const Bush& bush : b.dec.bushes) bush_sets.push_back(bush.set);
    for (std::size_t e = 0; e < d.edge_count(); ++e) {
        EdgeCover ec;
        ec.edge = static_cast<EdgeId>(e);
        ec.on_base = !b.dec.point_case && b.dec.base.span_on(ec.edge) != nullptr;
        Subtree edge_set = Subtree::from_spans({{ec.edge, Rational(0), d.edge(ec.edge).length}});
        if (!ec.on_base) {
            ec.steps = cover_time(f, edge_set, n_max);
            if (!ec.steps) cert.off_base_edges_covered = false;
            const auto& ks = f.knots(ec.edge);
            for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
                Subtree img = f.image(Subtree::from_spans({{ec.edge, ks[i], ks[i + 1]}}));
                if (!b.dec.point_case && subset(d, img, b.dec.base)) ++cert.pieces.trapped_in_base;
                else if (std::any_of(bush_sets.begin(), bush_sets.end(),
                                     [&](const Subtree& s) { return subset(d, s, img); }))
                    ++cert.pieces.contains_bush;
                else ++cert.pieces.other;
            }
        }
        cert.edges.push_back(std::move(ec));
    }
    return cert;
}

/// Step-6 outcome for one member C of the family φ_k(closed intervals).
enum class ExpansionOutcome { contains_bush, expanded_within_bush, meets_base, violation };

inline const char* to_string(ExpansionOutcome o) {
    switch (o) {
        case ExpansionOutcome::contains_bush: return "contains_bush";
        case ExpansionOutcome::expanded_within_bush: return "expanded_within_bush";
        case ExpansionOutcome::meets_base: return "meets_base";
        case ExpansionOutcome::violation: return "violation";
    }
    return "?";
}

/// The member φ_k([lo, hi]) of the k-th bush family, as a subtree of D.
inline Subtree bush_family_member(const ExactBuild& b, int k, const Rational& lo, const Rational& hi) {
    const Bush& bush = b.dec.bushes.at(k - 1);
    SubDendrite sub = extract(*b.dec.dendrite, bush.set, bush.measure);
    const BuildPairResult& pair = b.bush_maps.at(k - 1).pair;
    Subtree local = pair.phi->image(Subtree::from_spans({{0, lo, hi}}));
    std::vector<Span> spans;
    for (const Span& sp : local.spans())
        spans.push_back({sub.to_global_edge.at(sp.edge), sp.lo * sub.scale, sp.hi * sub.scale});
    return Subtree::from_spans(std::move(spans));
}

inline ExpansionOutcome classify_expansion(const ExactBuild& b, const Subtree& c, const Rational& rho) {
    const Dendrite& d = *b.dec.dendrite;
    Subtree img = b.map->image(c);
    for (const Bush& bush : b.dec.bushes)
        if (subset(d, bush.set, img)) return ExpansionOutcome::contains_bush;
    Subtree on_base = intersect(d, img, b.dec.base);
    bool inside_one = std::any_of(b.dec.bushes.begin(), b.dec.bushes.end(),
                                  [&](const Bush& bush) { return subset(d, img, bush.set); });
    if (inside_one && h1_measure(img) >= rho * rho * h1_measure(c)) return ExpansionOutcome::expanded_within_bush;
    if (!on_base.degenerate()) return ExpansionOutcome::meets_base;
    return ExpansionOutcome::violation;
}

// ---------------------------------------------------------------------------
// Invariant pieces shrinking to a point

struct GchPiece {
    Subtree set;           ///< E_j
    Subtree base;          ///< A_j (or the common point)
    std::vector<int> bushes;  ///< bush indices (1-based, decomposition order)
};

struct GchBuild {
    BushDecomposition dec;
    PointRef center;
    std::vector<GchPiece> pieces;
    std::vector<BushMap> bush_maps;
    std::optional<TreeMap> map;
};

/// Point case: per-bush exact self maps fixing the common point a.
inline GchBuild build_gch_not_eps(const Dendrite& d, const PointRef& a, const Rational& rho,
                                  const BuildPairOptions& opt = {}) {
    ExactBuild eb = build_exact(d, a, rho, opt);
    GchBuild out;
    out.dec = eb.dec;
    out.center = eb.dec.a0;
    for (std::size_t k = 0; k < out.dec.bushes.size(); ++k)
        out.pieces.push_back({out.dec.bushes[k].set, Subtree::point(out.center), {static_cast<int>(k + 1)}});
    out.bush_maps = std::move(eb.bush_maps);
    out.map = std::move(eb.map);
    return out;
}

/// Arc case: bushes grouped by decreasing root distance from `a` (a point of
/// the arc); group j lives on A_j = hull of a and the roots of groups ≥ j
/// (A_1 = A), and each E_j = A_j ∪ group j carries an exact map fixing A_j.
inline GchBuild build_gch_not_eps(const Dendrite& d, const PointRef& a0, const PointRef& a1, const PointRef& a,
                                  const Rational& rho, std::size_t group_size = 2, const BuildPairOptions& opt = {}) {
    if (group_size == 0) throw std::invalid_argument("group size must be positive");
    GchBuild out;
    PointRef center = d.canonical(a);
    if (!center.is_vertex()) throw std::invalid_argument("build_gch_not_eps: the common point must be a vertex");
    // refinement only appends vertices, so the vertex id of a survives
    out.dec = decompose_bushes(d, a0, a1);
    const Dendrite& dd = *out.dec.dendrite;
    if (!contains(dd, out.dec.base, center)) throw std::invalid_argument("build_gch_not_eps: point not on the arc");
    out.center = center;
    // group bushes
    std::vector<int> at_center, rest;
    for (std::size_t k = 1; k <= out.dec.bushes.size(); ++k)
        (out.dec.bushes[k - 1].root == center ? at_center : rest).push_back(static_cast<int>(k));
    std::stable_sort(rest.begin(), rest.end(), [&](int x, int y) {
        return dist(dd, out.dec.bushes[x - 1].root, center) > dist(dd, out.dec.bushes[y - 1].root, center);
    });
    std::vector<std::vector<int>> groups;
    for (std::size_t i = 0; i < rest.size(); i += group_size)
        groups.emplace_back(rest.begin() + static_cast<long>(i),
                            rest.begin() + static_cast<long>(std::min(rest.size(), i + group_size)));
    if (groups.empty()) groups.emplace_back();
    groups.front().insert(groups.front().end(), at_center.begin(), at_center.end());
    PartialMap pm(out.dec.dendrite);
    for (const Span& sp : out.dec.base.spans()) {
        const Edge& e = dd.edge(sp.edge);
        pm.set_vertex(e.u, PointRef::vertex(e.u));
        pm.set_vertex(e.v, PointRef::vertex(e.v));
    }
    for (std::size_t j = 0; j < groups.size(); ++j) {
        GchPiece piece;
        PointRef b0 = out.dec.a0, b1 = out.dec.a1;
        if (j > 0) {
            std::vector<PointRef> pts{center};
            for (std::size_t g = j; g < groups.size(); ++g)
                for (int h : groups[g]) pts.push_back(out.dec.bushes[h - 1].root);
            Subtree hull = span_of(dd, pts);
            std::vector<PointRef> ends = subtree_leaves(dd, hull);
            if (ends.size() != 2) throw std::logic_error("build_gch_not_eps: hull of roots is not an arc");
            b0 = ends[0];
            b1 = ends[1];
        }
        piece.base = geodesic(dd, b0, b1);
        std::vector<Bush> local_bushes;
        for (int h : groups[j]) local_bushes.push_back(out.dec.bushes[h - 1]);
        Rational len = h1_measure(piece.base);
        for (Bush& lb : local_bushes) lb.t = dist(dd, b0, lb.root) / len;
        detail::order_bushes(dd, local_bushes);
        // order bushes by rank inside the piece and record global indices
        std::vector<const Subtree*> parts{&piece.base};
        for (const Bush& lb : local_bushes) {
            parts.push_back(&lb.set);
            for (std::size_t h = 1; h <= out.dec.bushes.size(); ++h)
                if (out.dec.bushes[h - 1].set == lb.set) piece.bushes.push_back(static_cast<int>(h));
        }
        piece.set = unite_all(parts);
        if (!local_bushes.empty()) {
            BushDecomposition sub_dec;
            sub_dec.dendrite = out.dec.dendrite;
            sub_dec.a0 = b0;
            sub_dec.a1 = b1;
            sub_dec.base = piece.base;
            sub_dec.bushes = local_bushes;
            ArcPieceInput in{out.dec.dendrite, b0, b1, {}, bush_weights(make_rational(1, 2), local_bushes.size()),
                             plan_targets(sub_dec), rho, opt};
            for (const Bush& lb : sub_dec.bushes) in.bushes.push_back(&lb);
            auto maps = assemble_arc_pieces(in, pm);
            for (auto& m : maps) out.bush_maps.push_back(std::move(m));
        }
        out.pieces.push_back(std::move(piece));
    }
    out.map.emplace(pm.finish());
    return out;
}

/// f(E_j) ⊆ E_j for every piece.
inline bool pieces_invariant(const GchBuild& g) {
    const Dendrite& d = g.map->domain();
    return std::all_of(g.pieces.begin(), g.pieces.end(),
                       [&](const GchPiece& p) { return subset(d, g.map->image(p.set), p.set); });
}

}  // namespace dendro

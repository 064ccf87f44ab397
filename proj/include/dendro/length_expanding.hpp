#pragma once

#include "dendro/chaos_checker.hpp"

#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace dendro {

/// Arc-length chart of a dendrite that is an arc, starting at its
/// lowest-numbered endpoint.
class ArcChart {
public:
    explicit ArcChart(const Dendrite& d) : d_(&d) {
        if (d.edge_count() == 0) throw std::invalid_argument("arc chart: dendrite is a point");
        VertexId start = -1;
        for (std::size_t v = 0; v < d.vertex_count(); ++v) {
            if (d.degree(static_cast<VertexId>(v)) > 2) throw std::invalid_argument("arc chart: dendrite is not an arc");
            if (start < 0 && d.degree(static_cast<VertexId>(v)) == 1) start = static_cast<VertexId>(v);
        }
        VertexId cur = start;
        EdgeId from = -1;
        Rational pos = 0;
        while (true) {
            EdgeId next = -1;
            VertexId other = -1;
            for (const Incidence& inc : d.incident(cur))
                if (inc.edge != from) {
                    next = inc.edge;
                    other = inc.other;
                }
            if (next < 0) break;
            steps_.push_back({next, d.offset_of(next, cur), d.offset_of(next, other)});
            starts_.push_back(pos);
            pos += d.edge(next).length;
            from = next;
            cur = other;
        }
        start_ = PointRef::vertex(start);
        total_ = pos;
    }

    const Rational& total() const { return total_; }

    PointRef point(const Rational& t) const {
        if (t < 0 || t > total_) throw std::invalid_argument("arc chart: parameter out of range");
        return point_along(*d_, start_, steps_, t);
    }

    Subtree interval(const Rational& a, const Rational& b) const { return geodesic(*d_, point(a), point(b)); }

    /// Arc-length parameter of a point of the arc.
    Rational parameter(const PointRef& p_in) const {
        PointRef p = d_->canonical(p_in);
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            const Step& s = steps_[i];
            PointRef lo = d_->canonical(PointRef::on_edge(s.edge, s.from));
            if (p == lo) return starts_[i];
            if (!p.is_vertex() && p.edge_id() == s.edge) return starts_[i] + abs(p.offset() - s.from);
        }
        return total_;
    }

private:
    const Dendrite* d_;
    PointRef start_;
    Path steps_;
    std::vector<Rational> starts_;
    Rational total_;
};

enum class DenseFamilyKind { all_closed_intervals, phi_images, explicit_sets };

struct DenseFamily {
    DenseFamilyKind kind = DenseFamilyKind::all_closed_intervals;
    /// For phi_images: members are phi(C) for closed intervals C of phi's (arc) domain.
    const TreeMap* phi = nullptr;
    std::vector<Subtree> members;
};

struct LEWitness {
    Subtree set;
    Rational measure;
    Rational image_measure;
    Rational rho;
};

struct LEResult {
    bool pass = true;
    std::size_t checked = 0;
    std::optional<LEWitness> witness;
};

/// True iff f(C) fails both alternatives: not the whole codomain and
/// measure(f(C)) < rho · measure(C).
inline bool violates(const TreeMap& f, const Subtree& c, const Rational& rho) {
    Subtree img = f.image(c);
    if (img == whole(f.codomain())) return false;
    return h1_measure(img) < rho * h1_measure(c);
}

namespace detail {

/// Closed intervals [i/2^j, k/2^j]·L in coarse-to-fine order, each listed once.
inline std::vector<std::pair<Rational, Rational>> dyadic_intervals(const Rational& length, std::size_t budget) {
    std::vector<std::pair<Rational, Rational>> out;
    std::set<std::pair<Rational, Rational>> seen;
    for (unsigned level = 1; level <= 20 && out.size() < budget; ++level) {
        long n = 1L << level;
        for (long i = 0; i < n && out.size() < budget; ++i)
            for (long k = i + 1; k <= n && out.size() < budget; ++k) {
                std::pair<Rational, Rational> iv{make_rational(i, n) * length, make_rational(k, n) * length};
                if (seen.insert(iv).second) out.push_back(iv);
            }
    }
    return out;
}

}  // namespace detail

/// Checks the length-expanding dichotomy on members of the family: first a
/// deterministic coarse-to-fine dyadic sweep, then seeded random intervals.
/// A witness is always a genuine violation; a pass is evidence only.
inline LEResult check_length_expanding(const TreeMap& f, const DenseFamily& family, const Rational& rho,
                                       std::size_t samples, std::uint64_t seed) {
    if (rho <= 1) throw std::invalid_argument("check_length_expanding: rho must exceed 1");
    LEResult res;
    auto test = [&](const Subtree& c) {
        ++res.checked;
        if (c.degenerate()) return false;
        if (!violates(f, c, rho)) return false;
        Subtree img = f.image(c);
        res.pass = false;
        res.witness = LEWitness{c, h1_measure(c), h1_measure(img), rho};
        return true;
    };
    if (family.kind == DenseFamilyKind::explicit_sets) {
        for (const Subtree& c : family.members)
            if (test(c)) return res;
        return res;
    }
    const TreeMap* chart_map = family.kind == DenseFamilyKind::phi_images ? family.phi : &f;
    if (!chart_map) throw std::invalid_argument("phi_images family without phi");
    ArcChart chart(chart_map->domain());
    auto member = [&](const Rational& a, const Rational& b) {
        Subtree c = chart.interval(a, b);
        return family.kind == DenseFamilyKind::phi_images ? family.phi->image(c) : c;
    };
    std::size_t fixed = (samples + 1) / 2;
    for (const auto& [a, b] : detail::dyadic_intervals(chart.total(), fixed))
        if (test(member(a, b))) return res;
    std::mt19937_64 rng(seed);
    while (res.checked < samples) {
        Rational a = random_between(rng, 0, chart.total());
        Rational b = random_between(rng, 0, chart.total());
        if (a == b) continue;
        if (test(member(min(a, b), max(a, b)))) return res;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Walk/zigzag pair

struct BuildPairResult {
    bool ok = false;
    std::string failure;  ///< which map failed the check, when !ok
    std::shared_ptr<const Dendrite> interval;  ///< I = [0,1], vertices 0 and 1
    std::shared_ptr<const Dendrite> tree;      ///< T normalized to measure 1, refined at a
    PointRef a;                                ///< a in `tree`
    std::optional<TreeMap> phi;                ///< I → T, phi(0) = phi(1) = a
    std::optional<TreeMap> psi;                ///< T → I, psi(a) = 0
    std::size_t laps = 0;
    std::size_t attempts = 0;
    std::optional<LEWitness> last_witness;
};

inline std::shared_ptr<const Dendrite> unit_interval() {
    return std::make_shared<const Dendrite>(2, std::vector<Edge>{{0, 1, Rational(1)}});
}

namespace detail {

/// Closed depth-first walk from a traversing every edge twice.
inline std::vector<VertexId> double_cover_walk(const Dendrite& d, VertexId a) {
    std::vector<VertexId> walk{a};
    struct Frame {
        VertexId v;
        EdgeId from;
        std::size_t next;
    };
    std::vector<Frame> stack{{a, -1, 0}};
    while (!stack.empty()) {
        Frame& top = stack.back();
        const auto& inc = d.incident(top.v);
        if (top.next < inc.size()) {
            const Incidence& e = inc[top.next++];
            if (e.edge == top.from) continue;
            walk.push_back(e.other);
            stack.push_back({e.other, e.edge, 0});
        } else {
            stack.pop_back();
            if (!stack.empty()) walk.push_back(stack.back().v);
        }
    }
    return walk;
}

inline TreeMap walk_zigzag(std::shared_ptr<const Dendrite> interval, std::shared_ptr<const Dendrite> t, VertexId a,
                           std::size_t laps) {
    std::vector<VertexId> walk = double_cover_walk(*t, a);
    std::vector<Rational> w{Rational(0)};  // walk parameter in [0,1] (total walk length 2)
    for (std::size_t i = 1; i < walk.size(); ++i)
        w.push_back(w.back() + t->vertex_distance(walk[i - 1], walk[i]) / 2);
    EdgeRule rule;
    Rational m(static_cast<long>(laps));
    for (std::size_t j = 0; j < laps; ++j) {
        bool up = j % 2 == 0;
        for (std::size_t idx = 1; idx < walk.size(); ++idx) {
            std::size_t i = up ? idx : walk.size() - 1 - idx;
            Rational s = up ? Rational((Rational(static_cast<long>(j)) + w[i]) / m)
                            : Rational((Rational(static_cast<long>(j)) + 1 - w[i]) / m);
            if (j + 1 == laps && idx + 1 == walk.size()) break;  // s = 1 is the edge end
            rule.knots.push_back(s);
            rule.images.push_back(PointRef::vertex(walk[i]));
        }
    }
    if (walk.size() == 1) rule = {};
    return TreeMap(interval, t, {PointRef::vertex(a), PointRef::vertex(a)}, {rule});
}

inline TreeMap radial_zigzag(std::shared_ptr<const Dendrite> t, std::shared_ptr<const Dendrite> interval, VertexId a,
                             std::size_t laps) {
    Rational big_r = 0;
    std::vector<Rational> delta(t->vertex_count());
    for (std::size_t v = 0; v < t->vertex_count(); ++v) {
        delta[v] = t->vertex_distance(a, static_cast<VertexId>(v));
        big_r = max(big_r, delta[v]);
    }
    Rational m(static_cast<long>(laps));
    auto zig = [&](const Rational& s) -> PointRef {
        Rational ms = m * s;
        mpz_class j = floor(ms);
        Rational frac = ms - Rational(j);
        if (j >= static_cast<long>(laps)) return PointRef::vertex(laps % 2 == 0 ? 0 : 1);
        Rational y = j % 2 == 0 ? frac : Rational(1 - frac);
        return interval->canonical(PointRef::on_edge(0, y));
    };
    std::vector<PointRef> vimg;
    for (std::size_t v = 0; v < t->vertex_count(); ++v) vimg.push_back(zig(delta[v] / big_r));
    std::vector<EdgeRule> rules(t->edge_count());
    for (std::size_t e = 0; e < t->edge_count(); ++e) {
        const Edge& ed = t->edges()[e];
        Rational su = delta[ed.u] / big_r;
        Rational sv = delta[ed.v] / big_r;
        // δ/R is linear along the edge; knots where it crosses j/m
        Rational lo = min(su, sv), hi = max(su, sv);
        mpz_class jfirst = floor(lo * m) + 1;
        for (mpz_class j = jfirst; Rational(j) / m < hi; ++j) {
            Rational s = Rational(j) / m;
            Rational off = (s - su) / (sv - su) * ed.length;
            rules[e].knots.push_back(off);
            rules[e].images.push_back(PointRef::vertex(j % 2 == 0 ? 0 : 1));
        }
        if (su > sv) {
            std::reverse(rules[e].knots.begin(), rules[e].knots.end());
            std::reverse(rules[e].images.begin(), rules[e].images.end());
        }
    }
    return TreeMap(t, interval, std::move(vimg), std::move(rules));
}

}  // namespace detail

struct BuildPairOptions {
    std::size_t max_attempts = 5;
    std::size_t samples = 200;
    std::uint64_t seed = 7;
};

/// φ: I → T and ψ: T → I, both verified ρ-length expanding on the families
/// (closed intervals of I, their φ-images). T is rescaled to measure 1.
inline BuildPairResult build_pair(const Dendrite& t_in, const PointRef& a_in, const Rational& rho,
                                  const BuildPairOptions& opt = {}) {
    if (rho <= 1) throw std::invalid_argument("build_pair: rho must exceed 1");
    if (t_in.edge_count() == 0) throw std::invalid_argument("build_pair: T is a single point");
    BuildPairResult res;
    PointRef a0 = t_in.canonical(a_in);
    Rational factor = 1 / t_in.total_length();
    Dendrite t = scaled(t_in, factor);
    if (!a0.is_vertex()) a0 = PointRef::on_edge(a0.edge_id(), a0.offset() * factor);
    Refinement ref = refine(t, {a0});
    res.tree = std::make_shared<const Dendrite>(ref.dendrite);
    res.a = ref.map(a0);
    res.interval = unit_interval();
    VertexId a = res.a.vertex_id();
    mpz_class start = ceil(rho) * 2;
    std::size_t laps = start.get_ui();
    if (laps % 2) ++laps;
    for (std::size_t attempt = 0; attempt < opt.max_attempts; ++attempt, laps *= 2) {
        res.attempts = attempt + 1;
        res.laps = laps;
        TreeMap phi = detail::walk_zigzag(res.interval, res.tree, a, laps);
        TreeMap psi = detail::radial_zigzag(res.tree, res.interval, a, laps);
        LEResult cp = check_length_expanding(phi, {DenseFamilyKind::all_closed_intervals, nullptr, {}}, rho,
                                             opt.samples, opt.seed);
        if (!cp.pass) {
            res.failure = "phi";
            res.last_witness = cp.witness;
            continue;
        }
        LEResult cs = check_length_expanding(psi, {DenseFamilyKind::phi_images, &phi, {}}, rho, opt.samples,
                                             opt.seed + 1);
        if (!cs.pass) {
            res.failure = "psi";
            res.last_witness = cs.witness;
            continue;
        }
        res.ok = true;
        res.failure.clear();
        res.phi.emplace(std::move(phi));
        res.psi.emplace(std::move(psi));
        return res;
    }
    return res;
}

}  // namespace dendro

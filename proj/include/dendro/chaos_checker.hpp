#pragma once

#include "dendro/tree_map.hpp"

#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dendro {

// ---------------------------------------------------------------------------
// Sampling helpers

/// Denominator used for sampled rationals: a large prime with 2 as a primitive
/// root, so orbits under slope-2 maps do not cycle within practical horizons
/// (2^31 - 1 would give period 31).
inline constexpr std::uint64_t sample_denominator = 2147483629ULL;

inline Rational random_unit(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint64_t> dist(0, sample_denominator);
    Rational r(mpz_class(std::to_string(dist(rng))), mpz_class(std::to_string(sample_denominator)));
    r.canonicalize();
    return r;
}

inline Rational random_between(std::mt19937_64& rng, const Rational& lo, const Rational& hi) {
    return lo + (hi - lo) * random_unit(rng);
}

/// Point at arc-length position t ∈ [0, total length] in edge-id order.
inline PointRef point_at_length(const Dendrite& d, Rational t) {
    if (d.edge_count() == 0) return PointRef::vertex(0);
    for (std::size_t i = 0; i < d.edge_count(); ++i) {
        const Rational& len = d.edges()[i].length;
        if (t <= len || i + 1 == d.edge_count())
            return d.canonical(PointRef::on_edge(static_cast<EdgeId>(i), min(t, len)));
        t -= len;
    }
    return PointRef::vertex(0);
}

/// Uniformly distributed point (with respect to length).
inline PointRef random_point(const Dendrite& d, std::mt19937_64& rng) {
    return point_at_length(d, d.total_length() * random_unit(rng));
}

// ---------------------------------------------------------------------------
// Systems

/// A discrete dynamical system with exact distances.
template <class S>
concept System = requires(const S& s, const typename S::State& x, std::mt19937_64& rng) {
    { s.step(x) } -> std::convertible_to<typename S::State>;
    { s.distance(x, x) } -> std::convertible_to<Rational>;
    { s.sample(rng) } -> std::convertible_to<typename S::State>;
};

struct TreeMapSystem {
    using State = PointRef;
    const TreeMap* map;

    PointRef step(const PointRef& x) const { return map->apply(x); }
    Rational distance(const PointRef& x, const PointRef& y) const { return dist(map->domain(), x, y); }
    PointRef sample(std::mt19937_64& rng) const { return random_point(map->domain(), rng); }
};

// ---------------------------------------------------------------------------
// Records

struct Record {
    Rational value;
    std::size_t at = 0;  ///< first n attaining the value
};

/// Forward images of one set, stored until the orbit becomes constant.
class SetOrbit {
public:
    SetOrbit(const TreeMap& f, Subtree s) : f_(&f) { sets_.push_back(std::move(s)); }

    const Subtree& at(std::size_t n) {
        while (!frozen_ && sets_.size() <= n) {
            Subtree next = f_->image(sets_.back());
            if (next == sets_.back()) {
                frozen_ = true;
                break;
            }
            sets_.push_back(std::move(next));
        }
        return sets_[std::min(n, sets_.size() - 1)];
    }

    /// True once f(S_n) = S_n was detected, so every later term is known.
    bool frozen() const { return frozen_; }
    std::size_t computed() const { return sets_.size(); }

private:
    const TreeMap* f_;
    std::vector<Subtree> sets_;
    bool frozen_ = false;
};

/// min over 0 ≤ n ≤ N of d(f^n S1, f^n S2).
inline Record prox_record(SetOrbit& a, SetOrbit& b, const Dendrite& d, std::size_t n_max) {
    Record best{set_distance(d, a.at(0), b.at(0)), 0};
    for (std::size_t n = 1; n <= n_max && best.value > 0; ++n) {
        Rational v = set_distance(d, a.at(n), b.at(n));
        if (v < best.value) best = {v, n};
        if (a.frozen() && b.frozen() && n >= a.computed() && n >= b.computed()) break;
    }
    return best;
}

inline Record prox_record(const TreeMap& f, const Subtree& s1, const Subtree& s2, std::size_t n_max) {
    SetOrbit a(f, s1), b(f, s2);
    return prox_record(a, b, f.domain(), n_max);
}

/// max over N0 ≤ n ≤ N of diam f^n(S).
inline Record sens_record(SetOrbit& s, const Dendrite& d, std::size_t n0, std::size_t n_max) {
    if (n0 > n_max) throw std::invalid_argument("sens_record: N0 exceeds N");
    Record best{diameter(d, s.at(n0)), n0};
    for (std::size_t n = n0 + 1; n <= n_max; ++n) {
        if (s.frozen() && n >= s.computed()) break;
        Rational v = diameter(d, s.at(n));
        if (v > best.value) best = {v, n};
    }
    return best;
}

inline Record sens_record(const TreeMap& f, const Subtree& s, std::size_t n0, std::size_t n_max) {
    SetOrbit o(f, s);
    return sens_record(o, f.domain(), n0, n_max);
}

// ---------------------------------------------------------------------------
// Li-Yorke sampling

struct LYCounts {
    std::size_t pairs = 0;
    std::size_t scrambling_evidence = 0;  ///< min ≤ delta and max > epsilon
    std::size_t proximal_only = 0;
    std::size_t separated_only = 0;
    std::size_t neither = 0;
};

struct PairTrace {
    Rational min_distance;
    Rational max_distance;
};

template <System S>
PairTrace pair_trace(const S& sys, typename S::State x, typename S::State y, std::size_t n_max) {
    Rational d0 = sys.distance(x, y);
    PairTrace t{d0, d0};
    for (std::size_t n = 1; n <= n_max; ++n) {
        x = sys.step(x);
        y = sys.step(y);
        Rational d = sys.distance(x, y);
        if (d < t.min_distance) t.min_distance = d;
        if (d > t.max_distance) t.max_distance = d;
    }
    return t;
}

inline void classify_pair(const PairTrace& t, const Rational& delta, const Rational& epsilon, LYCounts& c) {
    bool prox = t.min_distance <= delta;
    bool sep = t.max_distance > epsilon;
    ++c.pairs;
    if (prox && sep) ++c.scrambling_evidence;
    else if (prox) ++c.proximal_only;
    else if (sep) ++c.separated_only;
    else ++c.neither;
}

/// Samples independent pairs and counts finite-horizon scrambling evidence.
/// One-sided: a hit shows the pattern up to N, not the asymptotic property.
template <System S>
LYCounts ly_sample(const S& sys, std::size_t pair_count, std::size_t n_max, const Rational& delta,
                   const Rational& epsilon, std::uint64_t seed) {
    if (delta <= 0 || epsilon <= 0) throw std::invalid_argument("ly_sample: delta and epsilon must be positive");
    std::mt19937_64 rng(seed);
    LYCounts c;
    for (std::size_t i = 0; i < pair_count; ++i) {
        auto x = sys.sample(rng);
        auto y = sys.sample(rng);
        classify_pair(pair_trace(sys, x, y, n_max), delta, epsilon, c);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Set families

enum class FamilyKind { balls, free_arcs, subdendrites, explicit_sets };

inline const char* to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::balls: return "balls";
        case FamilyKind::free_arcs: return "free_arcs";
        case FamilyKind::subdendrites: return "subdendrites";
        case FamilyKind::explicit_sets: return "explicit";
    }
    return "?";
}

inline FamilyKind parse_family_kind(const std::string& s) {
    if (s == "balls") return FamilyKind::balls;
    if (s == "free_arcs") return FamilyKind::free_arcs;
    if (s == "subdendrites") return FamilyKind::subdendrites;
    if (s == "explicit") return FamilyKind::explicit_sets;
    throw std::invalid_argument("unknown set family '" + s + "'");
}

struct SetFamily {
    FamilyKind kind = FamilyKind::balls;
    std::size_t radius_levels = 6;  ///< radii r0·2^-j, j < levels, r0 = diam/2
    std::size_t samples = 16;       ///< random members for free_arcs / subdendrites
    std::uint64_t seed = 1;
    std::vector<Subtree> members;   ///< used by the explicit kind
};

struct FamilyMember {
    Subtree set;
    std::string label;
};

inline std::vector<FamilyMember> ball_members(const Dendrite& d, std::size_t levels) {
    std::vector<FamilyMember> out;
    Rational r0 = diameter(d, whole(d)) / 2;
    std::vector<std::pair<PointRef, std::string>> centers;
    for (std::size_t v = 0; v < d.vertex_count(); ++v)
        centers.push_back({PointRef::vertex(static_cast<VertexId>(v)), "v" + std::to_string(v)});
    for (std::size_t e = 0; e < d.edge_count(); ++e)
        centers.push_back({PointRef::on_edge(static_cast<EdgeId>(e), d.edges()[e].length / 2), "m" + std::to_string(e)});
    for (const auto& [c, name] : centers) {
        Rational r = r0;
        for (std::size_t j = 0; j < levels; ++j, r /= 2) {
            Subtree b = ball(d, c, r);
            if (b.degenerate()) continue;
            out.push_back({std::move(b), "ball(" + name + ",2^-" + std::to_string(j) + "r0)"});
        }
    }
    return out;
}

inline std::vector<FamilyMember> generate_family(const Dendrite& d, const SetFamily& fam) {
    std::vector<FamilyMember> out;
    std::mt19937_64 rng(fam.seed);
    switch (fam.kind) {
        case FamilyKind::balls:
            out = ball_members(d, fam.radius_levels);
            break;
        case FamilyKind::free_arcs:
            for (std::size_t e = 0; e < d.edge_count(); ++e)
                out.push_back({Subtree::from_spans({{static_cast<EdgeId>(e), Rational(0), d.edges()[e].length}}),
                               "edge" + std::to_string(e)});
            for (std::size_t i = 0; i < fam.samples && d.edge_count() > 0; ++i) {
                EdgeId e = static_cast<EdgeId>(rng() % d.edge_count());
                Rational a = random_between(rng, 0, d.edge(e).length);
                Rational b = random_between(rng, 0, d.edge(e).length);
                if (a == b) continue;
                out.push_back({Subtree::from_spans({{e, min(a, b), max(a, b)}}), "subarc" + std::to_string(i)});
            }
            break;
        case FamilyKind::subdendrites:
            out = ball_members(d, fam.radius_levels);
            for (std::size_t i = 0; i < fam.samples; ++i) {
                std::vector<PointRef> pts;
                for (int j = 0; j < 3; ++j) pts.push_back(random_point(d, rng));
                Subtree s = span_of(d, pts);
                if (s.degenerate()) continue;
                out.push_back({std::move(s), "span" + std::to_string(i)});
            }
            break;
        case FamilyKind::explicit_sets:
            for (std::size_t i = 0; i < fam.members.size(); ++i) {
                if (fam.members[i].degenerate()) throw std::invalid_argument("explicit family member is degenerate");
                out.push_back({fam.members[i], "set" + std::to_string(i)});
            }
            break;
    }
    if (out.empty()) throw std::invalid_argument("set family is empty");
    return out;
}

// ---------------------------------------------------------------------------
// Verdict

struct VerdictParams {
    std::size_t n_max = 64;
    std::size_t n0 = 0;
    Rational prox_tolerance = 0;
};

struct PairRecord {
    std::size_t first;
    std::size_t second;
    Record record;
};

struct SetRecord {
    std::size_t index;
    std::string label;
    Record record;
};

struct ChaosReport {
    VerdictParams params;
    std::string family;
    std::vector<PairRecord> prox;
    std::vector<SetRecord> sens;
    bool prox_pass = false;
    bool sens0_pass = false;
    Rational eta_estimate;
    bool generic_chaos_evidence = false;
    /// Certificates of generic ε-chaos only cover ε below this value (eta/2).
    Rational epsilon_bound;
    std::vector<std::string> notes;
};

/// Evaluates (Prox) over all member pairs and (Sens) over all members.
inline ChaosReport verdict(const TreeMap& f, const std::vector<FamilyMember>& members, const VerdictParams& params,
                           const std::string& family_name = "explicit") {
    if (members.empty()) throw std::invalid_argument("verdict: empty family");
    const Dendrite& d = f.domain();
    ChaosReport rep;
    rep.params = params;
    rep.family = family_name;
    std::vector<SetOrbit> orbits;
    orbits.reserve(members.size());
    for (const auto& m : members) orbits.emplace_back(f, m.set);
    rep.prox_pass = true;
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            Record r = prox_record(orbits[i], orbits[j], d, params.n_max);
            if (r.value > params.prox_tolerance) rep.prox_pass = false;
            rep.prox.push_back({i, j, std::move(r)});
        }
    rep.sens0_pass = true;
    for (std::size_t i = 0; i < members.size(); ++i) {
        Record r = sens_record(orbits[i], d, params.n0, params.n_max);
        if (r.value <= 0) rep.sens0_pass = false;
        if (i == 0 || r.value < rep.eta_estimate) rep.eta_estimate = r.value;
        rep.sens.push_back({i, members[i].label, std::move(r)});
    }
    rep.epsilon_bound = rep.eta_estimate / 2;
    rep.generic_chaos_evidence = rep.prox_pass && rep.sens0_pass;
    rep.notes.push_back("finite horizon: a zero prox record certifies that the images met; a positive record is inconclusive");
    rep.notes.push_back("sens records are maxima over the window [N0, N]; they bound limsup from below only");
    rep.notes.push_back("generic epsilon-chaos evidence covers only epsilon < eta_estimate/2");
    if (!rep.sens0_pass) rep.notes.push_back("some member has vanishing diameter record: not flagged as chaos evidence");
    rep.notes.push_back("truncated families may miss sensitivity witnesses of the full ball family");
    return rep;
}

inline ChaosReport verdict(const TreeMap& f, const SetFamily& family, const VerdictParams& params) {
    return verdict(f, generate_family(f.domain(), family), params, to_string(family.kind));
}

}  // namespace dendro

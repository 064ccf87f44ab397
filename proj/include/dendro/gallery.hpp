#pragma once

#include "dendro/odometer.hpp"

#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dendro::gallery {

namespace detail {

inline GeneratorDescriptor describe(std::string family, std::map<std::string, std::string> params) {
    return {std::move(family), std::move(params)};
}

/// Base segment on the x-axis with vertical teeth; teeth are (x, height) with distinct x.
struct CombLayout {
    std::vector<Rational> base;                       // sorted x positions of base vertices
    std::vector<std::pair<Rational, Rational>> teeth; // (x, height), x among base
};

inline Dendrite build_comb(const CombLayout& layout, std::map<std::string, PointRef> marked, GeneratorDescriptor desc,
                           std::map<Rational, std::string>* tip_names = nullptr) {
    std::vector<Edge> edges;
    std::vector<PlanarPoint> coords;
    std::map<Rational, VertexId> at;
    for (std::size_t i = 0; i < layout.base.size(); ++i) {
        at[layout.base[i]] = static_cast<VertexId>(i);
        coords.push_back({layout.base[i], Rational(0)});
        if (i > 0) edges.push_back({static_cast<VertexId>(i - 1), static_cast<VertexId>(i), layout.base[i] - layout.base[i - 1]});
    }
    for (const auto& [x, h] : layout.teeth) {
        VertexId tip = static_cast<VertexId>(coords.size());
        coords.push_back({x, h});
        edges.push_back({at.at(x), tip, h});
        if (tip_names) {
            auto it = tip_names->find(x);
            if (it != tip_names->end()) marked[it->second] = PointRef::vertex(tip);
        }
    }
    marked.emplace("A.0", PointRef::vertex(0));
    marked.emplace("A.1", PointRef::vertex(static_cast<VertexId>(layout.base.size() - 1)));
    std::size_t n = coords.size();
    return Dendrite(n, std::move(edges), std::move(marked), std::move(desc), std::move(coords));
}

inline std::string join(const std::vector<Rational>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + to_string(xs[i]);
    return s;
}

}  // namespace detail

inline Dendrite arc(const Rational& length = 1) {
    if (length <= 0) throw std::invalid_argument("arc length must be positive");
    return Dendrite(2, {{0, 1, length}}, {{"A.0", PointRef::vertex(0)}, {"A.1", PointRef::vertex(1)}},
                    detail::describe("arc", {{"length", to_string(length)}}),
                    {{Rational(0), Rational(0)}, {length, Rational(0)}});
}

inline std::vector<Rational> default_star_lengths() {
    return {make_rational(1, 2), make_rational(1, 3), make_rational(1, 6)};
}

/// Star with center 0 and arm tips 1..k ("center", "e1".."ek").
inline Dendrite star(const std::vector<Rational>& lengths = default_star_lengths()) {
    if (lengths.empty()) throw std::invalid_argument("star needs at least one arm");
    std::vector<Edge> edges;
    std::map<std::string, PointRef> marked{{"center", PointRef::vertex(0)}};
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        edges.push_back({0, static_cast<VertexId>(i + 1), lengths[i]});
        marked["e" + std::to_string(i + 1)] = PointRef::vertex(static_cast<VertexId>(i + 1));
    }
    return Dendrite(lengths.size() + 1, std::move(edges), std::move(marked),
                    detail::describe("star", {{"lengths", detail::join(lengths)}}));
}

/// Arm i (1-based) has length (1-q) q^{i-1}.
inline Rational omega_arm_length(std::size_t i, const Rational& q) { return (1 - q) * pow(q, static_cast<long>(i) - 1); }

/// Truncated ω-star: k arms at a common center ("center" = "a").
inline Dendrite omega_star(std::size_t k, const Rational& q = make_rational(1, 2)) {
    if (k == 0) throw std::invalid_argument("omega_star needs at least one arm");
    if (q <= 0 || q >= 1) throw std::invalid_argument("omega_star: q must lie in (0,1)");
    std::vector<Edge> edges;
    std::map<std::string, PointRef> marked{{"center", PointRef::vertex(0)}, {"a", PointRef::vertex(0)}};
    for (std::size_t i = 1; i <= k; ++i) {
        edges.push_back({0, static_cast<VertexId>(i), omega_arm_length(i, q)});
        marked["e" + std::to_string(i)] = PointRef::vertex(static_cast<VertexId>(i));
    }
    return Dendrite(k + 1, std::move(edges), std::move(marked),
                    detail::describe("omega_star", {{"arms", std::to_string(k)}, {"q", to_string(q)}}));
}

/// Comb on [-1,1]: teeth of height 1/k at x = 1/k (k ≤ n) and a height-1 tooth at 0.
/// Marked: "A.0", "A.1" (base ends), "a" = (0,0), "bush.k" at the tip of the tooth at 1/k,
/// "bush.<n+1>" at the tip of the tooth at 0.
inline Dendrite comb(std::size_t n) {
    if (n == 0) throw std::invalid_argument("comb depth must be positive");
    detail::CombLayout layout;
    layout.base.push_back(-1);
    layout.base.push_back(0);
    for (std::size_t k = n; k >= 1; --k) layout.base.push_back(make_rational(1, static_cast<long>(k)));
    std::map<Rational, std::string> names;
    for (std::size_t k = 1; k <= n; ++k) {
        Rational x = make_rational(1, static_cast<long>(k));
        layout.teeth.push_back({x, x});
        names[x] = "bush." + std::to_string(k);
    }
    layout.teeth.push_back({Rational(0), Rational(1)});
    names[Rational(0)] = "bush." + std::to_string(n + 1);
    return detail::build_comb(layout, {{"a", PointRef::vertex(1)}},
                              detail::describe("comb", {{"depth", std::to_string(n)}}), &names);
}

inline std::size_t totient(std::size_t n) {
    std::size_t c = 0;
    for (std::size_t k = 1; k <= n; ++k)
        if (std::gcd(k, n) == 1) ++c;
    return c;
}

/// Riemann dendrite truncation: teeth of height 1/q at reduced p/q ∈ [0,1], q ≤ qmax.
inline Dendrite riemann(std::size_t qmax) {
    if (qmax == 0) throw std::invalid_argument("riemann: qmax must be positive");
    std::map<Rational, Rational> teeth;
    for (std::size_t q = 1; q <= qmax; ++q)
        for (std::size_t p = 0; p <= q; ++p)
            if (std::gcd(p, q) == 1) teeth.emplace(make_rational(static_cast<long>(p), static_cast<long>(q)),
                                                   make_rational(1, static_cast<long>(q)));
    detail::CombLayout layout;
    for (const auto& [x, h] : teeth) {
        layout.base.push_back(x);
        layout.teeth.push_back({x, h});
    }
    return detail::build_comb(layout, {}, detail::describe("riemann", {{"qmax", std::to_string(qmax)}}));
}

/// Teeth of height 1/(m+1) at the rank-m Cantor gap endpoints, m ≤ rank (rank 0: 0 and 1).
inline Dendrite cantor_comb(std::size_t rank) {
    if (rank > 12) throw std::invalid_argument("cantor_comb: rank too large");
    std::map<Rational, Rational> teeth{{Rational(0), Rational(1)}, {Rational(1), Rational(1)}};
    std::vector<std::pair<Rational, Rational>> intervals{{Rational(0), Rational(1)}};
    for (std::size_t m = 1; m <= rank; ++m) {
        std::vector<std::pair<Rational, Rational>> next;
        Rational h = make_rational(1, static_cast<long>(m) + 1);
        for (const auto& [l, r] : intervals) {
            Rational third = (r - l) / 3;
            Rational g0 = l + third, g1 = l + 2 * third;
            teeth.emplace(g0, h);
            teeth.emplace(g1, h);
            next.push_back({l, g0});
            next.push_back({g1, r});
        }
        intervals = std::move(next);
    }
    detail::CombLayout layout;
    for (const auto& [x, h] : teeth) {
        layout.base.push_back(x);
        layout.teeth.push_back({x, h});
    }
    return detail::build_comb(layout, {}, detail::describe("cantor_comb", {{"rank", std::to_string(rank)}}));
}

inline Dendrite gehman(std::size_t depth) { return *gehman_extend(depth).dendrite; }

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& families() {
    static const std::vector<std::string> names{"omega_star", "comb", "riemann", "cantor_comb", "gehman", "star", "arc"};
    return names;
}

namespace detail {

inline std::size_t count_param(const GeneratorDescriptor& d, const std::string& key, std::size_t fallback) {
    auto it = d.params.find(key);
    if (it == d.params.end()) return fallback;
    try {
        std::size_t pos = 0;
        long v = std::stol(it->second, &pos);
        if (pos != it->second.size() || v < 0) throw std::invalid_argument("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("parameter '" + key + "' must be a nonnegative integer, got '" + it->second + "'");
    }
}

inline Rational rational_param(const GeneratorDescriptor& d, const std::string& key, const Rational& fallback) {
    auto it = d.params.find(key);
    return it == d.params.end() ? fallback : parse_rational(it->second);
}

}  // namespace detail

/// Builds the truncation described by a generator descriptor.
inline Dendrite generate(const GeneratorDescriptor& desc) {
    const std::string& f = desc.family;
    if (f == "arc") return arc(detail::rational_param(desc, "length", 1));
    if (f == "star") {
        auto it = desc.params.find("lengths");
        if (it == desc.params.end()) return star();
        std::vector<Rational> lengths;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) lengths.push_back(parse_rational(item));
        return star(lengths);
    }
    if (f == "omega_star")
        return omega_star(detail::count_param(desc, "arms", 12), detail::rational_param(desc, "q", make_rational(1, 2)));
    if (f == "comb") return comb(detail::count_param(desc, "depth", 4));
    if (f == "riemann") return riemann(detail::count_param(desc, "qmax", 3));
    if (f == "cantor_comb") return cantor_comb(detail::count_param(desc, "rank", 2));
    if (f == "gehman") return gehman(detail::count_param(desc, "depth", 3));
    throw std::invalid_argument("unknown family '" + f + "'");
}

struct Classification {
    bool completely_regular = false;
    bool all_orders_finite = false;
    bool in_theorem_class = false;
};

/// Properties of the ideal (untruncated) object of each family.
inline Classification classify(const std::string& family) {
    Classification c;
    if (family == "riemann") {
        c.completely_regular = false;
        c.all_orders_finite = true;
    } else if (family == "omega_star") {
        c.completely_regular = true;
        c.all_orders_finite = false;
    } else if (family == "comb" || family == "cantor_comb" || family == "gehman" || family == "star" ||
               family == "arc") {
        c.completely_regular = true;
        c.all_orders_finite = true;
    } else {
        throw std::invalid_argument("unknown family '" + family + "'");
    }
    c.in_theorem_class = c.completely_regular && c.all_orders_finite;
    return c;
}

/// Order of x in the ideal object; nullopt stands for an infinite order.
inline std::optional<std::size_t> ideal_point_order(const Dendrite& d, const PointRef& x) {
    if (d.descriptor() && d.descriptor()->family == "omega_star" && d.has_marked("center") &&
        d.canonical(x) == d.marked("center"))
        return std::nullopt;
    return point_order(d, x);
}

}  // namespace dendro::gallery

#pragma once

#include "dendro/chaos_checker.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace dendro {

/// 3-adic address α with cofinitely many digits equal to 1, stored as its
/// little-endian digit prefix with the trailing 1s trimmed.
class Address {
public:
    Address() = default;  // 1^∞

    explicit Address(std::vector<std::uint8_t> digits) : digits_(std::move(digits)) {
        for (auto d : digits_)
            if (d > 2) throw std::invalid_argument("address digit out of range");
        trim();
    }

    /// Parses "1^inf", "21^inf", "0211^inf" (digits, then the 1^inf tail).
    static Address parse(const std::string& text) {
        const std::string tail = "1^inf";
        if (text.size() < tail.size() || text.compare(text.size() - tail.size(), tail.size(), tail) != 0)
            throw std::invalid_argument("malformed address '" + text + "' (expected digits followed by 1^inf)");
        std::vector<std::uint8_t> digits;
        for (std::size_t i = 0; i + tail.size() < text.size(); ++i) {
            char c = text[i];
            if (c < '0' || c > '2') throw std::invalid_argument("malformed address '" + text + "'");
            digits.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        return Address(std::move(digits));
    }

    std::string str() const {
        std::string s;
        for (auto d : digits_) s += static_cast<char>('0' + d);
        return s + "1^inf";
    }

    std::uint8_t digit(std::size_t i) const { return i < digits_.size() ? digits_[i] : 1; }
    const std::vector<std::uint8_t>& prefix() const { return digits_; }

    friend bool operator==(const Address&, const Address&) = default;
    friend auto operator<=>(const Address&, const Address&) = default;

private:
    void trim() {
        while (!digits_.empty() && digits_.back() == 1) digits_.pop_back();
    }

    std::vector<std::uint8_t> digits_;
};

/// α + n in the 3-adic integers (carry toward higher positions).
inline Address add(const Address& alpha, std::int64_t n) {
    std::vector<std::uint8_t> digits = alpha.prefix();
    std::int64_t carry = n;
    for (std::size_t i = 0; carry != 0; ++i) {
        if (i == digits.size()) digits.push_back(1);
        std::int64_t s = digits[i] + carry;
        std::int64_t r = ((s % 3) + 3) % 3;
        digits[i] = static_cast<std::uint8_t>(r);
        carry = (s - r) / 3;
    }
    return Address(std::move(digits));
}

/// Number of digits different from 1.
inline std::size_t ell(const Address& alpha) {
    std::size_t n = 0;
    for (auto d : alpha.prefix())
        if (d != 1) ++n;
    return n;
}

/// Horizontal coordinate x_α = Σ 2α_i / 5^{i+1}.
inline Rational embed_x(const Address& alpha) {
    Rational x = make_rational(1, 2);
    Rational scale = make_rational(1, 5);
    for (auto d : alpha.prefix()) {
        x += 2 * (static_cast<long>(d) - 1) * scale;
        scale /= 5;
    }
    return x;
}

/// Least position where the two addresses differ (nullopt if equal).
inline std::optional<std::size_t> valuation(const Address& a, const Address& b) {
    std::size_t n = std::max(a.prefix().size(), b.prefix().size());
    for (std::size_t i = 0; i < n; ++i)
        if (a.digit(i) != b.digit(i)) return i;
    return std::nullopt;
}

/// Length of the fiber interval J_α = [0, 3^{-ℓ_α}].
inline Rational fiber_length(const Address& alpha) { return pow(Rational(3), -static_cast<long>(ell(alpha))); }

struct FiberPoint {
    Address alpha;
    Rational y;

    friend bool operator==(const FiberPoint& a, const FiberPoint& b) { return a.alpha == b.alpha && a.y == b.y; }
};

inline void validate(const FiberPoint& p) {
    if (p.y < 0 || p.y > fiber_length(p.alpha))
        throw std::invalid_argument("vertical coordinate outside the fiber of " + p.alpha.str());
}

/// H(x_α, y) = (x_{α+1}, 3^{ℓ_α - ℓ_{α+1}} y).
inline FiberPoint step(const FiberPoint& p) {
    validate(p);
    Address next = add(p.alpha, 1);
    long shift = static_cast<long>(ell(p.alpha)) - static_cast<long>(ell(next));
    return {next, p.y * pow(Rational(3), shift)};
}

inline FiberPoint step_inverse(const FiberPoint& p) {
    validate(p);
    Address prev = add(p.alpha, -1);
    long shift = static_cast<long>(ell(p.alpha)) - static_cast<long>(ell(prev));
    return {prev, p.y * pow(Rational(3), shift)};
}

/// diam H^n(K_α) = 3^{-ℓ(α+n)} for n = 0..N.
inline std::vector<Rational> fiber_diam_traj(const Address& alpha, std::size_t n_max) {
    std::vector<Rational> out;
    out.reserve(n_max + 1);
    Address a = alpha;
    for (std::size_t n = 0; n <= n_max; ++n) {
        out.push_back(fiber_length(a));
        a = add(a, 1);
    }
    return out;
}

/// Per-step ℓ values along the same trajectory (companion of fiber_diam_traj).
inline std::vector<std::size_t> ell_traj(const Address& alpha, std::size_t n_max) {
    std::vector<std::size_t> out;
    Address a = alpha;
    for (std::size_t n = 0; n <= n_max; ++n) {
        out.push_back(ell(a));
        a = add(a, 1);
    }
    return out;
}

struct ScrambledCount {
    std::size_t count = 0;
    std::size_t bound = 0;  ///< ⌈1/(3ε)⌉
};

/// Largest set of grid points of K_α whose pairwise limsup distance
/// Δy·3^{ℓ_α-1} exceeds ε (greedy is optimal on a line).
inline ScrambledCount eps_scrambled_max(const Address& alpha, const Rational& epsilon, std::size_t grid) {
    if (epsilon <= 0) throw std::invalid_argument("eps_scrambled_max: epsilon must be positive");
    if (grid < 10) throw std::invalid_argument("eps_scrambled_max: grid resolution must be at least 10");
    Rational len = fiber_length(alpha);
    Rational gain = pow(Rational(3), static_cast<long>(ell(alpha)) - 1);
    ScrambledCount res;
    std::optional<Rational> last;
    for (std::size_t j = 0; j <= grid; ++j) {
        Rational y = len * make_rational(static_cast<long>(j), static_cast<long>(grid));
        if (!last || (y - *last) * gain > epsilon) {
            ++res.count;
            last = y;
        }
    }
    res.bound = ceil(1 / (3 * epsilon)).get_ui();
    return res;
}

/// Membership of y in the middle-thirds Cantor set, exact for every rational.
inline bool in_cantor_set(Rational y) {
    if (y < 0 || y > 1) return false;
    std::set<Rational> seen;
    const Rational third = make_rational(1, 3), two_thirds = make_rational(2, 3);
    while (seen.insert(y).second) {
        if (y > third && y < two_thirds) return false;
        y = y <= third ? Rational(3 * y) : Rational(3 * y - 2);
    }
    return true;
}

/// Membership in the invariant Cantor restriction Y: y ∈ J_α and y ∈ C.
inline bool in_cantor_restriction(const FiberPoint& p) {
    if (p.y < 0 || p.y > fiber_length(p.alpha)) return false;
    return in_cantor_set(p.y);
}

/// The skew product as a System (plane points, sup metric).
struct OdometerSystem {
    using State = FiberPoint;
    std::size_t max_support = 6;

    FiberPoint step(const FiberPoint& p) const { return dendro::step(p); }
    Rational distance(const FiberPoint& p, const FiberPoint& q) const {
        return max(abs(embed_x(p.alpha) - embed_x(q.alpha)), abs(p.y - q.y));
    }
    FiberPoint sample(std::mt19937_64& rng) const {
        std::vector<std::uint8_t> digits(rng() % (max_support + 1));
        for (auto& d : digits) d = static_cast<std::uint8_t>(rng() % 3);
        Address a(std::move(digits));
        return {a, fiber_length(a) * random_unit(rng)};
    }
};

// ---------------------------------------------------------------------------
// Rectangle pattern

struct Rect {
    Rational a, b, c, d;  ///< [a,b] × [c,d]
    std::string word;
};

/// Child K_i of a rectangle: i-th fifth of odd index, height θ_i.
inline Rect child(const Rect& r, int i) {
    if (i < 0 || i > 2) throw std::invalid_argument("rectangle child index must be 0, 1 or 2");
    Rational w = r.b - r.a;
    Rational theta = i == 1 ? Rational(1) : make_rational(1, 3);
    return {r.a + 2 * i * w / 5, r.a + (2 * i + 1) * w / 5, r.c, r.c + theta * (r.d - r.c),
            r.word + static_cast<char>('0' + i)};
}

/// Rectangles of X_n (3^n of them) starting from the unit square.
inline std::vector<Rect> pattern(std::size_t depth, std::size_t cap = 10) {
    if (depth > cap) throw std::invalid_argument("pattern depth exceeds cap " + std::to_string(cap));
    std::vector<Rect> level{{Rational(0), Rational(1), Rational(0), Rational(1), ""}};
    for (std::size_t n = 0; n < depth; ++n) {
        std::vector<Rect> next;
        next.reserve(level.size() * 3);
        for (const Rect& r : level)
            for (int i = 0; i < 3; ++i) next.push_back(child(r, i));
        level = std::move(next);
    }
    return level;
}

// ---------------------------------------------------------------------------
// Gehman extension

struct GehmanExtension {
    std::shared_ptr<const Dendrite> dendrite;
    std::optional<TreeMap> map;
    VertexId root = 0;
    std::vector<VertexId> leaves;           ///< in label order
    std::vector<std::string> leaf_labels;   ///< binary cylinder words of length depth
    std::vector<std::size_t> leaf_permutation;  ///< leaf i ↦ leaf leaf_permutation[i]
};

/// Normalized vertical cylinder (binary word of Cantor digits) of a point of Y.
inline std::string vertical_cylinder(const FiberPoint& p, std::size_t depth) {
    Rational u = p.y / fiber_length(p.alpha);
    std::string word;
    for (std::size_t i = 0; i < depth; ++i) {
        if (u < make_rational(1, 2)) {
            word += '0';
            u *= 3;
        } else {
            word += '1';
            u = 3 * u - 2;
        }
    }
    return word;
}

/// Binary tree of the given depth (edge lengths 3^-j at depth j) whose leaves
/// are the depth-level vertical cylinders of Y; the map moves every interior
/// vertex one level toward the fixed root and permutes leaves as H does.
inline GehmanExtension gehman_extend(std::size_t depth) {
    if (depth < 2) throw std::invalid_argument("gehman_extend: depth must be at least 2");
    if (depth > 16) throw std::invalid_argument("gehman_extend: depth too large");
    std::vector<Edge> edges;
    std::vector<VertexId> parent{-1};
    std::vector<std::size_t> level{0};
    std::vector<std::string> word{""};
    std::vector<VertexId> frontier{0};
    for (std::size_t j = 1; j <= depth; ++j) {
        std::vector<VertexId> next;
        for (VertexId v : frontier)
            for (char bit : {'0', '1'}) {
                VertexId c = static_cast<VertexId>(parent.size());
                parent.push_back(v);
                level.push_back(j);
                word.push_back(word[v] + bit);
                edges.push_back({v, c, pow(Rational(3), -static_cast<long>(j))});
                next.push_back(c);
            }
        frontier = std::move(next);
    }
    GehmanExtension g;
    GeneratorDescriptor desc{"gehman", {{"depth", std::to_string(depth)}}};
    std::map<std::string, PointRef> marked{{"root", PointRef::vertex(0)}};
    g.dendrite = std::make_shared<const Dendrite>(parent.size(), std::move(edges), marked, desc);
    g.leaves = frontier;
    for (VertexId v : g.leaves) g.leaf_labels.push_back(word[v]);
    // induced leaf action: representative of each cylinder in K_{1^∞}, one step of H
    std::map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < g.leaf_labels.size(); ++i) index_of[g.leaf_labels[i]] = i;
    std::vector<PointRef> images(parent.size());
    for (std::size_t i = 0; i < g.leaves.size(); ++i) {
        Rational y = 0, scale = 1;
        for (char bit : g.leaf_labels[i]) {
            scale /= 3;
            if (bit == '1') y += 2 * scale;
        }
        FiberPoint img = step(FiberPoint{Address(), y});
        std::size_t target = index_of.at(vertical_cylinder(img, depth));
        g.leaf_permutation.push_back(target);
        images[g.leaves[i]] = PointRef::vertex(g.leaves[target]);
    }
    for (std::size_t v = 0; v < parent.size(); ++v)
        if (level[v] < depth) images[v] = PointRef::vertex(v == 0 ? 0 : parent[v]);
    g.map.emplace(g.dendrite, std::move(images));
    return g;
}

}  // namespace dendro

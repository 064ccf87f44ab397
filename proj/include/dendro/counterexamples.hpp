#pragma once

#include "dendro/exact_builder.hpp"
#include "dendro/gallery.hpp"

#include <string>
#include <vector>

namespace dendro::counterexamples {

/// ω-star with k arms, each arm carrying a tent map fixing the center.
inline GchBuild omega_star_gch(std::size_t arms, const Rational& q = make_rational(1, 2),
                               const Rational& rho = make_rational(6, 5)) {
    Dendrite d = gallery::omega_star(arms, q);
    return build_gch_not_eps(d, d.marked("center"), rho);
}

/// comb(n) with invariant pieces E_j shrinking to the base point (0,0).
inline GchBuild comb_gch(std::size_t n, std::size_t group_size = 2, const Rational& rho = make_rational(6, 5)) {
    Dendrite d = gallery::comb(n);
    return build_gch_not_eps(d, d.marked("A.0"), d.marked("A.1"), d.marked("a"), rho, group_size);
}

// ---------------------------------------------------------------------------
// Shift on an ω-star of Cantor sets

/// Point of arm `arm` (1-based) coded by an eventually-0 binary word (stored
/// without trailing zeros); the empty word is the common center 0^∞.
struct CantorPoint {
    std::size_t arm = 0;
    std::string word;

    friend bool operator==(const CantorPoint&, const CantorPoint&) = default;
};

inline CantorPoint cantor_point(std::size_t arm, std::string word) {
    for (char c : word)
        if (c != '0' && c != '1') throw std::invalid_argument("cantor word must be binary");
    while (!word.empty() && word.back() == '0') word.pop_back();
    if (word.empty()) return {0, ""};
    if (arm == 0) throw std::invalid_argument("arm index is 1-based");
    return {arm, std::move(word)};
}

inline bool is_center(const CantorPoint& p) { return p.word.empty(); }

/// One-sided shift on each arm; the center word 0^∞ is fixed.
inline CantorPoint shift(const CantorPoint& p) {
    if (is_center(p)) return p;
    return cantor_point(p.arm, p.word.substr(1));
}

/// Position on the arm: Σ 2 w_i 3^{-i-1} scaled by the arm length (1/2)^arm.
inline Rational arm_position(const CantorPoint& p) {
    Rational x = 0, scale = make_rational(1, 3);
    for (char c : p.word) {
        if (c == '1') x += 2 * scale;
        scale /= 3;
    }
    return is_center(p) ? Rational(0) : Rational(x * pow(make_rational(1, 2), static_cast<long>(p.arm)));
}

/// Cylinder [u] on one arm: words beginning with u.
struct Cylinder {
    std::size_t arm;
    std::string prefix;
};

/// σ^n([u]) ∩ [v] ≠ ∅ on the same arm: σ^n[u] = [u_n u_{n+1} …], or the whole arm once n ≥ |u|.
inline bool shifted_cylinders_meet(const Cylinder& u, std::size_t n, const Cylinder& v) {
    if (u.arm != v.arm) return false;
    std::string rest = n >= u.prefix.size() ? std::string() : u.prefix.substr(n);
    std::size_t common = std::min(rest.size(), v.prefix.size());
    return rest.compare(0, common, v.prefix, 0, common) == 0;
}

/// Strong mixing at cylinder level: for all cylinders of length ≤ depth on one arm,
/// σ^n[u] ∩ [v] ≠ ∅ for every depth ≤ n ≤ horizon.
inline bool cylinder_mixing(std::size_t arm, std::size_t depth, std::size_t horizon) {
    std::vector<std::string> words{""};
    for (std::size_t len = 1; len <= depth; ++len) {
        std::vector<std::string> next;
        for (const auto& w : words)
            if (w.size() == len - 1) {
                next.push_back(w + '0');
                next.push_back(w + '1');
            }
        words.insert(words.end(), next.begin(), next.end());
    }
    for (const auto& u : words)
        for (const auto& v : words)
            for (std::size_t n = depth; n <= horizon; ++n)
                if (!shifted_cylinders_meet({arm, u}, n, {arm, v})) return false;
    return true;
}

/// Gehman-dendrite extension of the odometer skew product.
inline GehmanExtension odometer_gehman(std::size_t depth) { return gehman_extend(depth); }

inline const std::vector<std::string>& names() {
    static const std::vector<std::string> list{"omega_star_gch", "comb_gch", "cantor_shift", "odometer_gehman"};
    return list;
}

}  // namespace dendro::counterexamples

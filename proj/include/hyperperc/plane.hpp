#pragma once

// An integer plane A(Z^2) inside Z^n whose projection to every coordinate plane is
// injective, with a certified separation constant, plus the connected thickening by
// staircase gadgets and the process eta built on it.
//
// All norms here are l1. All geometry is exact: rationals for Gram-Schmidt and the
// separation constant, int64 for lattice points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hyperperc/field.hpp"
#include "hyperperc/lattice.hpp"

namespace hyperperc {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using RVec = std::vector<Rational>;

inline Rational dot(const RVec& a, const RVec& b)
{
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline Rational l1(const RVec& a)
{
    Rational s = 0;
    for (const Rational& x : a)
        s += abs(x);
    return s;
}

/// Smallest integer >= q.
inline BigInt ceil_rational(const Rational& q)
{
    const BigInt num = numerator(q), den = denominator(q);
    BigInt t = num / den; // truncates toward zero
    if (t * den < num)
        ++t;
    return t;
}

inline RVec to_rvec(const Site& v)
{
    RVec r;
    for (Coord c : v.coords())
        r.emplace_back(c);
    return r;
}

inline Site to_site(const RVec& v)
{
    Site s(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (denominator(v[i]) != 1)
            throw falsified_error("vector entry " + v[i].str() + " is not an integer");
        s[static_cast<int>(i)] = numerator(v[i]).convert_to<Coord>();
    }
    return s;
}

struct AppendixMaps {
    int n;
    Site v1, v2;

    /// L(x)_j = x_j + x_{n-1} + j x_n for j = 1..n-2.
    std::vector<Coord> L(const Site& x) const
    {
        std::vector<Coord> y;
        for (int j = 1; j <= n - 2; ++j)
            y.push_back(x[j - 1] + x[n - 2] + j * x[n - 1]);
        return y;
    }
};

/// v1 = (-1,...,-1,1,0) and v2 = (-1,-2,...,-(n-2),0,1), spanning ker L.
inline AppendixMaps appendix_maps(int n)
{
    if (n < 3 || n > kMaxDim)
        throw invalid_argument("the inclined plane needs 3 <= n <= " + std::to_string(kMaxDim));
    AppendixMaps m{n, Site(n), Site(n)};
    for (int j = 1; j <= n - 2; ++j) {
        m.v1[j - 1] = -1;
        m.v2[j - 1] = -j;
    }
    m.v1[n - 2] = 1;
    m.v2[n - 1] = 1;
    return m;
}

struct InclinedBasis {
    int n = 0;
    Site w1, w2;
    RVec w1_tilde, w2_tilde; // Gram-Schmidt pair before scaling
    Coord R = 0;             // |w1|_1 = |w2|_1

    /// A(x, y) = x w1 + y w2.
    Site A(Coord x, Coord y) const { return x * w1 + y * w2; }
};

inline InclinedBasis build_inclined_basis(int n)
{
    const AppendixMaps m = appendix_maps(n);
    InclinedBasis b;
    b.n = n;
    b.w1_tilde = to_rvec(m.v1);
    const RVec v2 = to_rvec(m.v2);
    const Rational mu = dot(b.w1_tilde, v2) / dot(b.w1_tilde, b.w1_tilde);
    for (int i = 0; i < n; ++i)
        b.w2_tilde.push_back(v2[static_cast<std::size_t>(i)] - mu * b.w1_tilde[static_cast<std::size_t>(i)]);
    const Rational s1 = 2 * l1(b.w2_tilde), s2 = 2 * l1(b.w1_tilde);
    RVec w1, w2;
    for (int i = 0; i < n; ++i) {
        w1.push_back(s1 * b.w1_tilde[static_cast<std::size_t>(i)]);
        w2.push_back(s2 * b.w2_tilde[static_cast<std::size_t>(i)]);
    }
    b.w1 = to_site(w1);
    b.w2 = to_site(w2);
    b.R = l1_norm(b.w1);
    if (dot(w1, w2) != 0 || l1_norm(b.w2) != b.R)
        throw falsified_error("inclined basis is not orthogonal with equal l1 norms");
    return b;
}

/// A = U H with U = [v1 v2] and H upper triangular; checked as an exact identity.
inline bool verify_factorization(const InclinedBasis& b)
{
    const AppendixMaps m = appendix_maps(b.n);
    const Rational n1 = l1(b.w1_tilde), n2 = l1(b.w2_tilde);
    const Rational h11 = 2 * n2, h12 = Rational(2 - b.n) * n1, h22 = 2 * n1;
    for (int i = 0; i < b.n; ++i) {
        const Rational a1 = Rational(m.v1[i]) * h11;
        const Rational a2 = Rational(m.v1[i]) * h12 + Rational(m.v2[i]) * h22;
        if (a1 != Rational(b.w1[i]) || a2 != Rational(b.w2[i]))
            return false;
    }
    return true;
}

/// det of rows (i, j) of A = [w1 w2]; i, j are 1-based coordinates.
inline BigInt minor2(const InclinedBasis& b, int i, int j)
{
    return BigInt(b.w1[i - 1]) * b.w2[j - 1] - BigInt(b.w1[j - 1]) * b.w2[i - 1];
}

struct InjectivityReport {
    IndexSet I;
    std::vector<std::pair<IndexSet, BigInt>> determinants; // every 2-subset J of I
    BigInt min_abs_det;
    bool injective = false; // some determinant is nonzero
};

inline InjectivityReport injectivity_certificate(const InclinedBasis& b, const IndexSet& I)
{
    if (I.size() < 2)
        throw invalid_argument("injectivity needs an index set with at least 2 members");
    if (!I.valid_for(b.n))
        throw invalid_argument("index set " + I.to_string() + " is not inside [n]");
    InjectivityReport r;
    r.I = I;
    bool first = true;
    const auto& m = I.members();
    for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t c = a + 1; c < m.size(); ++c) {
            BigInt d = minor2(b, m[a], m[c]);
            if (first || abs(d) < r.min_abs_det)
                r.min_abs_det = abs(d);
            first = false;
            r.injective = r.injective || d != 0;
            r.determinants.emplace_back(IndexSet{m[a], m[c]}, std::move(d));
        }
    return r;
}

/// Lower bound for |pi_J A z|_1 / |z|_1 given by a nonsingular 2x2 block:
/// |det| / (largest column l1-norm of the adjugate).
inline Rational block_separation(const InclinedBasis& b, int i, int j)
{
    const BigInt a = b.w1[i - 1], bb = b.w2[i - 1], c = b.w1[j - 1], d = b.w2[j - 1];
    const BigInt det = a * d - bb * c;
    if (det == 0)
        return 0;
    const BigInt col1 = abs(d) + abs(c), col2 = abs(bb) + abs(a);
    return Rational(abs(det)) / Rational(std::max(col1, col2));
}

/// Certified c > 0 with |pi_I A z|_1 >= c |z|_1 for every k-subset I and every z.
/// For each I the best nonsingular 2-subset J of I is used; c is the minimum over I.
inline Rational separation_constant(const InclinedBasis& b, int k)
{
    if (k < 2 || k > b.n)
        throw invalid_argument("separation constant needs 2 <= k <= n");
    Rational c = -1;
    for (const IndexSet& I : all_index_sets(b.n, k)) {
        Rational best = 0;
        const auto& m = I.members();
        for (std::size_t a = 0; a < m.size(); ++a)
            for (std::size_t e = a + 1; e < m.size(); ++e)
                best = std::max(best, block_separation(b, m[a], m[e]));
        if (best == 0)
            throw falsified_error("every 2x2 block of pi_I A is singular for I = " + I.to_string());
        if (c < 0 || best < c)
            c = best;
    }
    return c;
}

struct SeparationAudit {
    std::uint64_t pairs = 0;
    std::uint64_t violations = 0;
};

/// Samples u, v in [-range, range]^2 and checks |pi_I(Au - Av)|_1 >= c |u - v|_1 for all I.
inline SeparationAudit separation_audit(const InclinedBasis& b, int k, const Rational& c, std::uint64_t pairs,
                                        Coord range, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Coord> coord(-range, range);
    const BigInt num = numerator(c), den = denominator(c);
    const auto sets = all_index_sets(b.n, k);
    SeparationAudit out;
    for (std::uint64_t p = 0; p < pairs; ++p) {
        const Coord ux = coord(rng), uy = coord(rng), vx = coord(rng), vy = coord(rng);
        const Site d = b.A(ux - vx, uy - vy);
        const BigInt rhs = num * BigInt(std::abs(ux - vx) + std::abs(uy - vy));
        ++out.pairs;
        for (const IndexSet& I : sets) {
            Coord s = 0;
            for (int m : I.members())
                s += std::abs(d[m - 1]);
            if (den * BigInt(s) < rhs) {
                ++out.violations;
                break;
            }
        }
    }
    return out;
}

struct GammaGadget {
    Coord x = 0, y = 0;
    std::vector<Site> sites; // staircase towards A(x+1,y), then towards A(x,y+1), base first
};

/// Gamma(x,y) = A(x,y) + union of segments [p_{j-1}, p_j] and [q_{j-1}, q_j], where
/// p_j = p_{j-1} + alpha_j e_j with alpha = w1, and q likewise with w2.
inline GammaGadget gamma_gadget(const InclinedBasis& b, Coord x, Coord y)
{
    GammaGadget g;
    g.x = x;
    g.y = y;
    const Site base = b.A(x, y);
    g.sites.push_back(base);
    SiteSet seen{base};
    for (const Site* w : {&b.w1, &b.w2}) {
        Site cur = base;
        for (int j = 0; j < b.n; ++j) {
            const Coord step = (*w)[j] > 0 ? 1 : -1;
            for (Coord s = 0; s < std::abs((*w)[j]); ++s) {
                cur[j] += step;
                if (seen.insert(cur).second)
                    g.sites.push_back(cur);
            }
        }
    }
    return g;
}

/// 1 iff every site of Gamma(x,y) is open.
inline bool eta(const FieldView& view, const InclinedBasis& b, Coord x, Coord y)
{
    for (const Site& s : gamma_gadget(b, x, y).sites)
        if (!view.omega(s))
            return false;
    return true;
}

struct ClassCParams {
    Rational chi; // 3R / c
    double s;     // (prod p_I)^((2R+1)^k)
};

inline ClassCParams class_c_params(const InclinedBasis& b, const ParamVector& params, int k)
{
    if (params.n() != b.n || params.k() != k)
        throw invalid_argument("parameter vector does not match (n, k)");
    const Rational c = separation_constant(b, k);
    return {Rational(3 * b.R) / c, box_all_open_probability(params, b.R)};
}

/// Deterministic form of the dependence claim: whenever |d|_1 >= chi, the projected
/// R-balls about A(u) and A(u + d) are disjoint in every plane I, i.e.
/// |pi_I A d|_1 > 2R. Scans every d with |d|_1 in [ceil(chi), ceil(chi) + depth].
struct DisjointnessAudit {
    std::uint64_t offsets = 0;
    std::uint64_t violations = 0;
};

inline DisjointnessAudit support_disjointness_audit(const InclinedBasis& b, int k, const Rational& chi, Coord depth)
{
    DisjointnessAudit out;
    const Coord lo = ceil_rational(chi).convert_to<Coord>();
    const auto sets = all_index_sets(b.n, k);
    for (Coord r = lo; r <= lo + depth; ++r)
        for (Coord dx = -r; dx <= r; ++dx) {
            const Coord rest = r - std::abs(dx);
            for (Coord dy : {rest, -rest}) {
                const Site d = b.A(dx, dy);
                ++out.offsets;
                for (const IndexSet& I : sets) {
                    Coord s = 0;
                    for (int m : I.members())
                        s += std::abs(d[m - 1]);
                    if (s <= 2 * b.R) {
                        ++out.violations;
                        break;
                    }
                }
                if (rest == 0)
                    break;
            }
        }
    return out;
}

} // namespace hyperperc

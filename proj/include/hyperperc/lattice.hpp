#pragma once

// Integer-lattice geometry on Z^n: sites, coordinate index sets, projections,
// boxes and surround certificates.
//
// Conventions used throughout the library:
//  * Site coordinates are stored 0-based (v[0] is the first coordinate).
//  * IndexSet members are 1-based, matching [n] = {1, ..., n}.
//  * Boundaries are l-infinity spheres; paths and separation use l1.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "hyperperc/errors.hpp"

namespace hyperperc {

using Coord = std::int64_t;

/// Largest ambient dimension a Site can carry.
inline constexpr int kMaxDim = 12;

class Site {
public:
    Site() = default;

    explicit Site(int dim) : dim_(dim)
    {
        if (dim < 0 || dim > kMaxDim)
            throw invalid_argument("site dimension out of range: " + std::to_string(dim));
    }

    Site(std::initializer_list<Coord> coords) : Site(std::span<const Coord>(coords.begin(), coords.size())) {}

    explicit Site(std::span<const Coord> coords) : Site(static_cast<int>(coords.size()))
    {
        std::copy(coords.begin(), coords.end(), c_.begin());
    }

    int dim() const { return dim_; }

    Coord operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    Coord& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

    std::span<const Coord> coords() const { return {c_.data(), static_cast<std::size_t>(dim_)}; }
    std::span<Coord> coords() { return {c_.data(), static_cast<std::size_t>(dim_)}; }

    Site& operator+=(const Site& o)
    {
        require_same_dim(o);
        for (int i = 0; i < dim_; ++i)
            (*this)[i] = detail::checked_add((*this)[i], o[i]);
        return *this;
    }

    Site& operator-=(const Site& o)
    {
        require_same_dim(o);
        for (int i = 0; i < dim_; ++i)
            (*this)[i] = detail::checked_add((*this)[i], -o[i]);
        return *this;
    }

    friend Site operator+(Site a, const Site& b) { return a += b; }
    friend Site operator-(Site a, const Site& b) { return a -= b; }

    friend Site operator*(Coord s, Site a)
    {
        for (int i = 0; i < a.dim_; ++i)
            a[i] = detail::checked_mul(s, a[i]);
        return a;
    }

    friend bool operator==(const Site& a, const Site& b) { return a.dim_ == b.dim_ && a.c_ == b.c_; }

    friend std::strong_ordering operator<=>(const Site& a, const Site& b)
    {
        if (auto c = a.dim_ <=> b.dim_; c != 0)
            return c;
        for (int i = 0; i < a.dim_; ++i)
            if (auto c = a[i] <=> b[i]; c != 0)
                return c;
        return std::strong_ordering::equal;
    }

    std::string to_string() const
    {
        std::string s = "(";
        for (int i = 0; i < dim_; ++i) {
            if (i)
                s += ",";
            s += std::to_string((*this)[i]);
        }
        return s + ")";
    }

private:
    void require_same_dim(const Site& o) const
    {
        if (o.dim_ != dim_)
            throw invalid_argument("site dimension mismatch");
    }

    std::array<Coord, kMaxDim> c_{};
    int dim_ = 0;
};

struct SiteHash {
    std::size_t operator()(const Site& s) const noexcept
    {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(s.dim());
        for (Coord c : s.coords()) {
            h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

using SiteSet = std::unordered_set<Site, SiteHash>;

inline Coord l1_norm(const Site& v)
{
    Coord s = 0;
    for (Coord c : v.coords())
        s = detail::checked_add(s, c < 0 ? -c : c);
    return s;
}

inline Coord linf_norm(const Site& v)
{
    Coord m = 0;
    for (Coord c : v.coords())
        m = std::max(m, c < 0 ? -c : c);
    return m;
}

/// All 2n sites at l1-distance 1, ordered +e_1, -e_1, +e_2, -e_2, ...
inline std::vector<Site> neighbors(const Site& v)
{
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(2 * v.dim()));
    for (int i = 0; i < v.dim(); ++i) {
        for (Coord step : {Coord{1}, Coord{-1}}) {
            Site w = v;
            w[i] = detail::checked_add(w[i], step);
            out.push_back(w);
        }
    }
    return out;
}

/// True iff the site lies on the l-infinity sphere of radius K.
inline bool on_boundary(const Site& v, Coord K) { return linf_norm(v) == K; }

inline std::uint64_t binomial(int n, int k)
{
    if (k < 0 || n < 0 || k > n)
        return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

/// A strictly increasing subset of {1, ..., n}; identifies the coordinate plane Z^k_I.
class IndexSet {
public:
    IndexSet() = default;
    IndexSet(std::initializer_list<int> members) : IndexSet(std::vector<int>(members)) {}

    explicit IndexSet(std::vector<int> members) : m_(std::move(members))
    {
        if (m_.empty())
            throw invalid_argument("index set must be nonempty");
        if (m_.front() < 1)
            throw invalid_argument("index set members are 1-based");
        for (std::size_t i = 1; i < m_.size(); ++i)
            if (m_[i] <= m_[i - 1])
                throw invalid_argument("index set members must be strictly increasing: " + to_string());
    }

    int size() const { return static_cast<int>(m_.size()); }
    const std::vector<int>& members() const { return m_; }
    int max() const { return m_.back(); }
    bool contains(int i) const { return std::binary_search(m_.begin(), m_.end(), i); }
    bool valid_for(int n) const { return !m_.empty() && m_.back() <= n && size() <= n; }

    /// Colexicographic rank among the k-subsets of {1, 2, ...}: sum_i C(m_i - 1, i).
    std::uint64_t colex_rank() const
    {
        std::uint64_t r = 0;
        for (std::size_t i = 0; i < m_.size(); ++i)
            r += binomial(m_[i] - 1, static_cast<int>(i) + 1);
        return r;
    }

    /// [n] minus this set.
    IndexSet complement(int n) const
    {
        std::vector<int> out;
        for (int i = 1; i <= n; ++i)
            if (!contains(i))
                out.push_back(i);
        return IndexSet(std::move(out));
    }

    std::string to_string() const
    {
        std::string s = "[";
        for (std::size_t i = 0; i < m_.size(); ++i) {
            if (i)
                s += ",";
            s += std::to_string(m_[i]);
        }
        return s + "]";
    }

    friend bool operator==(const IndexSet&, const IndexSet&) = default;
    friend auto operator<=>(const IndexSet& a, const IndexSet& b) { return a.m_ <=> b.m_; }

private:
    std::vector<int> m_;
};

/// All k-subsets of [n] in colex order, so that position == colex_rank().
inline std::vector<IndexSet> all_index_sets(int n, int k)
{
    if (k < 1 || k > n)
        throw invalid_argument("need 1 <= k <= n");
    std::vector<IndexSet> out;
    std::vector<int> c(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        c[static_cast<std::size_t>(i)] = i + 1;
    while (true) {
        out.emplace_back(c);
        // colex successor: bump the lowest position that can move
        int i = 0;
        while (i < k - 1 && c[static_cast<std::size_t>(i)] + 1 == c[static_cast<std::size_t>(i + 1)])
            ++i;
        if (i == k - 1 && c[static_cast<std::size_t>(i)] == n)
            break;
        ++c[static_cast<std::size_t>(i)];
        for (int j = 0; j < i; ++j)
            c[static_cast<std::size_t>(j)] = j + 1;
    }
    return out;
}

/// Coordinates of v restricted to I, in increasing index order.
inline Site project(const Site& v, const IndexSet& I)
{
    if (!I.valid_for(v.dim()))
        throw invalid_argument("index set " + I.to_string() + " invalid for dimension " + std::to_string(v.dim()));
    Site out(I.size());
    for (int i = 0; i < I.size(); ++i)
        out[i] = v[I.members()[static_cast<std::size_t>(i)] - 1];
    return out;
}

/// Axis-aligned integer box [lo_1, hi_1] x ... x [lo_n, hi_n], bounds inclusive.
class Box {
public:
    Box(Site lo, Site hi) : lo_(lo), hi_(hi)
    {
        if (lo.dim() != hi.dim())
            throw invalid_argument("box corners differ in dimension");
        for (int i = 0; i < lo.dim(); ++i)
            if (lo[i] > hi[i])
                throw invalid_argument("box requires lo <= hi in every coordinate");
    }

    /// B(K) = [-K, K]^n.
    static Box ball(int n, Coord K)
    {
        Site lo(n), hi(n);
        for (int i = 0; i < n; ++i) {
            lo[i] = -K;
            hi[i] = K;
        }
        return {lo, hi};
    }

    /// B(y; N) = [y_1, y_1 + N - 1] x ... x [y_n, y_n + N - 1].
    static Box corner(const Site& y, Coord N)
    {
        if (N < 1)
            throw invalid_argument("box side must be positive");
        Site hi = y;
        for (int i = 0; i < y.dim(); ++i)
            hi[i] = detail::checked_add(y[i], N - 1);
        return {y, hi};
    }

    int dim() const { return lo_.dim(); }
    const Site& lo() const { return lo_; }
    const Site& hi() const { return hi_; }
    Coord extent(int i) const { return hi_[i] - lo_[i] + 1; }

    bool contains(const Site& v) const
    {
        if (v.dim() != dim())
            return false;
        for (int i = 0; i < dim(); ++i)
            if (v[i] < lo_[i] || v[i] > hi_[i])
                return false;
        return true;
    }

    /// True iff v is inside and touches one of the faces.
    bool on_face(const Site& v) const
    {
        if (!contains(v))
            return false;
        for (int i = 0; i < dim(); ++i)
            if (v[i] == lo_[i] || v[i] == hi_[i])
                return true;
        return false;
    }

    std::uint64_t num_sites() const
    {
        std::uint64_t n = 1;
        for (int i = 0; i < dim(); ++i)
            n *= static_cast<std::uint64_t>(extent(i));
        return n;
    }

    Box project(const IndexSet& I) const { return {hyperperc::project(lo_, I), hyperperc::project(hi_, I)}; }

    /// Visits every site in lexicographic order (last coordinate fastest).
    template <class F>
    void for_each(F&& f) const
    {
        Site v = lo_;
        const int n = dim();
        if (n == 0) {
            f(v);
            return;
        }
        while (true) {
            f(static_cast<const Site&>(v));
            int i = n - 1;
            while (i >= 0 && v[i] == hi_[i]) {
                v[i] = lo_[i];
                --i;
            }
            if (i < 0)
                return;
            ++v[i];
        }
    }

    friend bool operator==(const Box&, const Box&) = default;

private:
    Site lo_, hi_;
};

/// Run-scoped ambient dimension. Sites built through it are checked against n.
class Lattice {
public:
    explicit Lattice(int n) : n_(n)
    {
        if (n < 1 || n > kMaxDim)
            throw invalid_argument("ambient dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }

    int dim() const { return n_; }
    Site origin() const { return Site(n_); }

    Site site(std::initializer_list<Coord> coords) const
    {
        if (static_cast<int>(coords.size()) != n_)
            throw invalid_argument("site has " + std::to_string(coords.size()) + " coordinates, lattice has " +
                                   std::to_string(n_));
        return Site(coords);
    }

    /// scale * e_i, with i 1-based.
    Site unit(int i, Coord scale = 1) const
    {
        if (i < 1 || i > n_)
            throw invalid_argument("unit vector index out of range");
        Site e(n_);
        e[i - 1] = scale;
        return e;
    }

    Box ball(Coord K) const { return Box::ball(n_, K); }
    std::vector<IndexSet> index_sets(int k) const { return all_index_sets(n_, k); }

    void check(const Site& v) const
    {
        if (v.dim() != n_)
            throw invalid_argument("site " + v.to_string() + " does not live in Z^" + std::to_string(n_));
    }

private:
    int n_;
};

/// T surrounds the origin with A the finite origin side of Z^d \ T.
struct SurroundCertificate {
    std::vector<Site> region;  // A
    std::vector<Site> barrier; // T
};

/// Checks that every barrier site satisfies `pred` and that the barrier contains the whole
/// exterior l1-neighbourhood of the region, so the region cannot reach infinity without
/// crossing it. Structural defects (empty or disconnected region, origin missing, mixed
/// dimensions, region meeting barrier) throw invalid_certificate.
template <class Pred>
bool verify_surround(const SurroundCertificate& cert, Pred&& pred)
{
    if (cert.region.empty())
        throw invalid_certificate("certificate region is empty");
    const int d = cert.region.front().dim();
    SiteSet region;
    for (const Site& a : cert.region) {
        if (a.dim() != d)
            throw invalid_certificate("certificate region mixes dimensions");
        region.insert(a);
    }
    SiteSet barrier;
    for (const Site& t : cert.barrier) {
        if (t.dim() != d)
            throw invalid_certificate("certificate barrier dimension differs from region");
        if (region.count(t))
            throw invalid_certificate("site " + t.to_string() + " is in both region and barrier");
        barrier.insert(t);
    }
    const Site o(d);
    if (!region.count(o))
        throw invalid_certificate("certificate region does not contain the origin");

    SiteSet seen{o};
    std::deque<Site> queue{o};
    while (!queue.empty()) {
        Site v = queue.front();
        queue.pop_front();
        for (const Site& w : neighbors(v))
            if (region.count(w) && seen.insert(w).second)
                queue.push_back(w);
    }
    if (seen.size() != region.size())
        throw invalid_certificate("certificate region is not connected");

    for (const Site& a : region)
        for (const Site& w : neighbors(a))
            if (!region.count(w) && !barrier.count(w))
                return false;
    for (const Site& t : barrier)
        if (!pred(t))
            return false;
    return true;
}

} // namespace hyperperc

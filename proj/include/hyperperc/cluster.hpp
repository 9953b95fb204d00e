#pragma once

// Origin clusters, boundary connection, rectangle crossings and the
// finiteness certificate built from a finite plane cluster plus a closed barrier.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hyperperc/field.hpp"
#include "hyperperc/lattice.hpp"

namespace hyperperc {

struct ClusterResult {
    std::vector<Site> sites; // breadth-first order
    bool touched_boundary = false;
    bool frontier_exhausted = true;
};

/// Breadth-first exploration of the open cluster of the origin inside B(K).
/// Stops after `cap` sites and then reports frontier_exhausted = false.
inline ClusterResult explore_origin_cluster(const FieldView& view, Coord K, std::size_t cap)
{
    if (K < 1)
        throw invalid_argument("radius must be positive");
    ClusterResult res;
    const Site o(view.n());
    if (!view.omega(o))
        return res;
    SiteSet seen{o};
    std::deque<Site> queue{o};
    while (!queue.empty()) {
        if (res.sites.size() >= cap) {
            res.frontier_exhausted = false;
            break;
        }
        Site v = queue.front();
        queue.pop_front();
        res.sites.push_back(v);
        if (on_boundary(v, K))
            res.touched_boundary = true;
        for (const Site& w : neighbors(v))
            if (linf_norm(w) <= K && !seen.count(w) && view.omega(w)) {
                seen.insert(w);
                queue.push_back(w);
            }
    }
    return res;
}

namespace detail {

/// Open-addressing set of nonzero 64-bit keys.
class FlatKeySet {
public:
    FlatKeySet() { slots_.assign(64, 0); }

    bool insert(std::uint64_t key)
    {
        if ((size_ + 1) * 2 > slots_.size())
            grow();
        return place(slots_, key);
    }

    void clear()
    {
        if (slots_.size() > 4096)
            slots_.assign(64, 0);
        else
            std::fill(slots_.begin(), slots_.end(), 0);
        size_ = 0;
    }

    std::size_t size() const { return size_; }

private:
    bool place(std::vector<std::uint64_t>& slots, std::uint64_t key)
    {
        const std::size_t mask = slots.size() - 1;
        std::size_t i = mix64(key) & mask;
        while (slots[i] != 0) {
            if (slots[i] == key)
                return false;
            i = (i + 1) & mask;
        }
        slots[i] = key;
        if (&slots == &slots_)
            ++size_;
        return true;
    }

    void grow()
    {
        std::vector<std::uint64_t> next(slots_.size() * 2, 0);
        for (std::uint64_t k : slots_)
            if (k != 0)
                place(next, k);
        slots_.swap(next);
    }

    std::vector<std::uint64_t> slots_;
    std::size_t size_ = 0;
};

} // namespace detail

struct ProbeResult {
    bool origin_open = false;
    bool reached = false;  // cluster touches the l-infinity sphere of radius `limit`
    Coord max_radius = -1; // largest l-infinity norm seen; capped at `limit`; -1 if origin closed
    std::size_t visited = 0;
};

/// Depth-first search of the origin cluster inside B(limit), stopping as soon as
/// the sphere of radius `limit` is hit. The result does not depend on visiting
/// order: max_radius = min(sup of |v|_inf over the full cluster, limit).
inline ProbeResult probe_origin(const FieldView& view, Coord limit)
{
    const int n = view.n();
    if (limit < 1)
        throw invalid_argument("probe radius must be positive");
    const std::uint64_t side = static_cast<std::uint64_t>(2 * limit + 1);
    {
        long double cells = 1;
        for (int i = 0; i < n; ++i)
            cells *= static_cast<long double>(side);
        if (cells >= 9.0e18L)
            throw invalid_argument("probe window too large to index");
    }
    auto key = [&](const Coord* v) {
        std::uint64_t k = 0;
        for (int i = 0; i < n; ++i)
            k = k * side + static_cast<std::uint64_t>(v[i] + limit);
        return k + 1;
    };

    ProbeResult res;
    std::array<Coord, kMaxDim> o{};
    if (!view.omega_raw(o.data()))
        return res;
    res.origin_open = true;
    res.max_radius = 0;

    thread_local detail::FlatKeySet seen;
    thread_local std::vector<std::array<Coord, kMaxDim>> stack;
    seen.clear();
    stack.clear();
    seen.insert(key(o.data()));
    stack.push_back(o);
    while (!stack.empty()) {
        const std::array<Coord, kMaxDim> v = stack.back();
        stack.pop_back();
        for (int i = n - 1; i >= 0; --i) {
            for (Coord step : {Coord{-1}, Coord{1}}) {
                std::array<Coord, kMaxDim> w = v;
                w[static_cast<std::size_t>(i)] += step;
                const Coord a = w[static_cast<std::size_t>(i)] < 0 ? -w[static_cast<std::size_t>(i)]
                                                                  : w[static_cast<std::size_t>(i)];
                if (a > limit)
                    continue;
                if (!view.omega_raw(w.data()))
                    continue;
                if (!seen.insert(key(w.data())))
                    continue;
                Coord r = 0;
                for (int j = 0; j < n; ++j)
                    r = std::max(r, w[static_cast<std::size_t>(j)] < 0 ? -w[static_cast<std::size_t>(j)]
                                                                       : w[static_cast<std::size_t>(j)]);
                res.max_radius = std::max(res.max_radius, r);
                if (r == limit) {
                    res.reached = true;
                    res.visited = seen.size();
                    return res;
                }
                stack.push_back(w);
            }
        }
    }
    res.visited = seen.size();
    return res;
}

/// [o <-> dB(K)].
inline bool connects_to_boundary(const FieldView& view, Coord K) { return probe_origin(view, K).reached; }

/// The cluster reaches dB(K) but not dB(M); the second clause stands in for o -/-> infinity.
inline bool truncated_connect(const FieldView& view, Coord K, Coord M)
{
    if (M <= K)
        throw invalid_argument("truncation radius M must exceed K");
    const ProbeResult r = probe_origin(view, M);
    return !r.reached && r.max_radius >= K;
}

enum class Axis { first, second };

/// Integer rectangle [a,b] x [c,d]; `height` names the axis along which
/// bottom-to-top crossings run.
struct Rectangle2D {
    Coord a, b, c, d;
    Axis height = Axis::second;

    Rectangle2D(Coord a_, Coord b_, Coord c_, Coord d_, Axis h = Axis::second) : a(a_), b(b_), c(c_), d(d_), height(h)
    {
        if (a > b || c > d)
            throw invalid_argument("rectangle needs a <= b and c <= d");
    }

    Coord width() const { return b - a + 1; }
    Coord depth() const { return d - c + 1; }
    bool contains(Coord x, Coord y) const { return a <= x && x <= b && c <= y && y <= d; }
    std::uint64_t num_sites() const { return static_cast<std::uint64_t>(width() * depth()); }
};

using Point2 = std::pair<Coord, Coord>;

/// Open path inside `r` from the low face to the high face of `along`, or nullopt.
/// Search is breadth-first from the low face in increasing (x, y) order.
template <class Pred>
std::optional<std::vector<Point2>> crossing_path(const Rectangle2D& r, Pred&& open, Axis along)
{
    const Coord w = r.width(), h = r.depth();
    auto idx = [&](Coord x, Coord y) { return static_cast<std::size_t>((x - r.a) * h + (y - r.c)); };
    std::vector<std::int64_t> parent(static_cast<std::size_t>(w * h), -2);
    std::deque<Point2> queue;
    auto at_start = [&](Coord x, Coord y) { return along == Axis::first ? x == r.a : y == r.c; };
    auto at_end = [&](Coord x, Coord y) { return along == Axis::first ? x == r.b : y == r.d; };
    for (Coord x = r.a; x <= r.b; ++x)
        for (Coord y = r.c; y <= r.d; ++y)
            if (at_start(x, y) && open(x, y)) {
                parent[idx(x, y)] = -1;
                queue.emplace_back(x, y);
            }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        if (at_end(x, y)) {
            std::vector<Point2> path{{x, y}};
            std::int64_t p = parent[idx(x, y)];
            while (p >= 0) {
                const Coord px = r.a + p / h, py = r.c + p % h;
                path.emplace_back(px, py);
                p = parent[static_cast<std::size_t>(p)];
            }
            std::reverse(path.begin(), path.end());
            return path;
        }
        const Point2 nb[4] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
        for (auto [u, v] : nb) {
            if (!r.contains(u, v) || parent[idx(u, v)] != -2 || !open(u, v))
                continue;
            parent[idx(u, v)] = static_cast<std::int64_t>(idx(x, y));
            queue.emplace_back(u, v);
        }
    }
    return std::nullopt;
}

inline Axis other(Axis a) { return a == Axis::first ? Axis::second : Axis::first; }

template <class Pred>
bool crossing_bt(const Rectangle2D& r, Pred&& open)
{
    return crossing_path(r, open, r.height).has_value();
}

template <class Pred>
bool crossing_lr(const Rectangle2D& r, Pred&& open)
{
    return crossing_path(r, open, other(r.height)).has_value();
}

enum class BarrierKind { sphere, flood };

struct BarrierResult {
    SurroundCertificate cert;
    BarrierKind kind;
};

namespace detail {

inline std::vector<Site> exterior_boundary(const std::vector<Site>& region)
{
    SiteSet in(region.begin(), region.end()), seen;
    std::vector<Site> out;
    for (const Site& a : region)
        for (const Site& w : neighbors(a))
            if (!in.count(w) && seen.insert(w).second)
                out.push_back(w);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// Looks for a set T of blocked sites surrounding the origin of Z^d inside `window`.
/// Tries the exterior shells of l-infinity balls first, then a flood fill of the
/// unblocked component of the origin. The origin itself may be blocked.
template <class Blocked>
std::optional<BarrierResult> find_surrounding_barrier(const Box& window, Blocked&& blocked)
{
    const int d = window.dim();
    const Site o(d);
    if (!window.contains(o))
        throw invalid_argument("barrier window must contain the origin");
    Coord rmax = -1;
    for (int i = 0; i < d; ++i) {
        const Coord room = std::min(-window.lo()[i], window.hi()[i]);
        rmax = rmax < 0 ? room : std::min(rmax, room);
    }

    std::unordered_map<Site, bool, SiteHash> memo;
    auto is_blocked = [&](const Site& v) {
        auto it = memo.find(v);
        if (it != memo.end())
            return it->second;
        const bool b = blocked(v);
        memo.emplace(v, b);
        return b;
    };

    // The exterior l1-shell of the l-infinity ball of radius r-1: sites with exactly
    // one coordinate at +-r and the rest inside.
    auto in_shell = [](const Site& v, Coord r) {
        int at = 0;
        for (Coord c : v.coords()) {
            const Coord a = c < 0 ? -c : c;
            if (a > r)
                return false;
            at += a == r;
        }
        return at == 1;
    };
    for (Coord r = 1; r <= rmax; ++r) {
        bool ok = true;
        Site lo(d), hi(d);
        for (int i = 0; i < d && ok; ++i) {
            // sweep one face at a time so an early open site ends the radius quickly
            for (Coord side : {r, -r}) {
                for (int j = 0; j < d; ++j) {
                    lo[j] = j == i ? side : -(r - 1);
                    hi[j] = j == i ? side : r - 1;
                }
                Box(lo, hi).for_each([&](const Site& v) { ok = ok && is_blocked(v); });
                if (!ok)
                    break;
            }
        }
        if (!ok)
            continue;
        std::vector<Site> region, shell;
        Box::ball(d, r).for_each([&](const Site& v) {
            if (linf_norm(v) < r)
                region.push_back(v);
            else if (in_shell(v, r))
                shell.push_back(v);
        });
        return BarrierResult{{std::move(region), std::move(shell)}, BarrierKind::sphere};
    }

    SiteSet seen{o};
    std::vector<Site> region{o};
    std::deque<Site> queue{o};
    while (!queue.empty()) {
        Site v = queue.front();
        queue.pop_front();
        for (const Site& w : neighbors(v)) {
            if (seen.count(w) || is_blocked(w))
                continue;
            if (!window.contains(w) || window.on_face(w))
                return std::nullopt;
            seen.insert(w);
            region.push_back(w);
            queue.push_back(w);
        }
    }
    std::sort(region.begin(), region.end());
    std::vector<Site> shell = detail::exterior_boundary(region);
    return BarrierResult{{std::move(region), std::move(shell)}, BarrierKind::flood};
}

/// A finite omega_I-cluster C of the origin in Z^k_I together with a set T in the
/// complementary coordinates whose sites v are closed at x (+) v for every x in C.
struct FinitenessCertificate {
    IndexSet I;
    std::vector<Site> cluster; // C, in Z^k_I coordinates, sorted; empty if omega_I(o) = 0
    SurroundCertificate surround;
    BarrierKind kind = BarrierKind::sphere;
};

/// Site of Z^n with pi_I = x and pi_{I^c} = v.
inline Site combine(int n, const IndexSet& I, const Site& x, const IndexSet& Ic, const Site& v)
{
    Site z(n);
    for (int i = 0; i < I.size(); ++i)
        z[I.members()[static_cast<std::size_t>(i)] - 1] = x[i];
    for (int i = 0; i < Ic.size(); ++i)
        z[Ic.members()[static_cast<std::size_t>(i)] - 1] = v[i];
    return z;
}

inline std::optional<FinitenessCertificate> finiteness_certificate_check(const FieldView& view, const IndexSet& I,
                                                                         const Box& window)
{
    const int n = view.n();
    if (window.dim() != n)
        throw invalid_argument("window dimension differs from the field");
    if (I.size() < 1 || I.size() >= n || !I.valid_for(n))
        throw invalid_argument("index set must be a proper nonempty subset of [n]");
    const IndexSet Ic = I.complement(n);
    const Box plane = window.project(I);
    const HyperplaneField& f = view.field();
    const std::size_t rank = f.params().rank_of(I);
    auto open_I = [&](const Site& x) { return f.bit_rank(rank, x.coords().data(), x.dim()); };

    FinitenessCertificate out;
    out.I = I;
    const Site o(I.size());
    if (open_I(o)) {
        SiteSet seen{o};
        std::deque<Site> queue{o};
        while (!queue.empty()) {
            Site x = queue.front();
            queue.pop_front();
            if (plane.on_face(x))
                return std::nullopt;
            out.cluster.push_back(x);
            for (const Site& y : neighbors(x))
                if (!seen.count(y) && open_I(y)) {
                    seen.insert(y);
                    queue.push_back(y);
                }
        }
        std::sort(out.cluster.begin(), out.cluster.end());
    }

    auto blocked = [&](const Site& v) {
        for (const Site& x : out.cluster)
            if (view.omega(combine(n, I, x, Ic, v)))
                return false;
        return true;
    };
    auto barrier = find_surrounding_barrier(window.project(Ic), blocked);
    if (!barrier)
        return std::nullopt;
    out.surround = std::move(barrier->cert);
    out.kind = barrier->kind;
    return out;
}

} // namespace hyperperc

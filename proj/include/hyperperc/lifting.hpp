#pragma once

// Synchronizing height walks through a product graph, and lifting a family of
// planar bottom-to-top crossings (one per plane {1,j}) to a single path in Z^n.

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperperc/cluster.hpp"
#include "hyperperc/field.hpp"
#include "hyperperc/lattice.hpp"

namespace hyperperc {

/// Which walk conditions are enforced. `endpoints` drops 0 <= S(t) < N for t < T and
/// keeps unit steps and S(0) = 0, S(T) = N; used for walks that revisit N early.
enum class WalkCheck { strict, endpoints };

/// S(0..T): unit steps, S(0) = 0, S(T) = N, 0 <= S(t) < N for t < T.
class HeightWalk {
public:
    HeightWalk(std::vector<Coord> values, Coord N, WalkCheck check = WalkCheck::strict)
        : s_(std::move(values)), N_(N)
    {
        if (s_.empty())
            throw invalid_argument("height walk is empty");
        if (N < 0)
            throw invalid_argument("height walk target must be nonnegative");
        if (s_.front() != 0)
            throw invalid_argument("height walk must start at 0");
        if (s_.back() != N)
            throw invalid_argument("height walk must end at N");
        for (std::size_t t = 1; t < s_.size(); ++t) {
            const Coord step = s_[t] - s_[t - 1];
            if (step != 1 && step != -1)
                throw invalid_argument("height walk step at t=" + std::to_string(t) + " is not +-1");
        }
        if (check == WalkCheck::strict)
            for (std::size_t t = 0; t + 1 < s_.size(); ++t)
                if (s_[t] < 0 || s_[t] >= N)
                    throw invalid_argument("height walk leaves [0, N) before its last step");
    }

    std::size_t T() const { return s_.size() - 1; }
    Coord N() const { return N_; }
    Coord operator()(std::size_t t) const { return s_[t]; }
    const std::vector<Coord>& values() const { return s_; }

private:
    std::vector<Coord> s_;
    Coord N_;
};

struct SyncSchedule {
    std::size_t T = 0;
    std::vector<std::vector<std::size_t>> f; // f[i][t]
};

/// Conditions (a)-(c): unit steps in every f_i, equal heights, start at 0, end at N.
inline bool check_schedule(const std::vector<HeightWalk>& walks, const SyncSchedule& s)
{
    if (walks.empty() || s.f.size() != walks.size())
        return false;
    for (std::size_t i = 0; i < walks.size(); ++i) {
        if (s.f[i].size() != s.T + 1)
            return false;
        for (std::size_t t = 0; t <= s.T; ++t) {
            if (s.f[i][t] > walks[i].T())
                return false;
            if (t > 0) {
                const auto a = static_cast<std::int64_t>(s.f[i][t]), b = static_cast<std::int64_t>(s.f[i][t - 1]);
                if (a - b != 1 && a - b != -1)
                    return false;
            }
        }
    }
    for (std::size_t t = 0; t <= s.T; ++t)
        for (std::size_t i = 1; i < walks.size(); ++i)
            if (walks[i](s.f[i][t]) != walks[0](s.f[0][t]))
                return false;
    return walks[0](s.f[0][0]) == 0 && walks[0](s.f[0][s.T]) == walks[0].N();
}

/// A uniformly stepped walk from 0 to N that stays in [0, N) until its last step and
/// has at most t_max steps; rejection sampling, so `rng` must be able to hit one.
template <class Rng>
HeightWalk random_height_walk(Rng& rng, Coord N, std::size_t t_max)
{
    if (N < 0 || static_cast<std::size_t>(N) > t_max)
        throw invalid_argument("no walk reaches N within t_max steps");
    if (N == 0)
        return HeightWalk({0}, 0);
    std::bernoulli_distribution up(0.5);
    while (true) {
        std::vector<Coord> s{0};
        while (s.size() <= t_max) {
            Coord next = s.back() + (up(rng) ? 1 : -1);
            if (next < 0)
                break;
            s.push_back(next);
            if (next == N)
                return HeightWalk(std::move(s), N);
        }
    }
}

using Tuple = std::vector<std::int64_t>;

/// Product graph: vertices are index tuples at which all walks share a height,
/// edges change every index by exactly one.
class SyncGraph {
public:
    explicit SyncGraph(std::vector<HeightWalk> walks) : w_(std::move(walks))
    {
        if (w_.empty())
            throw invalid_argument("need at least one walk");
        if (w_.size() > 20)
            throw invalid_argument("too many walks for the product graph");
        for (const HeightWalk& s : w_)
            if (s.N() != w_.front().N())
                throw invalid_argument("walks disagree on the target height N");
    }

    std::size_t arity() const { return w_.size(); }
    const std::vector<HeightWalk>& walks() const { return w_; }

    Tuple origin() const { return Tuple(w_.size(), 0); }
    Tuple target() const
    {
        Tuple v;
        for (const HeightWalk& s : w_)
            v.push_back(static_cast<std::int64_t>(s.T()));
        return v;
    }

    bool is_vertex(const Tuple& v) const
    {
        if (v.size() != w_.size())
            return false;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] < 0 || v[i] > static_cast<std::int64_t>(w_[i].T()))
                return false;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (w_[i](static_cast<std::size_t>(v[i])) != w_[0](static_cast<std::size_t>(v[0])))
                return false;
        return true;
    }

    /// Neighbours in lexicographic order.
    std::vector<Tuple> neighbors(const Tuple& v) const
    {
        std::vector<Tuple> out;
        const std::size_t m = w_.size();
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
            Tuple u = v;
            for (std::size_t i = 0; i < m; ++i)
                u[i] += ((mask >> (m - 1 - i)) & 1) ? 1 : -1;
            if (is_vertex(u))
                out.push_back(std::move(u));
        }
        return out;
    }

    std::size_t degree(const Tuple& v) const { return neighbors(v).size(); }

    /// Number of index tuples, prod (T_i + 1), saturating at UINT64_MAX.
    std::uint64_t tuple_space() const
    {
        std::uint64_t p = 1;
        for (const HeightWalk& s : w_) {
            const std::uint64_t m = s.T() + 1;
            if (p > UINT64_MAX / m)
                return UINT64_MAX;
            p *= m;
        }
        return p;
    }

    std::uint64_t linear(const Tuple& v) const
    {
        std::uint64_t k = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
            k = k * (w_[i].T() + 1) + static_cast<std::uint64_t>(v[i]);
        return k;
    }

    Tuple unlinear(std::uint64_t k) const
    {
        Tuple v(w_.size());
        for (std::size_t i = w_.size(); i-- > 0;) {
            v[i] = static_cast<std::int64_t>(k % (w_[i].T() + 1));
            k /= w_[i].T() + 1;
        }
        return v;
    }

    /// Visits every vertex: tuples grouped by common height.
    template <class F>
    void for_each_vertex(F&& fn) const
    {
        const std::size_t m = w_.size();
        const Coord N = w_.front().N();
        std::vector<std::vector<std::int64_t>> at(m);
        for (Coord h = 0; h <= N; ++h) {
            bool empty = false;
            for (std::size_t i = 0; i < m; ++i) {
                at[i].clear();
                for (std::size_t t = 0; t <= w_[i].T(); ++t)
                    if (w_[i](t) == h)
                        at[i].push_back(static_cast<std::int64_t>(t));
                empty = empty || at[i].empty();
            }
            if (empty)
                continue;
            std::vector<std::size_t> pos(m, 0);
            Tuple v(m);
            while (true) {
                for (std::size_t i = 0; i < m; ++i)
                    v[i] = at[i][pos[i]];
                fn(static_cast<const Tuple&>(v));
                std::size_t i = m;
                while (i-- > 0) {
                    if (++pos[i] < at[i].size())
                        break;
                    pos[i] = 0;
                }
                if (i == static_cast<std::size_t>(-1))
                    break;
            }
        }
    }

private:
    std::vector<HeightWalk> w_;
};

inline SyncGraph build_sync_graph(std::vector<HeightWalk> walks) { return SyncGraph(std::move(walks)); }

struct ParityReport {
    bool ok = true;
    std::size_t vertices = 0;
    std::size_t edges = 0;
    std::vector<Tuple> offenders;
};

/// Every vertex has even degree except the origin and the target, which have degree 1
/// (when N = 0 they coincide and the single vertex is isolated).
inline ParityReport degree_parity_audit(const SyncGraph& G)
{
    ParityReport r;
    const Tuple o = G.origin(), vs = G.target();
    std::size_t degree_sum = 0;
    G.for_each_vertex([&](const Tuple& v) {
        ++r.vertices;
        const std::size_t d = G.degree(v);
        degree_sum += d;
        bool good;
        if (o == vs && v == o)
            good = d == 0;
        else if (v == o || v == vs)
            good = d == 1;
        else
            good = d % 2 == 0;
        if (!good) {
            r.ok = false;
            r.offenders.push_back(v);
        }
    });
    r.edges = degree_sum / 2;
    return r;
}

/// Breadth-first search from the origin to the target with lexicographic tie-breaking.
/// A shortest schedule is returned; a missing path throws falsified_error.
inline SyncSchedule sync_walks(const std::vector<HeightWalk>& walks)
{
    SyncGraph G(walks);
    const std::uint64_t space = G.tuple_space();
    if (space == UINT64_MAX)
        throw invalid_argument("walk lengths too large to index");
    constexpr std::uint64_t kDenseLimit = 10'000'000;
    constexpr std::uint64_t kUnseen = UINT64_MAX;

    std::vector<std::uint64_t> dense;
    std::unordered_map<std::uint64_t, std::uint64_t> sparse;
    const bool use_dense = space <= kDenseLimit;
    if (use_dense)
        dense.assign(space, kUnseen);
    auto parent_of = [&](std::uint64_t k) -> std::uint64_t {
        if (use_dense)
            return dense[k];
        auto it = sparse.find(k);
        return it == sparse.end() ? kUnseen : it->second;
    };
    auto set_parent = [&](std::uint64_t k, std::uint64_t p) {
        if (use_dense)
            dense[k] = p;
        else
            sparse[k] = p;
    };

    const std::uint64_t start = G.linear(G.origin()), goal = G.linear(G.target());
    set_parent(start, start);
    std::deque<std::uint64_t> queue{start};
    bool found = start == goal;
    while (!queue.empty() && !found) {
        const std::uint64_t k = queue.front();
        queue.pop_front();
        for (const Tuple& u : G.neighbors(G.unlinear(k))) {
            const std::uint64_t ku = G.linear(u);
            if (parent_of(ku) != kUnseen)
                continue;
            set_parent(ku, k);
            if (ku == goal) {
                found = true;
                break;
            }
            queue.push_back(ku);
        }
    }
    if (!found)
        throw falsified_error("no path from the origin to the target in the synchronization graph");

    std::vector<std::uint64_t> chain{goal};
    while (chain.back() != start)
        chain.push_back(parent_of(chain.back()));
    SyncSchedule s;
    s.T = chain.size() - 1;
    s.f.assign(walks.size(), std::vector<std::size_t>(s.T + 1));
    for (std::size_t t = 0; t <= s.T; ++t) {
        const Tuple v = G.unlinear(chain[s.T - t]);
        for (std::size_t i = 0; i < walks.size(); ++i)
            s.f[i][t] = static_cast<std::size_t>(v[i]);
    }
    return s;
}

/// A planar path in Z^2_{1,j}; points are (height, j-coordinate). Heights run from
/// base to base + N, staying in [base, base + N) until the last point.
struct ProjectedCrossing {
    int j = 2;
    std::vector<Point2> path;

    Coord base() const { return path.front().first; }
    Coord N() const { return path.back().first - path.front().first; }

    void validate() const
    {
        if (path.empty())
            throw invalid_argument("crossing is empty");
        if (j < 2)
            throw invalid_argument("crossing plane index must be >= 2");
        for (std::size_t s = 1; s < path.size(); ++s) {
            const Coord d = std::abs(path[s].first - path[s - 1].first) + std::abs(path[s].second - path[s - 1].second);
            if (d != 1)
                throw invalid_argument("crossing has a non-unit step at position " + std::to_string(s));
        }
        const Coord b = base(), top = path.back().first;
        if (top < b)
            throw invalid_argument("crossing never reaches its top height");
        for (std::size_t s = 0; s + 1 < path.size(); ++s)
            if (path[s].first < b || path[s].first >= top)
                throw invalid_argument("crossing leaves [base, base + N) before its last point");
    }
};

struct ExtractedWalk {
    HeightWalk walk;
    std::vector<std::size_t> tau; // tau[t] = position in the crossing of the t-th height change
};

/// S = height o gamma o tau, where tau lists the positions right after each height change.
inline ExtractedWalk extract_height_walk(const ProjectedCrossing& c)
{
    c.validate();
    std::vector<std::size_t> tau{0};
    std::vector<Coord> s{0};
    for (std::size_t i = 1; i < c.path.size(); ++i)
        if (c.path[i].first != c.path[i - 1].first) {
            tau.push_back(i);
            s.push_back(c.path[i].first - c.base());
        }
    if (tau.back() != c.path.size() - 1)
        throw invalid_argument("crossing ends with a horizontal move after reaching N");
    return {HeightWalk(std::move(s), c.N()), std::move(tau)};
}

/// Order of the unit moves that connect lambda(t-1) to lambda(t).
/// corrected: coordinates whose walk index advances move at the old height, then the
/// height step, then coordinates whose walk index retreats move at the new height.
/// as_printed: the height step is taken as the last move, every coordinate moving at
/// the old height. The second order is kept to exhibit where it produces closed sites.
enum class StitchOrder { corrected, as_printed };

/// Lifts one crossing per plane {1,j}, j = 2..n, to a nearest-neighbour path in B.
/// Every site of the result projects onto a site of the corresponding crossing or onto
/// a site swept by its horizontal runs. The first coordinate is the height.
inline std::vector<Site> lift_crossings(const std::vector<ProjectedCrossing>& crossings, const Box& B,
                                        StitchOrder order = StitchOrder::corrected)
{
    const int n = B.dim();
    if (static_cast<int>(crossings.size()) != n - 1)
        throw invalid_argument("need one crossing per plane {1,j}, j = 2..n");
    std::vector<ExtractedWalk> ex;
    std::vector<HeightWalk> walks;
    for (int idx = 0; idx < n - 1; ++idx) {
        const ProjectedCrossing& c = crossings[static_cast<std::size_t>(idx)];
        if (c.j != idx + 2)
            throw invalid_argument("crossings must be ordered by plane index j = 2..n");
        ex.push_back(extract_height_walk(c));
        walks.push_back(ex.back().walk);
        if (c.base() != crossings.front().base() || c.N() != crossings.front().N())
            throw invalid_argument("crossings disagree on base height or N");
        const Rectangle2D r(B.lo()[0], B.hi()[0], B.lo()[c.j - 1], B.hi()[c.j - 1], Axis::first);
        for (auto [h, x] : c.path)
            if (!r.contains(h, x))
                throw invalid_argument("crossing leaves the projection of the box");
    }
    const SyncSchedule sched = sync_walks(walks);
    const Coord base = crossings.front().base();

    auto lambda = [&](std::size_t t) {
        Site v(n);
        const std::size_t f0 = sched.f[0][t];
        v[0] = base + walks[0](f0);
        for (int idx = 0; idx < n - 1; ++idx) {
            const ExtractedWalk& e = ex[static_cast<std::size_t>(idx)];
            const std::size_t pos = e.tau[sched.f[static_cast<std::size_t>(idx)][t]];
            v[idx + 1] = crossings[static_cast<std::size_t>(idx)].path[pos].second;
        }
        return v;
    };

    std::vector<Site> path{lambda(0)};
    auto slide = [&](int coord, Coord to) {
        Site cur = path.back();
        while (cur[coord] != to) {
            cur[coord] += cur[coord] < to ? 1 : -1;
            path.push_back(cur);
        }
    };
    for (std::size_t t = 1; t <= sched.T; ++t) {
        const Site next = lambda(t);
        std::vector<int> fwd, bwd;
        for (int idx = 0; idx < n - 1; ++idx) {
            const auto& f = sched.f[static_cast<std::size_t>(idx)];
            (f[t] > f[t - 1] ? fwd : bwd).push_back(idx + 1);
        }
        if (order == StitchOrder::as_printed) {
            for (int c = n - 1; c >= 1; --c)
                slide(c, next[c]);
            slide(0, next[0]);
        } else {
            for (int c : fwd)
                slide(c, next[c]);
            slide(0, next[0]);
            for (int c : bwd)
                slide(c, next[c]);
        }
    }
    return path;
}

/// Independent check of a lifted path: unit steps, inside B, every site open in every
/// plane {1,j}, starts at the base height and ends at base + N.
template <class OpenJ>
bool audit_lifted_path(const std::vector<Site>& path, const Box& B, Coord base, Coord N, OpenJ&& open_j)
{
    if (path.empty())
        return false;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (!B.contains(path[i]))
            return false;
        if (i > 0 && l1_norm(path[i] - path[i - 1]) != 1)
            return false;
        for (int j = 2; j <= B.dim(); ++j)
            if (!open_j(j, path[i][0], path[i][j - 1]))
                return false;
    }
    return path.front()[0] == base && path.back()[0] == base + N;
}

struct FactorizationReport {
    std::uint64_t configurations = 0;
    std::uint64_t lhs_true = 0;                    // xi crosses B bottom to top
    std::uint64_t rhs_true = 0;                    // every projection crosses
    std::vector<std::uint64_t> projection_true;    // per plane j = 2..n
    std::uint64_t lifts_audited = 0;
    std::vector<std::string> counterexamples;

    bool ok() const { return counterexamples.empty(); }
};

namespace detail {

/// Evaluates both sides of the event identity on one configuration of planar bits.
/// `open_j(j, h, x)` gives omega_{1j}(h, x).
template <class OpenJ>
void factorization_case(const Box& B, OpenJ&& open_j, FactorizationReport& rep, const std::string& label)
{
    const int n = B.dim();
    if (rep.projection_true.size() != static_cast<std::size_t>(n - 1))
        rep.projection_true.assign(static_cast<std::size_t>(n - 1), 0);
    ++rep.configurations;

    auto xi_open = [&](const Site& v) {
        for (int j = 2; j <= n; ++j)
            if (!open_j(j, v[0], v[j - 1]))
                return false;
        return true;
    };
    bool lhs = false;
    {
        SiteSet seen;
        std::deque<Site> queue;
        Site lo = B.lo(), hi = B.hi();
        hi[0] = lo[0];
        Box(lo, hi).for_each([&](const Site& v) {
            if (xi_open(v)) {
                seen.insert(v);
                queue.push_back(v);
            }
        });
        while (!queue.empty() && !lhs) {
            Site v = queue.front();
            queue.pop_front();
            if (v[0] == B.hi()[0]) {
                lhs = true;
                break;
            }
            for (const Site& w : neighbors(v))
                if (B.contains(w) && !seen.count(w) && xi_open(w)) {
                    seen.insert(w);
                    queue.push_back(w);
                }
        }
    }

    bool rhs = true;
    std::vector<ProjectedCrossing> crossings;
    for (int j = 2; j <= n; ++j) {
        const Rectangle2D r(B.lo()[0], B.hi()[0], B.lo()[j - 1], B.hi()[j - 1], Axis::first);
        auto p = crossing_path(r, [&](Coord h, Coord x) { return open_j(j, h, x); }, Axis::first);
        if (p) {
            ++rep.projection_true[static_cast<std::size_t>(j - 2)];
            crossings.push_back({j, std::move(*p)});
        } else {
            rhs = false;
        }
    }
    rep.lhs_true += lhs;
    rep.rhs_true += rhs;
    if (lhs != rhs) {
        rep.counterexamples.push_back(label + ": xi crossing " + (lhs ? "present" : "absent") +
                                      ", projected crossings " + (rhs ? "all present" : "not all present"));
        return;
    }
    if (rhs) {
        const std::vector<Site> path = lift_crossings(crossings, B);
        ++rep.lifts_audited;
        if (!audit_lifted_path(path, B, B.lo()[0], B.hi()[0] - B.lo()[0], open_j))
            rep.counterexamples.push_back(label + ": lifted path failed the sitewise audit");
    }
}

} // namespace detail

/// Every configuration of the planar bits on the projections of
/// B = [0,h-1] x [0,w_2-1] x ... x [0,w_n-1].
inline FactorizationReport bt_factorization_exhaustive(Coord h, const std::vector<Coord>& widths,
                                                       FactorizationReport rep = {})
{
    const int n = static_cast<int>(widths.size()) + 1;
    if (n < 2 || h < 1)
        throw invalid_argument("box needs a positive height and at least one horizontal side");
    std::vector<std::size_t> offset{0};
    for (Coord w : widths) {
        if (w < 1)
            throw invalid_argument("box sides must be positive");
        offset.push_back(offset.back() + static_cast<std::size_t>(h * w));
    }
    const std::size_t bits = offset.back();
    if (bits > 24)
        throw invalid_argument("too many projected sites for an exhaustive sweep");
    Site lo(n), hi(n);
    hi[0] = h - 1;
    for (int j = 2; j <= n; ++j)
        hi[j - 1] = widths[static_cast<std::size_t>(j - 2)] - 1;
    const Box B(lo, hi);
    for (std::uint64_t cfg = 0; cfg < (std::uint64_t{1} << bits); ++cfg) {
        auto open_j = [&](int j, Coord y, Coord x) {
            const std::size_t b =
                offset[static_cast<std::size_t>(j - 2)] + static_cast<std::size_t>(y * widths[static_cast<std::size_t>(j - 2)] + x);
            return ((cfg >> b) & 1) != 0;
        };
        std::string label = "box h=" + std::to_string(h);
        for (Coord w : widths)
            label += " w=" + std::to_string(w);
        label += " config=" + std::to_string(cfg);
        detail::factorization_case(B, open_j, rep, label);
    }
    return rep;
}

/// All n = 3 box shapes whose two projections hold at most `max_sites` sites in total.
inline FactorizationReport bt_factorization_exhaustive_all(std::size_t max_sites = 12)
{
    FactorizationReport rep;
    const Coord cap = static_cast<Coord>(max_sites);
    for (Coord h = 1; h <= cap / 2; ++h)
        for (Coord w2 = 1; h * (w2 + 1) <= cap; ++w2)
            for (Coord w3 = 1; h * (w2 + w3) <= cap; ++w3)
                rep = bt_factorization_exhaustive(h, {w2, w3}, std::move(rep));
    return rep;
}

/// Random configurations drawn from independent fields with the given parameters.
inline FactorizationReport bt_factorization_check(const Box& B, const ParamVector& params, std::uint64_t trials,
                                                  std::uint64_t seed)
{
    if (params.k() != 2 || params.n() != B.dim())
        throw invalid_argument("factorization check needs k = 2 and a box in Z^n");
    FactorizationReport rep;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const HyperplaneField f(params, derive_seed(seed, t));
        auto open_j = [&](int j, Coord h, Coord x) { return f.bit(IndexSet{1, j}, Site{h, x}); };
        detail::factorization_case(B, open_j, rep, "trial " + std::to_string(t));
    }
    return rep;
}

} // namespace hyperperc

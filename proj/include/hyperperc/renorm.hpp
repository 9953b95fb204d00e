#pragma once

// Renormalized lattice for k = 2: good boxes, the spiral of box corners, the
// nu process, the jagged wall and per-sample diagnostics of the wall events.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperperc/cluster.hpp"
#include "hyperperc/field.hpp"
#include "hyperperc/lattice.hpp"
#include "hyperperc/parallel.hpp"
#include "hyperperc/stats.hpp"

namespace hyperperc {

/// r_t = 2 + (t mod (n-1)), the direction of the t-th spiral step.
inline int spiral_direction(std::int64_t t, int n)
{
    if (n < 2)
        throw invalid_argument("spiral needs n >= 2");
    if (t < 0)
        throw invalid_argument("spiral index must be nonnegative");
    return 2 + static_cast<int>(t % (n - 1));
}

/// p_0 = o, p_t = p_{t-1} + N e_{r_t}.
inline Site spiral_point(std::int64_t t, Coord N, int n)
{
    if (t < 0)
        throw invalid_argument("spiral index must be nonnegative");
    if (N < 1)
        throw invalid_argument("box side must be positive");
    Site p(n);
    const std::int64_t m = n - 1;
    for (int j = 2; j <= n; ++j) {
        // steps s in [1, t] with s = j - 2 (mod n - 1)
        const std::int64_t r = j - 2;
        const std::int64_t steps = t < r ? 0 : (t - r) / m + (r == 0 ? 0 : 1);
        p[j - 1] = detail::checked_mul(N, steps);
    }
    return p;
}

/// The two rectangles of Z^2_{1j} whose crossings make B(y;N) good: the first
/// coordinate is the height. `vertical` is the projection of B(y;N) u B(y+Ne_1;N),
/// `horizontal` the projection of B(y;N) u B(y+Ne_j;N).
struct GoodBoxRects {
    Rectangle2D vertical;
    Rectangle2D horizontal;
};

inline GoodBoxRects good_box_rectangles(const Site& y, Coord N, int j)
{
    if (j < 2 || j > y.dim())
        throw invalid_argument("direction j must lie in [2, n]");
    if (N < 1)
        throw invalid_argument("box side must be positive");
    const Coord h = y[0], w = y[j - 1];
    return {Rectangle2D(h, h + 2 * N - 1, w, w + N - 1, Axis::first),
            Rectangle2D(h, h + N - 1, w, w + 2 * N - 1, Axis::first)};
}

/// B_j(y;N): projection to Z^2_{1j} of the three boxes at y, y + N e_1, y + N e_j.
inline std::vector<Point2> projected_tromino(const Site& y, Coord N, int j)
{
    const GoodBoxRects r = good_box_rectangles(y, N, j);
    std::vector<Point2> out;
    for (Coord a = r.vertical.a; a <= r.vertical.b; ++a)
        for (Coord b = r.horizontal.c; b <= r.horizontal.d; ++b)
            if (r.vertical.contains(a, b) || r.horizontal.contains(a, b))
                out.emplace_back(a, b);
    return out;
}

namespace detail {

inline std::size_t plane_rank(const HyperplaneField& f, int j) { return f.params().rank_of(IndexSet{1, j}); }

inline void require_k2(const HyperplaneField& f)
{
    if (f.k() != 2)
        throw invalid_argument("the renormalized lattice needs k = 2");
}

} // namespace detail

/// omega_{1j}(a, b) for every j = 2..n; the field xi at a site.
inline bool xi_open(const HyperplaneField& f, const Site& v)
{
    for (int j = 2; j <= v.dim(); ++j) {
        const Coord u[2] = {v[0], v[j - 1]};
        if (!f.bit_rank(detail::plane_rank(f, j), u, 2))
            return false;
    }
    return true;
}

inline bool is_good_box(const FieldView& view, const Site& y, Coord N)
{
    const HyperplaneField& f = view.field();
    detail::require_k2(f);
    if (y.dim() != f.n())
        throw invalid_argument("box corner dimension differs from the field");
    for (int j = 2; j <= f.n(); ++j) {
        const std::size_t rank = detail::plane_rank(f, j);
        auto open = [&](Coord a, Coord b) {
            const Coord u[2] = {a, b};
            return f.bit_rank(rank, u, 2);
        };
        const GoodBoxRects r = good_box_rectangles(y, N, j);
        if (!crossing_bt(r.vertical, open) || !crossing_lr(r.horizontal, open))
            return false;
    }
    return true;
}

/// Corner of the box indexed by (t, x) on the wall: p_t + N x e_1.
inline Site wall_corner(std::int64_t t, Coord x, Coord N, int n)
{
    Site y = spiral_point(t, N, n);
    y[0] = detail::checked_add(y[0], detail::checked_mul(N, x));
    return y;
}

inline bool nu(const FieldView& view, std::int64_t t, Coord x, Coord N)
{
    return is_good_box(view, wall_corner(t, x, N, view.n()), N);
}

struct IndependenceViolation {
    std::int64_t t, s;
    Coord x, y;
    int j;
};

struct IndependenceReport {
    std::uint64_t pairs_checked = 0;    // pairs required to have disjoint supports
    std::uint64_t near_overlapping = 0; // other distinct pairs whose supports meet
    std::vector<IndependenceViolation> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

/// Do the trominoes with corners (h1, w1) and (h2, w2) in the same plane meet?
inline bool trominoes_meet(Coord h1, Coord w1, Coord h2, Coord w2, Coord N)
{
    static constexpr int kCells[3][2] = {{0, 0}, {1, 0}, {0, 1}};
    for (const auto& c1 : kCells)
        for (const auto& c2 : kCells) {
            const Coord dh = (h1 + c1[0] * N) - (h2 + c2[0] * N);
            const Coord dw = (w1 + c1[1] * N) - (w2 + c2[1] * N);
            if (dh > -N && dh < N && dw > -N && dw < N)
                return true;
        }
    return false;
}

} // namespace detail

/// For all t, s in [0, tmax] and x, y in [0, xmax], checks that nu(t, x) and nu(s, y)
/// read disjoint sets of plane sites whenever |t - s| >= 2(n - 1) or |x - y| >= 2.
inline IndependenceReport independence_radius_audit(int n, Coord N, std::int64_t tmax, Coord xmax)
{
    if (n < 3 || N < 1 || tmax < 0 || xmax < 0)
        throw invalid_argument("audit needs n >= 3, N >= 1 and a nonnegative horizon");
    std::vector<Site> p;
    for (std::int64_t t = 0; t <= tmax; ++t)
        p.push_back(spiral_point(t, N, n));
    IndependenceReport rep;
    for (std::int64_t t = 0; t <= tmax; ++t)
        for (std::int64_t s = 0; s <= tmax; ++s)
            for (Coord x = 0; x <= xmax; ++x)
                for (Coord y = 0; y <= xmax; ++y) {
                    const bool far = std::abs(t - s) >= 2 * (n - 1) || std::abs(x - y) >= 2;
                    if (!far && t == s && x == y)
                        continue;
                    bool meet = false;
                    for (int j = 2; j <= n; ++j) {
                        const Coord ht = p[static_cast<std::size_t>(t)][0] + N * x;
                        const Coord hs = p[static_cast<std::size_t>(s)][0] + N * y;
                        if (!detail::trominoes_meet(ht, p[static_cast<std::size_t>(t)][j - 1], hs,
                                                    p[static_cast<std::size_t>(s)][j - 1], N))
                            continue;
                        meet = true;
                        if (far)
                            rep.violations.push_back({t, s, x, y, j});
                    }
                    if (far)
                        ++rep.pairs_checked;
                    else if (meet)
                        ++rep.near_overlapping;
                }
    return rep;
}

/// T = floor(c_o log K), the last spiral index of the wall.
inline std::int64_t wall_height(Coord K, double c_o)
{
    if (K < 2)
        throw invalid_argument("wall needs K >= 2");
    if (!(c_o > 0.0))
        throw invalid_argument("wall constant c_o must be positive");
    return static_cast<std::int64_t>(std::floor(c_o * std::log(static_cast<double>(K))));
}

/// Corners p_t + N x e_1 for 0 <= t <= T, 0 <= x <= K, ordered by t then x.
inline std::vector<Site> zigzag_corners(int n, Coord K, Coord N, double c_o)
{
    const std::int64_t T = wall_height(K, c_o);
    std::vector<Site> out;
    for (std::int64_t t = 0; t <= T; ++t)
        for (Coord x = 0; x <= K; ++x)
            out.push_back(wall_corner(t, x, N, n));
    return out;
}

/// The union of the wall boxes, sorted.
inline std::vector<Site> zigzag_region(int n, Coord K, Coord N, double c_o)
{
    SiteSet seen;
    std::vector<Site> out;
    for (const Site& y : zigzag_corners(n, K, N, c_o))
        Box::corner(y, N).for_each([&](const Site& v) {
            if (seen.insert(v).second)
                out.push_back(v);
        });
    std::sort(out.begin(), out.end());
    return out;
}

/// An omega_{1j}-open nearest-neighbour path inside the union of a chain of good boxes,
/// from a site of the first box to a site of the last. Consecutive corners must differ
/// by +-N e_j. Breadth-first over xi-open sites of the union.
inline std::vector<Site> good_path_to_open_path(const FieldView& view, const std::vector<Site>& corners, Coord N)
{
    const HyperplaneField& f = view.field();
    detail::require_k2(f);
    if (corners.empty())
        throw invalid_argument("box path is empty");
    const int n = f.n();
    std::vector<Box> boxes;
    for (std::size_t i = 0; i < corners.size(); ++i) {
        if (corners[i].dim() != n)
            throw invalid_argument("box corner dimension differs from the field");
        if (i > 0) {
            const Site d = corners[i] - corners[i - 1];
            if (l1_norm(d) != N || linf_norm(d) != N)
                throw invalid_argument("consecutive boxes must differ by N e_j");
        }
        if (!is_good_box(view, corners[i], N))
            throw invalid_argument("box at " + corners[i].to_string() + " is not good");
        boxes.push_back(Box::corner(corners[i], N));
    }
    auto in_union = [&](const Site& v) {
        return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(v); });
    };

    std::unordered_map<Site, Site, SiteHash> parent;
    std::deque<Site> queue;
    boxes.front().for_each([&](const Site& v) {
        if (xi_open(f, v)) {
            parent.emplace(v, v);
            queue.push_back(v);
        }
    });
    while (!queue.empty()) {
        Site v = queue.front();
        queue.pop_front();
        if (boxes.back().contains(v)) {
            std::vector<Site> path{v};
            while (!(parent.at(path.back()) == path.back()))
                path.push_back(parent.at(path.back()));
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (const Site& w : neighbors(v))
            if (!parent.count(w) && in_union(w) && xi_open(f, w)) {
                parent.emplace(w, v);
                queue.push_back(w);
            }
    }
    throw falsified_error("no xi-open path through a chain of " + std::to_string(corners.size()) +
                          " good boxes starting at " + corners.front().to_string());
}

struct EventRecord {
    std::string name;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    Interval ci;
};

struct Theorem3Options {
    Coord K = 8;
    Coord N = 4;
    double c_o = 3.0;
    Coord M = 0; // window radius for the barrier search and the truncated event; 0 means 4NK
    std::uint64_t trials = 100;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct Theorem3Report {
    Coord K = 0, N = 0, M = 0, L = 0;
    double c_o = 0;
    std::int64_t T = 0;
    std::vector<EventRecord> events;
    // O1 n O2 n O3 should force o <-> dB(NK); violations are split by the origin's state.
    std::uint64_t o123 = 0, o123_violations = 0, o123_violations_closed_origin = 0;
    // O4 n O5 should confine the origin cluster to [-1, L-1]^2 x A.
    std::uint64_t o45 = 0, o45_violations = 0;

    const EventRecord& event(const std::string& name) const
    {
        for (const EventRecord& e : events)
            if (e.name == name)
                return e;
        throw invalid_argument("unknown event " + name);
    }
};

struct Theorem3Sample {
    bool o[5] = {false, false, false, false, false};
    bool connect = false, truncated = false, origin_open = false, confined = true;
};

namespace detail {

inline Theorem3Sample theorem3_sample(const HyperplaneField& f, const Theorem3Options& opt, std::int64_t T, Coord L,
                                      const std::vector<Site>& spiral)
{
    const int n = f.n();
    const FieldView full = FieldView::full(f);
    const Coord N = opt.N, K = opt.K;
    Theorem3Sample s;

    // O1: bottom-to-top crossing of nu in [0, T] x [0, K], x being the height
    std::vector<char> grid(static_cast<std::size_t>((T + 1) * (K + 1)));
    for (std::int64_t t = 0; t <= T; ++t)
        for (Coord x = 0; x <= K; ++x) {
            Site y = spiral[static_cast<std::size_t>(t)];
            y[0] += N * x;
            grid[static_cast<std::size_t>(t * (K + 1) + x)] = is_good_box(full, y, N);
        }
    s.o[0] = crossing_bt(Rectangle2D(0, T, 0, K, Axis::second),
                         [&](Coord t, Coord x) { return grid[static_cast<std::size_t>(t * (K + 1) + x)] != 0; });

    // O2: planes avoiding coordinate 1 are open on the projections of every wall box
    s.o[1] = true;
    for (const IndexSet& I : f.params().index_sets()) {
        if (I.contains(1) || !s.o[1])
            continue;
        const std::size_t rank = f.params().rank_of(I);
        for (std::int64_t t = 0; t <= T && s.o[1]; ++t)
            Box::corner(spiral[static_cast<std::size_t>(t)], N).project(I).for_each([&](const Site& u) {
                s.o[1] = s.o[1] && f.bit_rank(rank, u.coords().data(), 2);
            });
    }

    // O3: omega_{1j}(-1, c) = 1 below the wall
    s.o[2] = true;
    for (int j = 2; j <= n && s.o[2]; ++j) {
        const std::size_t rank = plane_rank(f, j);
        for (std::int64_t t = 0; t <= T && s.o[2]; ++t) {
            const Coord c0 = spiral[static_cast<std::size_t>(t)][j - 1];
            for (Coord c = c0; c < c0 + N && s.o[2]; ++c) {
                const Coord u[2] = {-1, c};
                s.o[2] = f.bit_rank(rank, u, 2);
            }
        }
    }

    // O4: the square circuit d([-2, L]^2) of Z^2_{23} is closed
    const IndexSet I23{2, 3};
    const std::size_t r23 = f.params().rank_of(I23);
    s.o[3] = true;
    for (Coord a = -2; a <= L && s.o[3]; ++a)
        for (Coord b = -2; b <= L && s.o[3]; ++b) {
            if (a != -2 && a != L && b != -2 && b != L)
                continue;
            const Coord u[2] = {a, b};
            s.o[3] = !f.bit_rank(r23, u, 2);
        }

    // O5: a barrier of Z^{n-2} on the other coordinates, at l1 distance >= 3NK, whose
    // sites are closed above every x of [-1, L-1]^2
    const IndexSet Ic = I23.complement(n);
    const Coord far = 3 * N * K;
    auto blocked = [&](const Site& v) {
        if (l1_norm(v) < far)
            return false;
        for (Coord a = -1; a <= L - 1; ++a)
            for (Coord b = -1; b <= L - 1; ++b)
                if (full.omega(combine(n, I23, Site{a, b}, Ic, v)))
                    return false;
        return true;
    };
    const auto barrier = find_surrounding_barrier(Box::ball(n - 2, opt.M), blocked);
    s.o[4] = barrier.has_value();

    const ProbeResult probe = probe_origin(full, opt.M);
    s.origin_open = probe.origin_open;
    s.connect = probe.max_radius >= N * K;
    s.truncated = s.connect && !probe.reached;

    if (s.o[3] && s.o[4] && s.origin_open) {
        SiteSet region;
        for (const Site& a : barrier->cert.region)
            region.insert(a);
        auto inside = [&](const Site& v) {
            for (int i = 1; i <= 2; ++i)
                if (v[i] < -1 || v[i] > L - 1)
                    return false;
            return region.count(project(v, Ic)) > 0;
        };
        const Site o(n);
        SiteSet seen{o};
        std::deque<Site> queue{o};
        while (!queue.empty() && s.confined) {
            Site v = queue.front();
            queue.pop_front();
            if (!inside(v)) {
                s.confined = false;
                break;
            }
            for (const Site& w : neighbors(v))
                if (!seen.count(w) && full.omega(w)) {
                    seen.insert(w);
                    queue.push_back(w);
                }
        }
    }
    return s;
}

} // namespace detail

/// Monte Carlo frequencies of the wall events O1..O5, their conjunctions, the events
/// [o <-> dB(NK)] and [o <-> dB(NK), o -/-> dB(M)], and per-sample implication audits.
inline Theorem3Report theorem3_event_diagnostics(const ParamVector& params, Theorem3Options opt)
{
    if (params.k() != 2)
        throw invalid_argument("wall diagnostics need k = 2");
    if (params.n() < 3)
        throw invalid_argument("wall diagnostics need n >= 3");
    if (opt.N < 1 || opt.trials < 1)
        throw invalid_argument("need N >= 1 and at least one trial");
    const int n = params.n();
    const std::int64_t T = wall_height(opt.K, opt.c_o);
    const Coord L = static_cast<Coord>(std::floor(4.0 * static_cast<double>(opt.N) * opt.c_o *
                                                  std::floor(std::log(static_cast<double>(opt.K))))) +
                    1;
    if (opt.M == 0)
        opt.M = 4 * opt.N * opt.K;
    if (opt.M <= 3 * opt.N * opt.K)
        throw invalid_argument("window radius M must exceed 3NK");
    std::vector<Site> spiral;
    for (std::int64_t t = 0; t <= T; ++t)
        spiral.push_back(spiral_point(t, opt.N, n));

    const auto samples = parallel_map<Theorem3Sample>(opt.trials, opt.workers, [&](std::uint64_t i) {
        const HyperplaneField f(params, derive_seed(opt.seed, i));
        return detail::theorem3_sample(f, opt, T, L, spiral);
    });

    Theorem3Report rep;
    rep.K = opt.K;
    rep.N = opt.N;
    rep.M = opt.M;
    rep.L = L;
    rep.c_o = opt.c_o;
    rep.T = T;
    auto add = [&](const std::string& name, auto&& pred) {
        EventRecord e{name, opt.trials, 0, {}};
        for (const Theorem3Sample& s : samples)
            e.successes += pred(s) ? 1 : 0;
        e.ci = wilson_interval(e.successes, e.trials);
        rep.events.push_back(e);
    };
    for (int i = 0; i < 5; ++i)
        add("O" + std::to_string(i + 1), [i](const Theorem3Sample& s) { return s.o[i]; });
    add("O1&O2&O3", [](const Theorem3Sample& s) { return s.o[0] && s.o[1] && s.o[2]; });
    add("O4&O5", [](const Theorem3Sample& s) { return s.o[3] && s.o[4]; });
    add("O1&O2&O3&O4&O5", [](const Theorem3Sample& s) { return s.o[0] && s.o[1] && s.o[2] && s.o[3] && s.o[4]; });
    add("connect_NK", [](const Theorem3Sample& s) { return s.connect; });
    add("connect_NK_not_M", [](const Theorem3Sample& s) { return s.truncated; });

    for (const Theorem3Sample& s : samples) {
        if (s.o[0] && s.o[1] && s.o[2]) {
            ++rep.o123;
            if (!s.connect) {
                ++rep.o123_violations;
                rep.o123_violations_closed_origin += !s.origin_open;
            }
        }
        if (s.o[3] && s.o[4]) {
            ++rep.o45;
            rep.o45_violations += !s.confined;
        }
    }
    return rep;
}

struct Calibration {
    Coord N = 1;
    bool reached = false;
    std::vector<std::pair<Coord, double>> history; // (N, good-box frequency)
};

/// Doubles N from 1 until the frequency of a good box at the origin reaches `target`.
inline Calibration calibrate_box_size(const ParamVector& params, double target, std::uint64_t trials,
                                      std::uint64_t seed, unsigned workers = 1, Coord N_max = 64)
{
    if (params.k() != 2)
        throw invalid_argument("good boxes need k = 2");
    if (trials < 1)
        throw invalid_argument("need at least one trial");
    Calibration cal;
    const Site o(params.n());
    for (Coord N = 1; N <= N_max; N *= 2) {
        const auto good = parallel_map<char>(trials, workers, [&](std::uint64_t i) {
            const HyperplaneField f(params, derive_seed(derive_seed(seed, static_cast<std::uint64_t>(N)), i));
            return static_cast<char>(is_good_box(FieldView::full(f), o, N));
        });
        std::uint64_t hits = 0;
        for (char g : good)
            hits += static_cast<std::uint64_t>(g);
        const double freq = static_cast<double>(hits) / static_cast<double>(trials);
        cal.history.emplace_back(N, freq);
        cal.N = N;
        if (freq >= target) {
            cal.reached = true;
            break;
        }
    }
    return cal;
}

} // namespace hyperperc

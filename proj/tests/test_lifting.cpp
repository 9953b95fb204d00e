#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "hyperperc/lifting.hpp"

using namespace hyperperc;

namespace {

using Walks = std::vector<HeightWalk>;

// Degree of every product-graph vertex by scanning all index tuples and all sign patterns.
std::map<Tuple, std::size_t> brute_degrees(const Walks& w)
{
    std::map<Tuple, std::size_t> deg;
    const std::size_t m = w.size();
    auto height_match = [&](const Tuple& v) {
        for (std::size_t i = 0; i < m; ++i)
            if (v[i] < 0 || v[i] > static_cast<std::int64_t>(w[i].T()))
                return false;
        for (std::size_t i = 1; i < m; ++i)
            if (w[i](static_cast<std::size_t>(v[i])) != w[0](static_cast<std::size_t>(v[0])))
                return false;
        return true;
    };
    Tuple v(m, 0);
    while (true) {
        if (height_match(v)) {
            std::size_t d = 0;
            for (std::uint64_t s = 0; s < (1u << m); ++s) {
                Tuple u = v;
                for (std::size_t i = 0; i < m; ++i)
                    u[i] += (s >> i) & 1 ? 1 : -1;
                d += height_match(u);
            }
            deg[v] = d;
        }
        std::size_t i = 0;
        while (i < m && v[i] == static_cast<std::int64_t>(w[i].T()))
            v[i++] = 0;
        if (i == m)
            break;
        ++v[i];
    }
    return deg;
}

std::vector<Tuple> vertices(const SyncGraph& G)
{
    std::vector<Tuple> out;
    G.for_each_vertex([&](const Tuple& v) { out.push_back(v); });
    std::sort(out.begin(), out.end());
    return out;
}

ProjectedCrossing crossing(int j, std::vector<Point2> path) { return {j, std::move(path)}; }

} // namespace

TEST_CASE("height walks validate their shape", "[lifting]")
{
    CHECK_NOTHROW(HeightWalk({0, 1, 0, 1, 2}, 2));
    CHECK_THROWS_AS(HeightWalk({0, 2}, 2), invalid_argument);
    CHECK_THROWS_AS(HeightWalk({1, 2}, 2), invalid_argument);
    CHECK_THROWS_AS(HeightWalk({0, 1}, 2), invalid_argument);
    CHECK_THROWS_AS(HeightWalk({0, 1, 0, 1}, 1), invalid_argument);
    CHECK_NOTHROW(HeightWalk({0, 1, 0, 1}, 1, WalkCheck::endpoints));
    CHECK_THROWS_AS(HeightWalk({0, -1, 0, 1}, 1), invalid_argument);
}

TEST_CASE("product graph of two trivial walks", "[lifting]")
{
    const SyncGraph G = build_sync_graph({HeightWalk({0, 1}, 1), HeightWalk({0, 1}, 1)});
    CHECK(vertices(G) == std::vector<Tuple>{{0, 0}, {1, 1}});
    CHECK(G.neighbors({0, 0}) == std::vector<Tuple>{{1, 1}});
    const ParityReport r = degree_parity_audit(G);
    CHECK(r.ok);
    CHECK(r.vertices == 2);
    CHECK(r.edges == 1);
    CHECK_THROWS_AS(build_sync_graph({HeightWalk({0, 1}, 1), HeightWalk({0, 1, 2}, 2)}), invalid_argument);
}

TEST_CASE("neighbours follow the local walk shapes", "[lifting]")
{
    // (0,1,0,1) returns to N early, so it needs the relaxed check
    const SyncGraph G({HeightWalk({0, 1, 0, 1}, 1, WalkCheck::endpoints), HeightWalk({0, 1}, 1)});
    const auto brute = brute_degrees(G.walks());
    CHECK(G.neighbors({1, 1}) == std::vector<Tuple>{{0, 0}, {2, 0}});
    CHECK(brute.at({1, 1}) == 2);
    for (const auto& [v, d] : brute)
        CHECK(G.degree(v) == d);

    // a peak against a valley at the same height isolates the vertex
    const SyncGraph clash({HeightWalk({0, 1, 0, 1, 2, 3}, 3), HeightWalk({0, 1, 2, 1, 2, 3}, 3)});
    CHECK(clash.is_vertex({1, 3}));
    CHECK(clash.degree({1, 3}) == 0);

    // two valleys and one monotone entry at height 1: 2^2 neighbours
    const SyncGraph fan({HeightWalk({0, 1, 2, 1, 2, 3}, 3), HeightWalk({0, 1, 2, 1, 2, 3}, 3),
                         HeightWalk({0, 1, 2, 3}, 3)});
    CHECK(fan.degree({3, 3, 1}) == 4);
}

TEST_CASE("degree parity holds on random walk pairs", "[lifting]")
{
    std::mt19937_64 rng(500);
    for (int i = 0; i < 500; ++i) {
        const Coord N = 1 + static_cast<Coord>(rng() % 4);
        const Walks w{random_height_walk(rng, N, 10), random_height_walk(rng, N, 10)};
        const SyncGraph G(w);
        const auto brute = brute_degrees(w);
        bool expect = true;
        for (const auto& [v, d] : brute) {
            const bool endpoint = v == G.origin() || v == G.target();
            expect = expect && (endpoint ? d == 1 : d % 2 == 0);
        }
        const ParityReport r = degree_parity_audit(G);
        REQUIRE(r.vertices == brute.size());
        REQUIRE(r.ok == expect);
        REQUIRE(r.ok);
    }
}

TEST_CASE("synchronised schedules", "[lifting]")
{
    const SyncSchedule id = sync_walks({HeightWalk({0, 1}, 1), HeightWalk({0, 1}, 1)});
    CHECK(id.T == 1);
    CHECK(id.f == std::vector<std::vector<std::size_t>>{{0, 1}, {0, 1}});

    const Walks relaxed{HeightWalk({0, 1, 0, 1}, 1, WalkCheck::endpoints), HeightWalk({0, 1}, 1)};
    const SyncSchedule s = sync_walks(relaxed);
    CHECK(check_schedule(relaxed, s));
    CHECK(s.T == 3);
    CHECK(s.f == std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}, {0, 1, 0, 1}});

    SyncSchedule broken = s;
    broken.f[1][2] = 1;
    CHECK_FALSE(check_schedule(relaxed, broken));

    std::mt19937_64 rng(200);
    for (int i = 0; i < 200; ++i) {
        const Coord N = 1 + static_cast<Coord>(rng() % 3);
        const Walks w{random_height_walk(rng, N, 10), random_height_walk(rng, N, 10), random_height_walk(rng, N, 10)};
        REQUIRE(check_schedule(w, sync_walks(w)));
    }
}

TEST_CASE("height walk extraction", "[lifting]")
{
    const ExtractedWalk up = extract_height_walk(crossing(2, {{0, 3}, {1, 3}, {2, 3}}));
    CHECK(up.walk.values() == std::vector<Coord>{0, 1, 2});
    CHECK(up.tau == std::vector<std::size_t>{0, 1, 2});

    const ProjectedCrossing detour = crossing(2, {{5, 0}, {5, 1}, {6, 1}, {6, 2}, {6, 3}, {5, 3}, {6, 3}, {7, 3}});
    const ExtractedWalk e = extract_height_walk(detour);
    CHECK(e.walk.N() == 2);
    CHECK(e.tau.back() == detour.path.size() - 1);
    // recomposing the path with tau gives exactly the heights right after each change
    std::vector<Coord> skeleton;
    for (std::size_t t = 0; t < e.tau.size(); ++t)
        skeleton.push_back(detour.path[e.tau[t]].first - detour.base());
    CHECK(skeleton == e.walk.values());
    CHECK(skeleton == std::vector<Coord>{0, 1, 0, 1, 2});

    CHECK_THROWS_AS(extract_height_walk(crossing(2, {{0, 0}, {1, 0}, {1, 1}})), invalid_argument);
    CHECK_THROWS_AS(extract_height_walk(crossing(2, {{0, 0}, {2, 0}})), invalid_argument);
}

TEST_CASE("lifting aligned and degenerate crossings", "[lifting]")
{
    const Box B(Site{0, 0, 0}, Site{1, 1, 1});
    const auto path = lift_crossings({crossing(2, {{0, 0}, {1, 0}}), crossing(3, {{0, 0}, {1, 0}})}, B);
    CHECK(path == std::vector<Site>{Site{0, 0, 0}, Site{1, 0, 0}});

    const auto flat = lift_crossings({crossing(2, {{0, 1}}), crossing(3, {{0, 0}})}, B);
    CHECK(flat == std::vector<Site>{Site{0, 1, 0}});

    CHECK_THROWS_AS(lift_crossings({crossing(2, {{0, 0}, {1, 0}}), crossing(3, {{0, 0}})}, B), invalid_argument);
    CHECK_THROWS_AS(lift_crossings({crossing(2, {{0, 0}, {1, 0}}), crossing(3, {{0, 3}, {1, 3}})}, B),
                    invalid_argument);
}

TEST_CASE("stitching order matters when a walk index retreats", "[lifting]")
{
    const Box B(Site{0, 0, 0}, Site{2, 2, 1});
    const std::vector<ProjectedCrossing> cs{
        crossing(2, {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 2}, {1, 2}, {2, 2}}),
        crossing(3, {{0, 0}, {0, 1}, {1, 1}, {2, 1}}),
    };
    std::set<std::pair<int, Point2>> open;
    for (const ProjectedCrossing& c : cs)
        for (const Point2& q : c.path)
            open.insert({c.j, q});
    auto open_j = [&](int j, Coord h, Coord x) { return open.count({j, {h, x}}) > 0; };

    const auto good = lift_crossings(cs, B, StitchOrder::corrected);
    CHECK(audit_lifted_path(good, B, 0, 2, open_j));
    const auto bad = lift_crossings(cs, B, StitchOrder::as_printed);
    CHECK_FALSE(audit_lifted_path(bad, B, 0, 2, open_j));
    // the offending site sits at the old height with the retreated coordinate
    CHECK(std::find(bad.begin(), bad.end(), Site{1, 1, 0}) != bad.end());
    CHECK_FALSE(open_j(3, 1, 0));
}

TEST_CASE("lifting random crossings yields open paths", "[lifting]")
{
    for (int n : {3, 4}) {
        ParamVector params(n, 2, 0.75);
        Site hi(n);
        hi[0] = 5;
        for (int j = 2; j <= n; ++j)
            hi[j - 1] = 3;
        const Box B(Site(n), hi);
        int lifted = 0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const HyperplaneField f(params, derive_seed(9, s));
            auto open_j = [&](int j, Coord h, Coord x) { return f.bit(IndexSet{1, j}, Site{h, x}); };
            std::vector<ProjectedCrossing> cs;
            for (int j = 2; j <= n; ++j) {
                const Rectangle2D r(0, 5, 0, 3, Axis::first);
                auto p = crossing_path(r, [&](Coord h, Coord x) { return open_j(j, h, x); }, Axis::first);
                if (!p)
                    break;
                cs.push_back(crossing(j, *p));
            }
            if (static_cast<int>(cs.size()) != n - 1)
                continue;
            ++lifted;
            REQUIRE(audit_lifted_path(lift_crossings(cs, B), B, 0, 5, open_j));
        }
        CHECK(lifted > 20);
    }
}

TEST_CASE("bottom-to-top crossings factorise over the projections", "[lifting]")
{
    const FactorizationReport all = bt_factorization_exhaustive_all(12);
    CHECK(all.ok());
    CHECK(all.configurations > 10'000);
    CHECK(all.lifts_audited == all.rhs_true);

    const FactorizationReport small = bt_factorization_exhaustive(2, {2, 2});
    CHECK(small.ok());
    CHECK(small.configurations == 256);
    CHECK(small.lhs_true == small.rhs_true);

    // the true count is the product of the planar counts: 7 of 16 2x2 configurations cross
    CHECK(small.projection_true == std::vector<std::uint64_t>{7 * 16, 7 * 16});
    CHECK(small.rhs_true == 49);

    const FactorizationReport rnd =
        bt_factorization_check(Box(Site{0, 0, 0, 0}, Site{3, 2, 2, 2}), ParamVector(4, 2, 0.6), 300, 1);
    CHECK(rnd.ok());
    CHECK(rnd.lhs_true > 0);
}

TEST_CASE("factorisation on forced configurations", "[lifting]")
{
    const Box B(Site{0, 0, 0}, Site{2, 1, 1});
    FactorizationReport open_rep, blocked_rep;
    detail::factorization_case(B, [](int, Coord, Coord) { return true; }, open_rep, "open");
    CHECK(open_rep.lhs_true == 1);
    CHECK(open_rep.rhs_true == 1);
    detail::factorization_case(
        B, [](int j, Coord h, Coord) { return !(j == 3 && h == 1); }, blocked_rep, "row");
    CHECK(blocked_rep.lhs_true == 0);
    CHECK(blocked_rep.rhs_true == 0);
    CHECK(blocked_rep.ok());
}

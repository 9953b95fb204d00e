#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <deque>

#include "hyperperc/plane.hpp"

using namespace hyperperc;

namespace {

Rational l1_of(const RVec& v)
{
    Rational s = 0;
    for (const Rational& x : v)
        s += x < 0 ? Rational(-x) : x;
    return s;
}

// w~1 = v1, w~2 = v2 + ((2 - n)/2) v1, then scale each by twice the other's l1 norm.
std::pair<Site, Site> oracle_basis(int n)
{
    RVec v1(static_cast<std::size_t>(n)), v2(static_cast<std::size_t>(n));
    for (int j = 0; j < n - 2; ++j) {
        v1[static_cast<std::size_t>(j)] = -1;
        v2[static_cast<std::size_t>(j)] = -(j + 1);
    }
    v1[static_cast<std::size_t>(n - 2)] = 1;
    v2[static_cast<std::size_t>(n - 1)] = 1;
    RVec t2(v2);
    for (std::size_t i = 0; i < t2.size(); ++i)
        t2[i] += Rational(2 - n, 2) * v1[i];
    const Rational s1 = 2 * l1_of(t2), s2 = 2 * l1_of(v1);
    Site w1(n), w2(n);
    for (int i = 0; i < n; ++i) {
        const Rational a = s1 * v1[static_cast<std::size_t>(i)], b = s2 * t2[static_cast<std::size_t>(i)];
        REQUIRE(denominator(a) == 1);
        REQUIRE(denominator(b) == 1);
        w1[i] = numerator(a).convert_to<Coord>();
        w2[i] = numerator(b).convert_to<Coord>();
    }
    return {w1, w2};
}

Coord dot_sites(const Site& a, const Site& b)
{
    Coord s = 0;
    for (int i = 0; i < a.dim(); ++i)
        s += a[i] * b[i];
    return s;
}

bool connected(const std::vector<Site>& sites)
{
    const SiteSet all(sites.begin(), sites.end());
    SiteSet seen{sites.front()};
    std::deque<Site> queue{sites.front()};
    while (!queue.empty()) {
        const Site v = queue.front();
        queue.pop_front();
        for (const Site& w : neighbors(v))
            if (all.count(w) && seen.insert(w).second)
                queue.push_back(w);
    }
    return seen.size() == all.size();
}

} // namespace

TEST_CASE("kernel vectors of the appendix map", "[plane]")
{
    const AppendixMaps m3 = appendix_maps(3);
    CHECK(m3.v1 == Site{-1, 1, 0});
    CHECK(m3.v2 == Site{-1, 0, 1});
    CHECK(m3.L(Site{2, 3, 5}) == std::vector<Coord>{2 + 3 + 5});
    const AppendixMaps m4 = appendix_maps(4);
    CHECK(m4.v1 == Site{-1, -1, 1, 0});
    CHECK(m4.v2 == Site{-1, -2, 0, 1});
    for (int n = 3; n <= kMaxDim; ++n) {
        const AppendixMaps m = appendix_maps(n);
        CHECK(m.L(m.v1) == std::vector<Coord>(static_cast<std::size_t>(n - 2), 0));
        CHECK(m.L(m.v2) == std::vector<Coord>(static_cast<std::size_t>(n - 2), 0));
    }
    CHECK_THROWS_AS(appendix_maps(2), invalid_argument);
}

TEST_CASE("inclined basis", "[plane]")
{
    const InclinedBasis b3 = build_inclined_basis(3);
    CHECK(b3.w1 == Site{-4, 4, 0});
    CHECK(b3.w2 == Site{-2, -2, 4});
    CHECK(b3.R == 8);
    const InclinedBasis b4 = build_inclined_basis(4);
    CHECK(b4.w1 == Site{-6, -6, 6, 0});
    CHECK(b4.w2 == Site{0, -6, -6, 6});
    CHECK(b4.R == 18);
    for (int n = 3; n <= 8; ++n) {
        const InclinedBasis b = build_inclined_basis(n);
        const auto [w1, w2] = oracle_basis(n);
        CHECK(b.w1 == w1);
        CHECK(b.w2 == w2);
        CHECK(dot_sites(b.w1, b.w2) == 0);
        CHECK(l1_norm(b.w1) == l1_norm(b.w2));
        CHECK(verify_factorization(b));
    }
}

TEST_CASE("Euclidean scaling would leave the lattice", "[plane]")
{
    // |w~2|_2^2 = 3/2 at n = 3, whose square root is irrational
    const InclinedBasis b = build_inclined_basis(3);
    const Rational sq = dot(b.w2_tilde, b.w2_tilde);
    CHECK(sq == Rational(3, 2));
    const BigInt num = numerator(sq) * denominator(sq);
    const BigInt root = sqrt(num);
    CHECK(root * root != num);
}

TEST_CASE("injectivity certificates", "[plane]")
{
    const InclinedBasis b4 = build_inclined_basis(4);
    const InjectivityReport r = injectivity_certificate(b4, IndexSet{3, 4});
    REQUIRE(r.determinants.size() == 1);
    CHECK(r.determinants[0].second == 36);
    CHECK(r.injective);
    CHECK(injectivity_certificate(b4, IndexSet{1, 2, 3, 4}).injective);
    CHECK(injectivity_certificate(b4, IndexSet{1, 2, 3, 4}).determinants.size() == 6);

    const InclinedBasis b3 = build_inclined_basis(3);
    for (const IndexSet& I : all_index_sets(3, 2)) {
        const InjectivityReport q = injectivity_certificate(b3, I);
        CHECK(q.injective);
        CHECK(q.min_abs_det != 0);
    }
    CHECK_THROWS_AS(injectivity_certificate(b3, IndexSet{2}), invalid_argument);
}

TEST_CASE("separation constant is a valid lower bound", "[plane]")
{
    for (int n = 3; n <= 8; ++n) {
        const InclinedBasis b = build_inclined_basis(n);
        for (int k = 2; k <= n - 1; ++k) {
            const Rational c = separation_constant(b, k);
            REQUIRE(c > 0);
            // exhaustive check of the ratio on a small window of directions
            for (Coord x = -6; x <= 6; ++x)
                for (Coord y = -6; y <= 6; ++y) {
                    const Site d = b.A(x, y);
                    for (const IndexSet& I : all_index_sets(n, k)) {
                        Coord s = 0;
                        for (int m : I.members())
                            s += std::abs(d[m - 1]);
                        REQUIRE(Rational(s) >= c * (std::abs(x) + std::abs(y)));
                    }
                }
        }
    }
    const InclinedBasis b3 = build_inclined_basis(3);
    const Rational c3 = separation_constant(b3, 2);
    const SeparationAudit a = separation_audit(b3, 2, c3, 10'000, 1000, 5);
    CHECK(a.pairs == 10'000);
    CHECK(a.violations == 0);
    CHECK(l1_norm(b3.A(0, 0)) == 0);
}

TEST_CASE("gamma gadgets", "[plane]")
{
    for (int n : {3, 4, 5}) {
        const InclinedBasis b = build_inclined_basis(n);
        const GammaGadget g0 = gamma_gadget(b, 0, 0);
        const SiteSet s0(g0.sites.begin(), g0.sites.end());
        CHECK(s0.count(Site(n)));
        CHECK(s0.count(b.A(1, 0)));
        CHECK(s0.count(b.A(0, 1)));
        CHECK(connected(g0.sites));
        for (const Site& v : g0.sites)
            CHECK(l1_norm(v) <= b.R);

        const GammaGadget g = gamma_gadget(b, 3, -2);
        SiteSet shifted;
        for (const Site& v : g0.sites)
            shifted.insert(v + b.A(3, -2));
        CHECK(SiteSet(g.sites.begin(), g.sites.end()) == shifted);

        // neighbouring gadgets share their endpoints, so their union is connected
        for (Coord x = -2; x <= 2; ++x)
            for (Coord y = -2; y <= 2; ++y) {
                const auto a = gamma_gadget(b, x, y).sites;
                const SiteSet sa(a.begin(), a.end());
                CHECK(sa.count(gamma_gadget(b, x + 1, y).sites.front()));
                CHECK(sa.count(gamma_gadget(b, x, y + 1).sites.front()));
            }
    }
}

TEST_CASE("eta process", "[plane]")
{
    const InclinedBasis b = build_inclined_basis(3);
    const HyperplaneField open(ParamVector(3, 2, 1.0), 1);
    for (Coord x = -3; x <= 3; ++x)
        CHECK(eta(FieldView::full(open), b, x, 1 - x));

    // closing one gadget site kills eta
    ParamVector one(3, 2, 1.0);
    one.set(IndexSet{1, 2}, 0.0);
    const HyperplaneField closed(one, 1);
    CHECK_FALSE(eta(FieldView::full(closed), b, 0, 0));

    const ParamVector params(3, 2, 0.999);
    const double s = class_c_params(b, params, 2).s;
    HyperplaneField f(params, 0);
    const FieldView view = FieldView::full(f);
    const int trials = 10'000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        f.reseed(derive_seed(31, static_cast<std::uint64_t>(t)));
        hits += eta(view, b, 0, 0);
    }
    const double sigma = std::sqrt(trials * s * (1 - s));
    CHECK(hits >= trials * s - 3 * sigma);
}

TEST_CASE("class C parameters", "[plane]")
{
    const InclinedBasis b = build_inclined_basis(3);
    CHECK(class_c_params(b, ParamVector(3, 2, 1.0), 2).s == 1.0);
    const Rational c = separation_constant(b, 2);
    const ClassCParams cp = class_c_params(b, ParamVector(3, 2, 0.9), 2);
    CHECK(cp.chi == Rational(24) / c);
    CHECK(cp.s == Catch::Approx(std::pow(std::pow(0.9, 3), 17 * 17)));
    CHECK_THROWS_AS(class_c_params(b, ParamVector(4, 2, 0.9), 2), invalid_argument);

    const DisjointnessAudit d = support_disjointness_audit(b, 2, cp.chi, 3);
    CHECK(d.offsets > 0);
    CHECK(d.violations == 0);

    // gadgets at distance >= chi share no hyperplane sites, so eta values decorrelate
    const Coord far = ceil_rational(cp.chi).convert_to<Coord>();
    HyperplaneField f(ParamVector(3, 2, 0.999), 0);
    const FieldView view = FieldView::full(f);
    const int trials = 10'000;
    double sx = 0, sy = 0, sxy = 0;
    for (int t = 0; t < trials; ++t) {
        f.reseed(derive_seed(47, static_cast<std::uint64_t>(t)));
        const double u = eta(view, b, 0, 0), v = eta(view, b, far, 0);
        sx += u;
        sy += v;
        sxy += u * v;
    }
    const double mx = sx / trials, my = sy / trials;
    const double cov = sxy / trials - mx * my;
    const double sd = std::sqrt(mx * (1 - mx) * my * (1 - my) / trials);
    CHECK(std::abs(cov) <= 3 * sd);
}

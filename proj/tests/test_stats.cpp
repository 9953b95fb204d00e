#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "hyperperc/stats.hpp"

using namespace hyperperc;

namespace {

// Wilson bounds are the roots of |p_hat - p| = z sqrt(p (1 - p) / n); find them by bisection.
Interval wilson_by_bisection(double s, double n, double z)
{
    const double ph = s / n;
    auto inside = [&](double p) { return std::abs(ph - p) <= z * std::sqrt(p * (1 - p) / n); };
    auto edge = [&](double a, double b) {
        // a inside, b outside (or the reverse)
        const bool a_in = inside(a);
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            (inside(m) == a_in ? a : b) = m;
        }
        return 0.5 * (a + b);
    };
    const double lo = inside(0.0) ? 0.0 : edge(ph, 0.0);
    const double hi = inside(1.0) ? 1.0 : edge(ph, 1.0);
    return {lo, hi};
}

bool has_tag(const std::vector<std::string>& tags, const std::string& t)
{
    return std::find(tags.begin(), tags.end(), t) != tags.end();
}

std::vector<Coord> ladder(Coord from, Coord to, Coord step)
{
    std::vector<Coord> v;
    for (Coord K = from; K <= to; K += step)
        v.push_back(K);
    return v;
}

} // namespace

TEST_CASE("Wilson interval", "[stats]")
{
    const double z = 1.959963984540054;
    for (auto [s, n] : {std::pair{0, 10}, {3, 10}, {10, 10}, {50, 100}, {1, 1000}, {999, 1000}}) {
        const Interval w = wilson_interval(s, n);
        const Interval o = wilson_by_bisection(s, n, z);
        CHECK(w.lo == Catch::Approx(o.lo).margin(1e-9));
        CHECK(w.hi == Catch::Approx(o.hi).margin(1e-9));
        CHECK(w.lo <= double(s) / n);
        CHECK(w.hi >= double(s) / n);
    }
    CHECK(wilson_interval(0, 10).hi == Catch::Approx(0.2775).margin(1e-4));
    CHECK(wilson_interval(0, 0).lo == 0.0);
    CHECK(wilson_interval(0, 0).hi == 1.0);
    CHECK_THROWS_AS(wilson_interval(5, 4), invalid_argument);
}

TEST_CASE("fits recover synthetic curves", "[stats]")
{
    const auto Ks = ladder(4, 64, 4);
    const FitReport a = fit_power_law(DecayCurve::synthetic(Ks, [](double K) { return std::pow(K, -1.5); }));
    CHECK(a.exponent == Catch::Approx(1.5).margin(1e-6));
    CHECK(a.amplitude == Catch::Approx(1.0).margin(1e-6));
    CHECK(a.points == Ks.size());

    const FitReport b = fit_power_law(DecayCurve::synthetic(Ks, [](double K) { return 0.5 * std::pow(K, -0.7); }));
    CHECK(b.amplitude == Catch::Approx(0.5).margin(1e-6));
    CHECK(b.exponent == Catch::Approx(0.7).margin(1e-6));
    CHECK(b.gof == Catch::Approx(0.0).margin(1e-9));

    const auto Ke = ladder(2, 24, 2);
    const FitReport e = fit_exponential(DecayCurve::synthetic(Ke, [](double K) { return std::exp(-K / 3.0); }));
    CHECK(e.exponent == Catch::Approx(1.0 / 3.0).margin(1e-6));
    CHECK(e.amplitude == Catch::Approx(1.0).margin(1e-6));

    const DecayCurve exp4 = DecayCurve::synthetic(Ke, [](double K) { return std::exp(-K / 4.0); });
    CHECK(fit_power_law(exp4).gof > 100.0 * (fit_exponential(exp4).gof + 1e-6));

    const FitReport flat = fit_exponential(DecayCurve::synthetic(Ke, [](double) { return 0.9; }));
    CHECK(flat.exponent == Catch::Approx(0.0).margin(1e-9));
    CHECK(flat.amplitude == Catch::Approx(0.9).margin(1e-9));
}

TEST_CASE("fits need four positive entries", "[stats]")
{
    DecayCurve c;
    c.add(2, 100, 50);
    c.add(4, 100, 20);
    c.add(6, 100, 5);
    c.add(8, 100, 0);
    c.add(10, 100, 0);
    CHECK_THROWS_AS(fit_power_law(c), invalid_argument);
    CHECK_THROWS_AS(fit_exponential(c), invalid_argument);
    const Selection s = model_select(c);
    CHECK(s.model == Model::inconclusive);
    CHECK_FALSE(s.power.has_value());
    CHECK_THROWS_AS(c.add(10, 100, 0), invalid_argument);
}

TEST_CASE("model selection", "[stats]")
{
    const Selection p = model_select(DecayCurve::synthetic(ladder(4, 64, 4), [](double K) { return 1.0 / K; }));
    CHECK(p.model == Model::power_law);
    CHECK(p.delta_aic >= 10.0);
    CHECK(std::string(model_name(p.model)) == "POWER_LAW");

    const Selection e = model_select(DecayCurve::synthetic(ladder(2, 16, 2), [](double K) { return std::exp(-K / 2.0); }));
    CHECK(e.model == Model::exponential);
    CHECK(e.delta_aic <= -10.0);
    CHECK(std::string(model_name(e.model)) == "EXPONENTIAL");

    const Selection two = model_select(DecayCurve::synthetic({4, 8}, [](double K) { return 1.0 / K; }));
    CHECK(two.model == Model::inconclusive);
    CHECK(std::string(model_name(two.model)) == "INCONCLUSIVE");

    // identical fits: no preference
    const Selection flat = model_select(DecayCurve::synthetic(ladder(2, 10, 2), [](double) { return 1.0; }));
    CHECK(flat.model == Model::inconclusive);
}

TEST_CASE("decay curve estimation", "[stats]")
{
    DecayOptions opt;
    opt.radii = {1, 2, 4, 8};
    opt.trials = 200;
    opt.seed = 3;

    for (const DecayEntry& e : estimate_decay_curve(ParamVector(3, 2, 1.0), opt).entries) {
        CHECK(e.p_hat == 1.0);
        CHECK(e.successes == e.trials);
    }
    ParamVector dead(3, 2, 0.9);
    dead.set(IndexSet{1, 2}, 0.0);
    for (const DecayEntry& e : estimate_decay_curve(dead, opt).entries)
        CHECK(e.successes == 0);

    // every entry agrees with a direct per-trial recomputation
    const ParamVector params(3, 2, 0.8);
    opt.trials = 300;
    const DecayCurve c = estimate_decay_curve(params, opt);
    HyperplaneField f(params, 0);
    const FieldView view = FieldView::full(f);
    std::vector<std::uint64_t> direct(opt.radii.size(), 0);
    for (std::uint64_t t = 0; t < opt.trials; ++t) {
        f.reseed(derive_seed(opt.seed, t));
        for (std::size_t i = 0; i < opt.radii.size(); ++i)
            direct[i] += connects_to_boundary(view, opt.radii[i]);
    }
    for (std::size_t i = 0; i < opt.radii.size(); ++i)
        CHECK(c.entries[i].successes == direct[i]);

    opt.truncated = true;
    const DecayCurve tc = estimate_decay_curve(params, opt);
    std::fill(direct.begin(), direct.end(), 0);
    for (std::uint64_t t = 0; t < opt.trials; ++t) {
        f.reseed(derive_seed(opt.seed, t));
        for (std::size_t i = 0; i < opt.radii.size(); ++i)
            direct[i] += truncated_connect(view, opt.radii[i], 4 * opt.radii[i]);
    }
    for (std::size_t i = 0; i < opt.radii.size(); ++i)
        CHECK(tc.entries[i].successes == direct[i]);

    opt.radii = {2, 1};
    CHECK_THROWS_AS(estimate_decay_curve(params, opt), invalid_argument);
    opt.radii = {1, 2};
    opt.trials = 99;
    CHECK_THROWS_AS(estimate_decay_curve(params, opt), invalid_argument);
}

TEST_CASE("decay curve is monotone and worker independent", "[stats]")
{
    DecayOptions opt;
    opt.radii = {1, 2, 3, 4, 6, 8};
    opt.trials = 10'000;
    opt.seed = 11;
    const ParamVector params(3, 2, 0.8);
    const DecayCurve one = estimate_decay_curve(params, opt);
    for (std::size_t i = 1; i < one.entries.size(); ++i)
        CHECK(one.entries[i].successes <= one.entries[i - 1].successes);
    opt.trials = 40'000;
    opt.radii = {1, 2, 3};
    opt.workers = 1;
    const DecayCurve a = estimate_decay_curve(params, opt);
    for (unsigned w : {2u, 8u}) {
        opt.workers = w;
        const DecayCurve b = estimate_decay_curve(params, opt);
        for (std::size_t i = 0; i < a.entries.size(); ++i)
            CHECK(a.entries[i].successes == b.entries[i].successes);
    }
}

TEST_CASE("regime tags", "[stats]")
{
    ParamVector l2(4, 2, 1.0);
    l2.set(IndexSet{1, 2}, 0.3).set(IndexSet{1, 3}, 0.7).set(IndexSet{1, 4}, 0.7);
    CHECK(has_tag(regime_tags(l2), "lemma2-subcritical"));
    CHECK_FALSE(has_tag(regime_tags(l2), "lemma3-subcritical"));

    ParamVector l3(4, 2, 1.0);
    l3.set(IndexSet{1, 2}, 0.3).set(IndexSet{3, 4}, 0.3);
    CHECK(has_tag(regime_tags(l3), "lemma3-subcritical"));

    const auto r4 = regime_tags(ParamVector(3, 2, 0.3));
    CHECK(has_tag(r4, "remark4-exponential"));
    CHECK_FALSE(has_tag(r4, "theorem3-power-law"));

    ParamVector t3(3, 2, 0.95);
    t3.set(IndexSet{2, 3}, 0.8);
    const auto th = regime_tags(t3);
    CHECK(has_tag(th, "theorem3-power-law"));
    CHECK_FALSE(has_tag(th, "supercritical-near-one"));
    CHECK_FALSE(has_tag(th, "remark4-exponential"));

    const auto near = regime_tags(ParamVector(3, 2, 0.999));
    CHECK(has_tag(near, "supercritical-near-one"));
    CHECK(has_tag(near, "theorem3-power-law"));
    CHECK(regime_tags(ParamVector(3, 2, 1.0)) == std::vector<std::string>{"supercritical-near-one"});

    CriticalValues cv;
    cv.site.erase(2);
    CHECK_THROWS_AS(regime_tags(ParamVector(3, 2, 0.5), cv), invalid_argument);
}

TEST_CASE("phase scan", "[stats]")
{
    PhaseOptions opt;
    opt.K_probe = 24;
    opt.trials = 500;
    opt.seed = 9;
    const std::vector<ParamVector> grid{ParamVector(3, 2, 0.999), ParamVector(3, 2, 0.2)};
    const auto rows = phase_scan(grid, opt);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].frequency >= 0.9);
    CHECK(rows[1].frequency <= 0.05);
    CHECK(rows[0].ci.lo <= rows[0].frequency);
    CHECK(has_tag(rows[0].tags, "supercritical-near-one"));
    CHECK(has_tag(rows[1].tags, "remark4-exponential"));

    opt.workers = 8;
    const auto again = phase_scan(grid, opt);
    CHECK(again[0].successes == rows[0].successes);
    CHECK(again[1].successes == rows[1].successes);
}

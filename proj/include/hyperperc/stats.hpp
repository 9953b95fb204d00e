#pragma once

// Decay curves of the connection probability, power-law and exponential fits,
// model selection, and phase scans with regime tags.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperperc/cluster.hpp"
#include "hyperperc/field.hpp"
#include "hyperperc/parallel.hpp"

namespace hyperperc {

struct Interval {
    double lo = 0.0, hi = 1.0;
};

/// Wilson score interval; z defaults to the two-sided 95% quantile.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054)
{
    if (trials == 0)
        return {0.0, 1.0};
    if (successes > trials)
        throw invalid_argument("more successes than trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // the endpoints are exact at p = 0 and p = 1; keep them so after rounding
    const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

struct DecayEntry {
    Coord K = 0;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0, ci_hi = 1.0;
};

struct DecayCurve {
    std::vector<DecayEntry> entries;
    bool truncated = false;
    double m_multiple = 4.0;

    void add(Coord K, std::uint64_t trials, std::uint64_t successes)
    {
        if (!entries.empty() && K <= entries.back().K)
            throw invalid_argument("radii must be strictly increasing");
        const Interval ci = wilson_interval(successes, trials);
        entries.push_back({K, trials, successes, trials ? static_cast<double>(successes) / trials : 0.0, ci.lo, ci.hi});
    }

    /// Noise-free curve p(K) for regression checks; successes are p * trials rounded.
    template <class F>
    static DecayCurve synthetic(const std::vector<Coord>& Ks, F&& p, std::uint64_t trials = 1'000'000)
    {
        DecayCurve c;
        for (Coord K : Ks) {
            const double v = p(static_cast<double>(K));
            c.add(K, trials, static_cast<std::uint64_t>(std::llround(v * static_cast<double>(trials))));
            c.entries.back().p_hat = v;
        }
        return c;
    }
};

struct DecayOptions {
    std::vector<Coord> radii;
    std::uint64_t trials = 10'000;
    std::uint64_t seed = 0;
    bool truncated = false;
    double m_multiple = 4.0; // truncation radius M = round(m_multiple * K)
    unsigned workers = 1;
};

/// Trials per work unit; fixed so that results do not depend on the worker count.
inline constexpr std::uint64_t kTrialChunk = 1 << 14;

inline Coord truncation_radius(Coord K, double m_multiple)
{
    const auto M = static_cast<Coord>(std::llround(m_multiple * static_cast<double>(K)));
    if (M <= K)
        throw invalid_argument("truncation multiple must give M > K");
    return M;
}

/// One probe per trial answers every radius: the probe returns min(max |v|_inf over the
/// origin cluster, L) with L the largest radius needed. Sample t uses the field seeded by
/// derive_seed(seed, t) at every K, so each sample's indicator is monotone in K.
inline DecayCurve estimate_decay_curve(const ParamVector& params, const DecayOptions& opt)
{
    if (opt.radii.empty())
        throw invalid_argument("radius ladder is empty");
    for (std::size_t i = 1; i < opt.radii.size(); ++i)
        if (opt.radii[i] <= opt.radii[i - 1])
            throw invalid_argument("radius ladder must be strictly increasing");
    if (opt.radii.front() < 1)
        throw invalid_argument("radii must be positive");
    if (opt.trials < 100)
        throw invalid_argument("need at least 100 trials");

    std::vector<Coord> M;
    Coord limit = opt.radii.back();
    if (opt.truncated) {
        for (Coord K : opt.radii)
            M.push_back(truncation_radius(K, opt.m_multiple));
        limit = *std::max_element(M.begin(), M.end());
    }
    const std::size_t m = opt.radii.size();
    const auto counts = parallel_chunks<std::vector<std::uint64_t>>(
        opt.trials, kTrialChunk, opt.workers, [&](std::uint64_t begin, std::uint64_t end) {
            std::vector<std::uint64_t> hits(m, 0);
            HyperplaneField f(params, 0);
            const FieldView view = FieldView::full(f);
            for (std::uint64_t t = begin; t < end; ++t) {
                f.reseed(derive_seed(opt.seed, t));
                const Coord r = probe_origin(view, limit).max_radius;
                for (std::size_t i = 0; i < m; ++i)
                    hits[i] += opt.truncated ? (r >= opt.radii[i] && r < M[i]) : (r >= opt.radii[i]);
            }
            return hits;
        });

    DecayCurve curve;
    curve.truncated = opt.truncated;
    curve.m_multiple = opt.m_multiple;
    for (std::size_t i = 0; i < m; ++i) {
        std::uint64_t hits = 0;
        for (const auto& c : counts)
            hits += c[i];
        curve.add(opt.radii[i], opt.trials, hits);
    }
    return curve;
}

enum class Model { power_law, exponential, inconclusive };

inline const char* model_name(Model m)
{
    switch (m) {
    case Model::power_law:
        return "POWER_LAW";
    case Model::exponential:
        return "EXPONENTIAL";
    default:
        return "INCONCLUSIVE";
    }
}

struct FitReport {
    Model model = Model::power_law;
    double amplitude = 0.0; // c
    double exponent = 0.0;  // alpha for c K^-alpha, rate lambda for c exp(-lambda K)
    double gof = 0.0;       // weighted residual sum of squares on log p
    double aic = 0.0;
    std::size_t points = 0;
};

namespace detail {

/// Weighted least squares of log p_hat on g(K), using the delta-method variance
/// (1 - p) / (n p) of log p_hat. Entries with no successes carry no log and are skipped.
template <class G>
FitReport log_linear_fit(const DecayCurve& curve, G&& g, Model model)
{
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::array<double, 3>> pts;
    for (const DecayEntry& e : curve.entries) {
        if (e.p_hat <= 0.0)
            continue;
        const double n = static_cast<double>(e.trials);
        const double w = n * e.p_hat / std::max(1.0 - e.p_hat, 1.0 / n);
        const double x = g(static_cast<double>(e.K)), y = std::log(e.p_hat);
        pts.push_back({x, y, w});
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    if (pts.size() < 4)
        throw invalid_argument("fit needs at least 4 entries with positive frequency");
    const double det = sw * sxx - sx * sx;
    if (!(std::abs(det) > 0.0))
        throw invalid_argument("fit design is degenerate");
    const double slope = (sw * sxy - sx * sy) / det;
    const double icpt = (sy - slope * sx) / sw;
    FitReport r;
    r.model = model;
    r.amplitude = std::exp(icpt);
    r.exponent = -slope;
    r.points = pts.size();
    for (const auto& [x, y, w] : pts) {
        const double res = y - (icpt + slope * x);
        r.gof += w * res * res;
    }
    r.aic = r.gof + 2.0 * 2.0;
    return r;
}

} // namespace detail

inline FitReport fit_power_law(const DecayCurve& curve)
{
    return detail::log_linear_fit(curve, [](double K) { return std::log(K); }, Model::power_law);
}

inline FitReport fit_exponential(const DecayCurve& curve)
{
    return detail::log_linear_fit(curve, [](double K) { return K; }, Model::exponential);
}

struct Selection {
    Model model = Model::inconclusive;
    double delta_aic = 0.0; // aic(exponential) - aic(power law)
    std::optional<FitReport> power, exponential;
    std::string reason;
};

/// Picks the model whose AIC is lower by at least `margin`; otherwise inconclusive.
inline Selection model_select(const DecayCurve& curve, double margin = 10.0)
{
    Selection s;
    std::size_t positive = 0;
    for (const DecayEntry& e : curve.entries)
        positive += e.p_hat > 0.0;
    if (positive < 4) {
        s.reason = "only " + std::to_string(positive) + " entries with positive frequency";
        return s;
    }
    s.power = fit_power_law(curve);
    s.exponential = fit_exponential(curve);
    s.delta_aic = s.exponential->aic - s.power->aic;
    if (s.delta_aic >= margin) {
        s.model = Model::power_law;
        s.reason = "power law preferred";
    } else if (s.delta_aic <= -margin) {
        s.model = Model::exponential;
        s.reason = "exponential preferred";
    } else {
        s.reason = "AIC difference within margin";
    }
    return s;
}

/// Site-percolation thresholds of Z^k used only to tag parameter regimes.
struct CriticalValues {
    std::map<int, double> site{{2, 0.592746}, {3, 0.311608}, {4, 0.196889}, {5, 0.140797}, {6, 0.109017}, {7, 0.088951}};
    double near_one = 0.99; // prod p_I at or above this counts as close to 1

    double pc(int k) const
    {
        auto it = site.find(k);
        if (it == site.end())
            throw invalid_argument("no critical value configured for Z^" + std::to_string(k));
        return it->second;
    }
};

namespace detail {

inline bool partition_search(int n, int k, std::vector<int>& used, int count, const ParamVector& p, double pc)
{
    int first = -1;
    for (int i = 1; i <= n; ++i)
        if (!used[static_cast<std::size_t>(i)]) {
            first = i;
            break;
        }
    if (first < 0)
        return count > 0;
    for (const IndexSet& I : all_index_sets(n, k)) {
        if (I.members().front() != first || p.get(I) >= pc)
            continue;
        bool free = true;
        for (int m : I.members())
            free = free && !used[static_cast<std::size_t>(m)];
        if (!free)
            continue;
        for (int m : I.members())
            used[static_cast<std::size_t>(m)] = 1;
        const bool ok = partition_search(n, k, used, count + 1, p, pc);
        for (int m : I.members())
            used[static_cast<std::size_t>(m)] = 0;
        if (ok)
            return true;
    }
    return false;
}

} // namespace detail

/// Which of the known regimes a parameter vector falls in; pure arithmetic.
inline std::vector<std::string> regime_tags(const ParamVector& p, const CriticalValues& cv = {})
{
    const int n = p.n(), k = p.k();
    const double pck = cv.pc(k);
    const auto sets = p.index_sets();
    std::vector<std::string> tags;

    // one subcritical plane I plus the n-k sets C u {a}, a outside I, all below 1
    bool lemma2 = false;
    for (const IndexSet& I : sets) {
        if (p.get(I) >= pck)
            continue;
        for (int drop : I.members()) {
            std::vector<int> C;
            for (int m : I.members())
                if (m != drop)
                    C.push_back(m);
            bool all = true;
            for (int a = 1; a <= n && all; ++a) {
                if (I.contains(a))
                    continue;
                std::vector<int> J = C;
                J.push_back(a);
                std::sort(J.begin(), J.end());
                all = p.get(IndexSet(J)) < 1.0;
            }
            lemma2 = lemma2 || all;
        }
    }
    if (lemma2)
        tags.emplace_back("lemma2-subcritical");

    if (n % k == 0) {
        std::vector<int> used(static_cast<std::size_t>(n + 1), 0);
        if (detail::partition_search(n, k, used, 0, p, pck))
            tags.emplace_back("lemma3-subcritical");
    }

    std::size_t sub = 0;
    for (const IndexSet& I : sets)
        sub += p.get(I) < pck;
    if (sub >= binomial(n - 1, k) + 1)
        tags.emplace_back("remark4-exponential");

    if (k == 2) {
        bool all_positive = true;
        for (const IndexSet& I : sets)
            all_positive = all_positive && p.get(I) > 0.0;
        for (int d = 1; d <= n && all_positive; ++d) {
            bool planes = true, slack = false;
            for (const IndexSet& I : sets) {
                if (I.contains(d))
                    planes = planes && p.get(I) > cv.pc(2);
                else
                    slack = slack || p.get(I) < 1.0;
            }
            if (planes && slack) {
                tags.emplace_back("theorem3-power-law");
                break;
            }
        }
    }

    if (p.product() >= cv.near_one)
        tags.emplace_back("supercritical-near-one");
    return tags;
}

struct PhaseRow {
    ParamVector params;
    std::uint64_t trials = 0, successes = 0;
    double frequency = 0.0;
    Interval ci;
    std::vector<std::string> tags;
};

struct PhaseOptions {
    Coord K_probe = 16;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    CriticalValues critical;
};

/// Frequency of [o <-> dB(K_probe)] for each parameter vector. Row r uses seeds
/// derive_seed(derive_seed(seed, r), t).
inline std::vector<PhaseRow> phase_scan(const std::vector<ParamVector>& grid, const PhaseOptions& opt)
{
    std::vector<PhaseRow> rows;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        const std::uint64_t row_seed = derive_seed(opt.seed, r);
        const auto hits = parallel_chunks<std::uint64_t>(
            opt.trials, kTrialChunk, opt.workers, [&](std::uint64_t begin, std::uint64_t end) {
                std::uint64_t h = 0;
                HyperplaneField f(grid[r], 0);
                const FieldView view = FieldView::full(f);
                for (std::uint64_t t = begin; t < end; ++t) {
                    f.reseed(derive_seed(row_seed, t));
                    h += connects_to_boundary(view, opt.K_probe);
                }
                return h;
            });
        PhaseRow row{grid[r], 0, 0, 0.0, {}, {}};
        row.trials = opt.trials;
        for (std::uint64_t h : hits)
            row.successes += h;
        row.frequency = static_cast<double>(row.successes) / static_cast<double>(row.trials);
        row.ci = wilson_interval(row.successes, row.trials);
        row.tags = regime_tags(grid[r], opt.critical);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace hyperperc

#pragma once

// Counter-based Bernoulli fields on the coordinate planes and the product
// fields built from them.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperperc/lattice.hpp"

namespace hyperperc {

inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for the trial-th independent sample of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial)
{
    return mix64(mix64(seed) ^ mix64(trial + 0x632be59bd9b4e019ULL));
}

/// p_I for every k-subset of [n], stored by colex rank.
class ParamVector {
public:
    ParamVector(int n, int k, double fill = 1.0) : n_(n), k_(k)
    {
        if (n < 2 || k < 1 || k >= n || n > kMaxDim)
            throw invalid_argument("need 1 <= k < n <= " + std::to_string(kMaxDim));
        check_prob(fill);
        p_.assign(binomial(n, k), fill);
    }

    static ParamVector uniform(int n, int k, double p) { return ParamVector(n, k, p); }

    int n() const { return n_; }
    int k() const { return k_; }
    std::size_t size() const { return p_.size(); }

    double operator[](std::size_t rank) const { return p_.at(rank); }
    double get(const IndexSet& I) const { return p_[rank_of(I)]; }

    ParamVector& set(const IndexSet& I, double p)
    {
        check_prob(p);
        p_[rank_of(I)] = p;
        return *this;
    }

    std::vector<IndexSet> index_sets() const { return all_index_sets(n_, k_); }

    double product() const
    {
        double r = 1.0;
        for (double p : p_)
            r *= p;
        return r;
    }

    std::size_t rank_of(const IndexSet& I) const
    {
        if (I.size() != k_ || !I.valid_for(n_))
            throw invalid_argument("index set " + I.to_string() + " is not a " + std::to_string(k_) +
                                   "-subset of [" + std::to_string(n_) + "]");
        return static_cast<std::size_t>(I.colex_rank());
    }

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    static void check_prob(double p)
    {
        if (!(p >= 0.0 && p <= 1.0))
            throw invalid_argument("probability outside [0,1]: " + std::to_string(p));
    }

    int n_, k_;
    std::vector<double> p_;
};

/// Independent fields omega_I on Z^k_I. Bits are pure functions of (seed, rank(I), u).
class HyperplaneField {
public:
    HyperplaneField(ParamVector params, std::uint64_t seed) : params_(std::move(params)), seed_(seed)
    {
        const std::size_t m = params_.size();
        threshold_.resize(m);
        prob_.resize(m);
        for (std::size_t r = 0; r < m; ++r) {
            prob_[r] = params_[r];
            threshold_[r] = static_cast<std::uint64_t>(std::llround(std::ldexp(prob_[r], 53)));
        }
        reseed(seed);
    }

    /// Switches to another sample; views bound to this field follow it.
    void reseed(std::uint64_t seed)
    {
        seed_ = seed;
        stream_.resize(prob_.size());
        for (std::size_t r = 0; r < prob_.size(); ++r)
            stream_[r] = mix64(seed_ ^ mix64(0xd1b54a32d192ed03ULL * (r + 1)));
    }

    int n() const { return params_.n(); }
    int k() const { return params_.k(); }
    std::uint64_t seed() const { return seed_; }
    const ParamVector& params() const { return params_; }

    bool bit(const IndexSet& I, const Site& u) const
    {
        if (u.dim() != k())
            throw invalid_argument("hyperplane coordinate must have " + std::to_string(k()) + " entries");
        return bit_rank(params_.rank_of(I), u.coords().data(), u.dim());
    }

    /// Unchecked fast path; `rank` must come from params().rank_of.
    bool bit_rank(std::size_t rank, const Coord* u, int len) const
    {
        const double p = prob_[rank];
        if (p == 0.0)
            return false;
        if (p == 1.0)
            return true;
        std::uint64_t h = stream_[rank];
        for (int i = 0; i < len; ++i)
            h = mix64(h ^ static_cast<std::uint64_t>(u[i]));
        return (h >> 11) < threshold_[rank];
    }

private:
    ParamVector params_;
    std::uint64_t seed_;
    std::vector<double> prob_;
    std::vector<std::uint64_t> threshold_;
    std::vector<std::uint64_t> stream_;
};

enum class ViewMode { full, xi, custom };

/// The product of omega_I over a chosen family of index sets.
/// full: every I (the field omega). xi: I_j = {1, j}, j = 2..n, k = 2 only.
class FieldView {
public:
    FieldView(const HyperplaneField& f, ViewMode mode, std::vector<IndexSet> custom = {})
        : field_(&f), mode_(mode)
    {
        std::vector<IndexSet> sets;
        switch (mode) {
        case ViewMode::full:
            sets = f.params().index_sets();
            break;
        case ViewMode::xi:
            if (f.k() != 2)
                throw invalid_argument("the xi view needs k = 2");
            for (int j = 2; j <= f.n(); ++j)
                sets.push_back(IndexSet{1, j});
            break;
        case ViewMode::custom:
            sets = std::move(custom);
            break;
        }
        for (const IndexSet& I : sets) {
            Factor fac;
            fac.rank = f.params().rank_of(I);
            for (int m : I.members())
                fac.pos.push_back(m - 1);
            factors_.push_back(std::move(fac));
            sets_.push_back(I);
        }
    }

    static FieldView full(const HyperplaneField& f) { return {f, ViewMode::full}; }
    static FieldView xi(const HyperplaneField& f) { return {f, ViewMode::xi}; }

    const HyperplaneField& field() const { return *field_; }
    ViewMode mode() const { return mode_; }
    const std::vector<IndexSet>& index_sets() const { return sets_; }
    int n() const { return field_->n(); }

    bool omega(const Site& v) const
    {
        if (v.dim() != n())
            throw invalid_argument("site " + v.to_string() + " does not live in Z^" + std::to_string(n()));
        return omega_raw(v.coords().data());
    }

    /// Unchecked: `v` must point at n coordinates.
    bool omega_raw(const Coord* v) const
    {
        Coord u[kMaxDim];
        for (const Factor& fac : factors_) {
            const int len = static_cast<int>(fac.pos.size());
            for (int i = 0; i < len; ++i)
                u[i] = v[fac.pos[static_cast<std::size_t>(i)]];
            if (!field_->bit_rank(fac.rank, u, len))
                return false;
        }
        return true;
    }

private:
    struct Factor {
        std::size_t rank;
        std::vector<int> pos;
    };

    const HyperplaneField* field_;
    ViewMode mode_;
    std::vector<IndexSet> sets_;
    std::vector<Factor> factors_;
};

inline bool hyperplane_bit(const HyperplaneField& f, const IndexSet& I, const Site& u) { return f.bit(I, u); }

inline bool omega(const FieldView& view, const Site& v) { return view.omega(v); }

/// Whenever omega_I(x) = 0, every site of the fiber pi_I^{-1}(x) inside `window` is closed.
inline bool column_structure_check(const FieldView& view, const IndexSet& I, const Site& x, const Box& window)
{
    if (window.dim() != view.n())
        throw invalid_argument("window dimension differs from the field");
    if (view.field().bit(I, x))
        return true;
    const Box proj = window.project(I);
    if (!proj.contains(x))
        return true;
    Site lo = window.lo(), hi = window.hi();
    for (int i = 0; i < I.size(); ++i) {
        const int pos = I.members()[static_cast<std::size_t>(i)] - 1;
        lo[pos] = hi[pos] = x[i];
    }
    bool ok = true;
    Box(lo, hi).for_each([&](const Site& v) { ok = ok && !view.omega(v); });
    return ok;
}

/// Probability that every site of a (2R+1)^k box is open, (prod p_I)^((2R+1)^k).
inline double box_all_open_probability(const ParamVector& params, std::int64_t R)
{
    if (R < 0)
        throw invalid_argument("radius must be nonnegative");
    const double sites = std::pow(2.0 * static_cast<double>(R) + 1.0, params.k());
    return std::pow(params.product(), sites);
}

} // namespace hyperperc

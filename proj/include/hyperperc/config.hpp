#pragma once

// Experiment configuration: a YAML document with typed sections. Index sets are
// written as sorted integer lists, e.g. `[1, 2]: 0.95` under `params`.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "hyperperc/errors.hpp"
#include "hyperperc/field.hpp"
#include "hyperperc/stats.hpp"

namespace hyperperc {

class config_error : public invalid_argument {
public:
    using invalid_argument::invalid_argument;
};

struct DecayBlock {
    std::vector<Coord> radii{2, 4, 6, 8};
    std::uint64_t trials = 10'000;
    bool truncated = false;
    double m_multiple = 4.0;
    double margin = 10.0;
    std::string expect; // POWER_LAW or EXPONENTIAL; empty means no expectation
};

struct PhaseBlock {
    Coord K_probe = 16;
    std::uint64_t trials = 1000;
    std::vector<ParamVector> grid; // empty means the top-level params only
};

struct RenormBlock {
    Coord K = 8;
    Coord N = 0; // 0: calibrate by doubling until the good-box frequency reaches `target`
    double c_o = 3.0;
    Coord M = 0; // 0: 4NK
    std::uint64_t trials = 100;
    double target = 0.95;
    std::uint64_t calibration_trials = 200;
};

struct VerifyBlock {
    std::uint64_t walk_instances = 500;
    std::uint64_t separation_pairs = 10'000;
    int max_n = 8;
    std::int64_t spiral_horizon = 40;
    Coord wall_offsets = 10;
    std::size_t max_projected_sites = 12;
    std::uint64_t factorization_trials = 2000;
};

struct ExperimentConfig {
    int n = 3, k = 2;
    std::uint64_t seed = 0;
    ParamVector params{3, 2, 1.0};
    DecayBlock decay;
    PhaseBlock phase;
    RenormBlock renorm;
    VerifyBlock verify;
    CriticalValues critical;
    std::string source = "<defaults>";

    /// Stable text form of every resolved setting except the seed.
    std::string canonical() const;
    std::uint64_t hash() const;
};

inline std::uint64_t fnv1a64(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline std::string canonical_params(const ParamVector& p)
{
    std::ostringstream os;
    os << std::setprecision(17) << "n=" << p.n() << ";k=" << p.k();
    for (const IndexSet& I : p.index_sets())
        os << ";" << I.to_string() << "=" << p.get(I);
    return os.str();
}

inline std::string params_hash(const ParamVector& p) { return hex64(fnv1a64(canonical_params(p))); }

inline std::string ExperimentConfig::canonical() const
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "params:" << canonical_params(params) << "\n";
    os << "decay:radii=";
    for (Coord K : decay.radii)
        os << K << ",";
    os << ";trials=" << decay.trials << ";truncated=" << decay.truncated << ";m=" << decay.m_multiple
       << ";margin=" << decay.margin << ";expect=" << decay.expect << "\n";
    os << "phase:K=" << phase.K_probe << ";trials=" << phase.trials;
    for (const ParamVector& g : phase.grid)
        os << ";[" << canonical_params(g) << "]";
    os << "\n";
    os << "renorm:K=" << renorm.K << ";N=" << renorm.N << ";c_o=" << renorm.c_o << ";M=" << renorm.M
       << ";trials=" << renorm.trials << ";target=" << renorm.target << ";ctrials=" << renorm.calibration_trials
       << "\n";
    os << "verify:walks=" << verify.walk_instances << ";pairs=" << verify.separation_pairs << ";max_n=" << verify.max_n
       << ";horizon=" << verify.spiral_horizon << ";offsets=" << verify.wall_offsets
       << ";sites=" << verify.max_projected_sites << ";ftrials=" << verify.factorization_trials << "\n";
    os << "critical:";
    for (const auto& [k, v] : critical.site)
        os << k << "=" << v << ",";
    os << ";near_one=" << critical.near_one << "\n";
    return os.str();
}

inline std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

namespace detail {

class ConfigReader {
public:
    explicit ConfigReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const
    {
        const YAML::Mark m = node.Mark();
        std::string where = source_;
        if (m.line >= 0)
            where += ":" + std::to_string(m.line + 1);
        throw config_error(where + ": " + msg);
    }

    template <class T>
    T scalar(const YAML::Node& node, const std::string& what) const
    {
        if (!node.IsScalar())
            fail(node, what + " must be a scalar");
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, "cannot read " + what + " from '" + node.Scalar() + "'");
        }
    }

    double probability(const YAML::Node& node, const std::string& what) const
    {
        const double p = scalar<double>(node, what);
        if (!(p >= 0.0 && p <= 1.0))
            fail(node, what + " must lie in [0, 1]");
        return p;
    }

    void only_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& section) const
    {
        if (!map.IsMap())
            fail(map, section + " must be a mapping");
        for (const auto& kv : map) {
            if (!kv.first.IsScalar() || !allowed.count(kv.first.Scalar()))
                fail(kv.first, "unknown key in " + section + ": '" + YAML::Dump(kv.first) + "'");
        }
    }

    IndexSet index_set(const YAML::Node& key, int n, int k) const
    {
        std::vector<int> members;
        if (key.IsSequence()) {
            for (const auto& m : key)
                members.push_back(scalar<int>(m, "index-set member"));
        } else if (key.IsScalar()) {
            std::string s = key.Scalar();
            for (char& c : s)
                if (c == '[' || c == ']' || c == '{' || c == '}' || c == ',')
                    c = ' ';
            std::istringstream is(s);
            int v;
            while (is >> v)
                members.push_back(v);
            if (!is.eof())
                fail(key, "cannot read index set '" + key.Scalar() + "'");
        } else {
            fail(key, "index set must be a list such as [1, 2]");
        }
        if (static_cast<int>(members.size()) != k)
            fail(key, "index set must have k = " + std::to_string(k) + " members");
        for (std::size_t i = 0; i < members.size(); ++i)
            if (members[i] < 1 || members[i] > n || (i > 0 && members[i] <= members[i - 1]))
                fail(key, "index set members must be strictly increasing within [1, " + std::to_string(n) + "]");
        return IndexSet(members);
    }

    /// A scalar p (uniform) or a mapping of index sets with an optional `default`.
    ParamVector params(const YAML::Node& node, int n, int k) const
    {
        if (node.IsScalar())
            return ParamVector(n, k, probability(node, "parameter"));
        if (!node.IsMap())
            fail(node, "params must be a probability or a mapping of index sets");
        double fill = 1.0;
        bool have_default = false;
        for (const auto& kv : node)
            if (kv.first.IsScalar() && kv.first.Scalar() == "default") {
                fill = probability(kv.second, "default");
                have_default = true;
            }
        ParamVector p(n, k, fill);
        std::set<std::uint64_t> seen;
        for (const auto& kv : node) {
            if (kv.first.IsScalar() && kv.first.Scalar() == "default")
                continue;
            const IndexSet I = index_set(kv.first, n, k);
            if (!seen.insert(I.colex_rank()).second)
                fail(kv.first, "index set " + I.to_string() + " given twice");
            p.set(I, probability(kv.second, "p" + I.to_string()));
        }
        if (!have_default && seen.size() != p.size())
            fail(node, "params list " + std::to_string(seen.size()) + " of " + std::to_string(p.size()) +
                           " index sets; add the rest or a `default`");
        return p;
    }

    template <class T>
    std::vector<T> list(const YAML::Node& node, const std::string& what) const
    {
        if (!node.IsSequence())
            fail(node, what + " must be a list");
        std::vector<T> out;
        for (const auto& v : node)
            out.push_back(scalar<T>(v, what + " entry"));
        return out;
    }

private:
    std::string source_;
};

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>")
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw config_error(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    ExperimentConfig cfg;
    cfg.source = source;
    if (root.IsNull())
        return cfg;
    const detail::ConfigReader rd(source);
    rd.only_keys(root, {"n", "k", "seed", "params", "decay", "phase", "renorm", "verify", "critical"}, "config");

    if (root["n"])
        cfg.n = rd.scalar<int>(root["n"], "n");
    if (root["k"])
        cfg.k = rd.scalar<int>(root["k"], "k");
    if (cfg.n < 3 || cfg.n > kMaxDim)
        rd.fail(root["n"] ? root["n"] : root, "n must lie in [3, " + std::to_string(kMaxDim) + "]");
    if (cfg.k < 2 || cfg.k > cfg.n - 1)
        rd.fail(root["k"] ? root["k"] : root, "k must lie in [2, n - 1]");
    if (root["seed"])
        cfg.seed = rd.scalar<std::uint64_t>(root["seed"], "seed");
    cfg.params = root["params"] ? rd.params(root["params"], cfg.n, cfg.k) : ParamVector(cfg.n, cfg.k, 1.0);

    if (const YAML::Node d = root["decay"]) {
        rd.only_keys(d, {"radii", "trials", "truncated", "m_multiple", "margin", "expect"}, "decay");
        if (d["radii"]) {
            cfg.decay.radii = rd.list<Coord>(d["radii"], "decay.radii");
            for (std::size_t i = 0; i < cfg.decay.radii.size(); ++i)
                if (cfg.decay.radii[i] < 1 || (i > 0 && cfg.decay.radii[i] <= cfg.decay.radii[i - 1]))
                    rd.fail(d["radii"], "decay.radii must be positive and strictly increasing");
            if (cfg.decay.radii.empty())
                rd.fail(d["radii"], "decay.radii is empty");
        }
        if (d["trials"])
            cfg.decay.trials = rd.scalar<std::uint64_t>(d["trials"], "decay.trials");
        if (cfg.decay.trials < 100)
            rd.fail(d["trials"] ? d["trials"] : d, "decay.trials must be at least 100");
        if (d["truncated"])
            cfg.decay.truncated = rd.scalar<bool>(d["truncated"], "decay.truncated");
        if (d["m_multiple"])
            cfg.decay.m_multiple = rd.scalar<double>(d["m_multiple"], "decay.m_multiple");
        if (!(cfg.decay.m_multiple > 1.0))
            rd.fail(d["m_multiple"] ? d["m_multiple"] : d, "decay.m_multiple must exceed 1");
        if (d["margin"])
            cfg.decay.margin = rd.scalar<double>(d["margin"], "decay.margin");
        if (!(cfg.decay.margin >= 0.0))
            rd.fail(d["margin"] ? d["margin"] : d, "decay.margin must be nonnegative");
        if (d["expect"]) {
            cfg.decay.expect = rd.scalar<std::string>(d["expect"], "decay.expect");
            if (cfg.decay.expect != "POWER_LAW" && cfg.decay.expect != "EXPONENTIAL" &&
                cfg.decay.expect != "INCONCLUSIVE")
                rd.fail(d["expect"], "decay.expect must be POWER_LAW, EXPONENTIAL or INCONCLUSIVE");
        }
    }

    if (const YAML::Node ph = root["phase"]) {
        rd.only_keys(ph, {"k_probe", "trials", "grid"}, "phase");
        if (ph["k_probe"])
            cfg.phase.K_probe = rd.scalar<Coord>(ph["k_probe"], "phase.k_probe");
        if (cfg.phase.K_probe < 1)
            rd.fail(ph["k_probe"] ? ph["k_probe"] : ph, "phase.k_probe must be positive");
        if (ph["trials"])
            cfg.phase.trials = rd.scalar<std::uint64_t>(ph["trials"], "phase.trials");
        if (cfg.phase.trials < 1)
            rd.fail(ph["trials"] ? ph["trials"] : ph, "phase.trials must be positive");
        if (const YAML::Node g = ph["grid"]) {
            if (!g.IsSequence())
                rd.fail(g, "phase.grid must be a list of parameter vectors");
            for (const auto& row : g)
                cfg.phase.grid.push_back(rd.params(row, cfg.n, cfg.k));
        }
    }

    if (const YAML::Node r = root["renorm"]) {
        rd.only_keys(r, {"K", "N", "c_o", "M", "trials", "target", "calibration_trials"}, "renorm");
        if (r["K"])
            cfg.renorm.K = rd.scalar<Coord>(r["K"], "renorm.K");
        if (cfg.renorm.K < 2)
            rd.fail(r["K"] ? r["K"] : r, "renorm.K must be at least 2");
        if (r["N"])
            cfg.renorm.N = rd.scalar<Coord>(r["N"], "renorm.N");
        if (cfg.renorm.N < 0)
            rd.fail(r["N"], "renorm.N must be nonnegative");
        if (r["c_o"])
            cfg.renorm.c_o = rd.scalar<double>(r["c_o"], "renorm.c_o");
        if (!(cfg.renorm.c_o > 0.0))
            rd.fail(r["c_o"] ? r["c_o"] : r, "renorm.c_o must be positive");
        if (r["M"])
            cfg.renorm.M = rd.scalar<Coord>(r["M"], "renorm.M");
        if (cfg.renorm.M < 0)
            rd.fail(r["M"], "renorm.M must be nonnegative");
        if (r["trials"])
            cfg.renorm.trials = rd.scalar<std::uint64_t>(r["trials"], "renorm.trials");
        if (cfg.renorm.trials < 1)
            rd.fail(r["trials"] ? r["trials"] : r, "renorm.trials must be positive");
        if (r["target"])
            cfg.renorm.target = rd.probability(r["target"], "renorm.target");
        if (r["calibration_trials"])
            cfg.renorm.calibration_trials = rd.scalar<std::uint64_t>(r["calibration_trials"], "renorm.calibration_trials");
        if (cfg.renorm.calibration_trials < 1)
            rd.fail(r["calibration_trials"] ? r["calibration_trials"] : r,
                    "renorm.calibration_trials must be positive");
    }

    if (const YAML::Node v = root["verify"]) {
        rd.only_keys(v,
                     {"walk_instances", "separation_pairs", "max_n", "spiral_horizon", "wall_offsets",
                      "max_projected_sites", "factorization_trials"},
                     "verify");
        if (v["walk_instances"])
            cfg.verify.walk_instances = rd.scalar<std::uint64_t>(v["walk_instances"], "verify.walk_instances");
        if (v["separation_pairs"])
            cfg.verify.separation_pairs = rd.scalar<std::uint64_t>(v["separation_pairs"], "verify.separation_pairs");
        if (v["max_n"])
            cfg.verify.max_n = rd.scalar<int>(v["max_n"], "verify.max_n");
        if (cfg.verify.max_n < 3 || cfg.verify.max_n > kMaxDim)
            rd.fail(v["max_n"], "verify.max_n must lie in [3, " + std::to_string(kMaxDim) + "]");
        if (v["spiral_horizon"])
            cfg.verify.spiral_horizon = rd.scalar<std::int64_t>(v["spiral_horizon"], "verify.spiral_horizon");
        if (cfg.verify.spiral_horizon < 0)
            rd.fail(v["spiral_horizon"], "verify.spiral_horizon must be nonnegative");
        if (v["wall_offsets"])
            cfg.verify.wall_offsets = rd.scalar<Coord>(v["wall_offsets"], "verify.wall_offsets");
        if (cfg.verify.wall_offsets < 0)
            rd.fail(v["wall_offsets"], "verify.wall_offsets must be nonnegative");
        if (v["max_projected_sites"])
            cfg.verify.max_projected_sites = rd.scalar<std::size_t>(v["max_projected_sites"], "verify.max_projected_sites");
        if (cfg.verify.max_projected_sites > 16)
            rd.fail(v["max_projected_sites"], "verify.max_projected_sites above 16 is too slow to sweep");
        if (v["factorization_trials"])
            cfg.verify.factorization_trials =
                rd.scalar<std::uint64_t>(v["factorization_trials"], "verify.factorization_trials");
    }

    if (const YAML::Node c = root["critical"]) {
        rd.only_keys(c, {"site", "near_one"}, "critical");
        if (const YAML::Node s = c["site"]) {
            if (!s.IsMap())
                rd.fail(s, "critical.site must map k to p_c(Z^k)");
            for (const auto& kv : s) {
                const int kk = rd.scalar<int>(kv.first, "critical.site key");
                if (kk < 1)
                    rd.fail(kv.first, "critical.site keys must be positive dimensions");
                cfg.critical.site[kk] = rd.probability(kv.second, "p_c(Z^" + std::to_string(kk) + ")");
            }
        }
        if (c["near_one"])
            cfg.critical.near_one = rd.probability(c["near_one"], "critical.near_one");
    }
    if (!cfg.critical.site.count(cfg.k) || !cfg.critical.site.count(2))
        throw config_error(source + ": no critical value for Z^" + std::to_string(cfg.k) + " or Z^2");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw config_error(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace hyperperc

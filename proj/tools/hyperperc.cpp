// Command-line runner: decay, phase, verify, lift, renorm, basis.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperperc/config.hpp"
#include "hyperperc/hyperperc.hpp"

namespace hp = hyperperc;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kAuditFalsified = 2, kStatFalsified = 3 };

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::string out_dir;
    std::string format = "json";
};

struct Artifact {
    std::string name;
    std::string body;
    std::string extension;
};

std::string to_string(const hp::Rational& q)
{
    std::ostringstream os;
    os << q;
    return os.str();
}

std::string to_string(const hp::BigInt& v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

ordered_json site_json(const hp::Site& v)
{
    ordered_json a = ordered_json::array();
    for (hp::Coord c : v.coords())
        a.push_back(c);
    return a;
}

ordered_json params_json(const hp::ParamVector& p)
{
    ordered_json o = ordered_json::object();
    for (const hp::IndexSet& I : p.index_sets())
        o[I.to_string()] = p.get(I);
    return o;
}

class Runner {
public:
    Runner(Globals g, hp::ExperimentConfig cfg) : g_(std::move(g)), cfg_(std::move(cfg))
    {
        if (g_.seed)
            cfg_.seed = *g_.seed;
    }

    ordered_json header(const std::string& sub) const
    {
        ordered_json h;
        h["tool"] = "hyperperc";
        h["version"] = hp::kVersion;
        h["subcommand"] = sub;
        h["config"] = cfg_.source;
        h["config_hash"] = hp::hex64(cfg_.hash());
        h["seed"] = cfg_.seed;
        return h;
    }

    std::string csv_header(const std::string& sub) const
    {
        return "# tool=hyperperc version=" + std::string(hp::kVersion) + " subcommand=" + sub +
               " config_hash=" + hp::hex64(cfg_.hash()) + " seed=" + std::to_string(cfg_.seed) + "\n";
    }

    int decay()
    {
        hp::DecayOptions opt;
        opt.radii = cfg_.decay.radii;
        opt.trials = cfg_.decay.trials;
        opt.seed = cfg_.seed;
        opt.truncated = cfg_.decay.truncated;
        opt.m_multiple = cfg_.decay.m_multiple;
        opt.workers = g_.workers;
        const hp::DecayCurve curve = hp::estimate_decay_curve(cfg_.params, opt);
        const hp::Selection sel = hp::model_select(curve, cfg_.decay.margin);
        const std::string model = hp::model_name(sel.model);
        const bool expectation_met = cfg_.decay.expect.empty() || cfg_.decay.expect == model;

        if (g_.format == "csv") {
            std::ostringstream os;
            os << csv_header("decay");
            os << "# model=" << model << " delta_aic=" << sel.delta_aic << "\n";
            os << "params_hash,K,trials,successes,ci_lo,ci_hi\n";
            os << std::setprecision(17);
            for (const hp::DecayEntry& e : curve.entries)
                os << hp::params_hash(cfg_.params) << "," << e.K << "," << e.trials << "," << e.successes << ","
                   << e.ci_lo << "," << e.ci_hi << "\n";
            emit({"decay", os.str(), "csv"});
        } else {
            ordered_json j = header("decay");
            j["params"] = params_json(cfg_.params);
            j["params_hash"] = hp::params_hash(cfg_.params);
            j["truncated"] = curve.truncated;
            j["m_multiple"] = curve.m_multiple;
            ordered_json rows = ordered_json::array();
            for (const hp::DecayEntry& e : curve.entries)
                rows.push_back({{"K", e.K},
                                {"trials", e.trials},
                                {"successes", e.successes},
                                {"p_hat", e.p_hat},
                                {"ci_lo", e.ci_lo},
                                {"ci_hi", e.ci_hi}});
            j["curve"] = rows;
            auto fit_json = [](const std::optional<hp::FitReport>& f) -> ordered_json {
                if (!f)
                    return nullptr;
                return {{"model", hp::model_name(f->model)},
                        {"amplitude", f->amplitude},
                        {"exponent", f->exponent},
                        {"gof", f->gof},
                        {"aic", f->aic},
                        {"points", f->points}};
            };
            j["fits"] = {{"power_law", fit_json(sel.power)}, {"exponential", fit_json(sel.exponential)}};
            j["model"] = model;
            j["delta_aic"] = sel.delta_aic;
            j["margin"] = cfg_.decay.margin;
            j["reason"] = sel.reason;
            if (!cfg_.decay.expect.empty())
                j["expect"] = {{"model", cfg_.decay.expect}, {"met", expectation_met}};
            emit({"decay", j.dump(2) + "\n", "json"});
        }
        return expectation_met ? kOk : kStatFalsified;
    }

    int phase()
    {
        std::vector<hp::ParamVector> grid = cfg_.phase.grid;
        if (grid.empty())
            grid.push_back(cfg_.params);
        hp::PhaseOptions opt;
        opt.K_probe = cfg_.phase.K_probe;
        opt.trials = cfg_.phase.trials;
        opt.seed = cfg_.seed;
        opt.workers = g_.workers;
        opt.critical = cfg_.critical;
        const auto rows = hp::phase_scan(grid, opt);
        if (g_.format == "csv") {
            std::ostringstream os;
            os << csv_header("phase") << std::setprecision(17);
            os << "params_hash,K,trials,successes,ci_lo,ci_hi,tags\n";
            for (const hp::PhaseRow& r : rows) {
                std::string tags;
                for (const std::string& t : r.tags)
                    tags += (tags.empty() ? "" : ";") + t;
                os << hp::params_hash(r.params) << "," << opt.K_probe << "," << r.trials << "," << r.successes << ","
                   << r.ci.lo << "," << r.ci.hi << "," << tags << "\n";
            }
            emit({"phase", os.str(), "csv"});
        } else {
            ordered_json j = header("phase");
            j["K_probe"] = opt.K_probe;
            ordered_json out = ordered_json::array();
            for (const hp::PhaseRow& r : rows)
                out.push_back({{"params", params_json(r.params)},
                               {"params_hash", hp::params_hash(r.params)},
                               {"trials", r.trials},
                               {"successes", r.successes},
                               {"frequency", r.frequency},
                               {"ci_lo", r.ci.lo},
                               {"ci_hi", r.ci.hi},
                               {"tags", r.tags}});
            j["rows"] = out;
            emit({"phase", j.dump(2) + "\n", "json"});
        }
        return kOk;
    }

    int verify()
    {
        ordered_json audits = ordered_json::array();
        bool all_ok = true;
        auto record = [&](const std::string& name, bool ok, ordered_json detail) {
            all_ok = all_ok && ok;
            audits.push_back({{"audit", name}, {"ok", ok}, {"detail", std::move(detail)}});
        };
        const auto& v = cfg_.verify;

        {
            const hp::FactorizationReport r = hp::bt_factorization_exhaustive_all(v.max_projected_sites);
            record("bt_factorization_exhaustive", r.ok(),
                   {{"max_projected_sites", v.max_projected_sites},
                    {"configurations", r.configurations},
                    {"both_sides_true", r.rhs_true},
                    {"lifts_audited", r.lifts_audited},
                    {"counterexamples", r.counterexamples}});
        }
        if (cfg_.k == 2) {
            const hp::Box B(hp::Site(cfg_.n), [&] {
                hp::Site hi(cfg_.n);
                hi[0] = 3;
                for (int i = 1; i < cfg_.n; ++i)
                    hi[i] = 2;
                return hi;
            }());
            const hp::ParamVector p(cfg_.n, 2, 0.6);
            const hp::FactorizationReport r = hp::bt_factorization_check(B, p, v.factorization_trials, cfg_.seed);
            record("bt_factorization_random", r.ok(),
                   {{"configurations", r.configurations},
                    {"both_sides_true", r.rhs_true},
                    {"lifts_audited", r.lifts_audited},
                    {"counterexamples", r.counterexamples}});
        }
        {
            std::mt19937_64 rng(hp::derive_seed(cfg_.seed, 1));
            std::uint64_t schedules_ok = 0, parity_ok = 0;
            for (std::uint64_t i = 0; i < v.walk_instances; ++i) {
                const int m = 2 + static_cast<int>(rng() % 3);
                const hp::Coord N = static_cast<hp::Coord>(rng() % 5);
                std::vector<hp::HeightWalk> walks;
                for (int w = 0; w < m; ++w)
                    walks.push_back(hp::random_height_walk(rng, N, 10));
                schedules_ok += hp::check_schedule(walks, hp::sync_walks(walks));
                parity_ok += hp::degree_parity_audit(hp::build_sync_graph(walks)).ok;
            }
            record("synchronized_walks",
                   schedules_ok == v.walk_instances && parity_ok == v.walk_instances,
                   {{"instances", v.walk_instances}, {"schedules_valid", schedules_ok}, {"parity_ok", parity_ok}});
        }
        for (int n = 3; n <= v.max_n; ++n) {
            const hp::InclinedBasis b = hp::build_inclined_basis(n);
            bool injective = true;
            for (const hp::IndexSet& I : hp::all_index_sets(n, 2))
                injective = injective && hp::injectivity_certificate(b, I).injective;
            ordered_json per_k = ordered_json::array();
            bool sep_ok = true;
            for (int k = 2; k <= n - 1; ++k) {
                const hp::Rational c = hp::separation_constant(b, k);
                const hp::SeparationAudit a =
                    hp::separation_audit(b, k, c, v.separation_pairs, 1000, hp::derive_seed(cfg_.seed, 100 + n));
                const hp::DisjointnessAudit d = hp::support_disjointness_audit(b, k, 3 * b.R / c, 3);
                sep_ok = sep_ok && c > 0 && a.violations == 0 && d.violations == 0;
                per_k.push_back({{"k", k},
                                 {"c", to_string(c)},
                                 {"pairs", a.pairs},
                                 {"violations", a.violations},
                                 {"disjointness_offsets", d.offsets},
                                 {"disjointness_violations", d.violations}});
            }
            const bool ok = hp::verify_factorization(b) && injective && sep_ok;
            record("inclined_basis_n" + std::to_string(n), ok,
                   {{"w1", site_json(b.w1)},
                    {"w2", site_json(b.w2)},
                    {"R", b.R},
                    {"injective_all_pairs", injective},
                    {"separation", per_k}});
        }
        for (int n : {3, 4})
            for (hp::Coord N : {1, 2, 3}) {
                const hp::IndependenceReport r = hp::independence_radius_audit(n, N, v.spiral_horizon, v.wall_offsets);
                record("independence_radius_n" + std::to_string(n) + "_N" + std::to_string(N), r.ok(),
                       {{"pairs_checked", r.pairs_checked},
                        {"violations", r.violations.size()},
                        {"near_overlapping", r.near_overlapping}});
            }
        {
            const hp::ParamVector p(3, 2, 0.5);
            std::uint64_t ok_count = 0, fibers = 0;
            for (std::uint64_t i = 0; i < 100; ++i) {
                const hp::HyperplaneField f(p, hp::derive_seed(cfg_.seed, 1000 + i));
                const hp::IndexSet I = p.index_sets()[i % p.size()];
                const hp::Site x{static_cast<hp::Coord>(i % 7) - 3, static_cast<hp::Coord>(i % 5) - 2};
                ++fibers;
                ok_count += hp::column_structure_check(hp::FieldView::full(f), I, x, hp::Box::ball(3, 6));
            }
            record("column_structure", ok_count == fibers, {{"fibers", fibers}, {"ok", ok_count}});
        }
        {
            hp::ParamVector p(4, 2, 1.0);
            p.set({1, 2}, 0.3).set({1, 3}, 0.7).set({1, 4}, 0.7);
            std::uint64_t found = 0, sound = 0;
            for (std::uint64_t i = 0; i < 20; ++i) {
                const hp::HyperplaneField f(p, hp::derive_seed(cfg_.seed, 2000 + i));
                const hp::FieldView view = hp::FieldView::full(f);
                const auto cert = hp::finiteness_certificate_check(view, {1, 2}, hp::Box::ball(4, 12));
                if (!cert)
                    continue;
                ++found;
                const hp::IndexSet Ic{3, 4};
                auto closed = [&](const hp::Site& t) {
                    for (const hp::Site& x : cert->cluster)
                        if (view.omega(hp::combine(4, {1, 2}, x, Ic, t)))
                            return false;
                    return true;
                };
                const bool valid = hp::verify_surround(cert->surround, closed);
                const bool finite = !hp::probe_origin(view, 12).reached;
                sound += valid && finite;
            }
            record("finiteness_certificate_soundness", sound == found, {{"seeds", 20}, {"found", found}, {"sound", sound}});
        }

        ordered_json j = header("verify");
        j["audits"] = audits;
        j["all_ok"] = all_ok;
        emit({"verify", j.dump(2) + "\n", "json"});
        return all_ok ? kOk : kAuditFalsified;
    }

    int lift(const std::string& input)
    {
        std::ifstream in(input);
        if (!in)
            throw hp::invalid_argument(input + ": cannot open lift input");
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw hp::invalid_argument(input + ": " + e.what());
        }
        ordered_json j = header("lift");
        j["input"] = input;
        int status = kOk;
        if (doc.contains("walks")) {
            const hp::Coord N = doc.at("N").get<hp::Coord>();
            const hp::WalkCheck check =
                doc.value("relaxed", false) ? hp::WalkCheck::endpoints : hp::WalkCheck::strict;
            std::vector<hp::HeightWalk> walks;
            for (const auto& w : doc.at("walks"))
                walks.emplace_back(w.get<std::vector<hp::Coord>>(), N, check);
            const hp::SyncSchedule s = hp::sync_walks(walks);
            const hp::ParityReport par = hp::degree_parity_audit(hp::build_sync_graph(walks));
            const bool ok = hp::check_schedule(walks, s);
            j["schedule"] = {{"T", s.T}, {"f", s.f}, {"conditions_hold", ok}};
            j["parity"] = {{"ok", par.ok}, {"vertices", par.vertices}, {"edges", par.edges}};
            if (!ok || !par.ok)
                status = kAuditFalsified;
        }
        if (doc.contains("crossings")) {
            const auto lo = doc.at("box").at("lo").get<std::vector<hp::Coord>>();
            const auto hi = doc.at("box").at("hi").get<std::vector<hp::Coord>>();
            const hp::Box B{hp::Site(std::span<const hp::Coord>(lo)), hp::Site(std::span<const hp::Coord>(hi))};
            std::vector<hp::ProjectedCrossing> crossings;
            for (const auto& c : doc.at("crossings")) {
                hp::ProjectedCrossing pc;
                pc.j = c.at("j").get<int>();
                for (const auto& pt : c.at("path"))
                    pc.path.emplace_back(pt.at(0).get<hp::Coord>(), pt.at(1).get<hp::Coord>());
                crossings.push_back(std::move(pc));
            }
            const std::vector<hp::Site> path = hp::lift_crossings(crossings, B);
            // open in plane {1,j} iff the point lies on that plane's crossing
            auto on_crossing = [&](int jj, hp::Coord h, hp::Coord x) {
                const auto& pts = crossings[static_cast<std::size_t>(jj - 2)].path;
                return std::find(pts.begin(), pts.end(), hp::Point2{h, x}) != pts.end();
            };
            const bool ok = hp::audit_lifted_path(path, B, crossings.front().base(), crossings.front().N(), on_crossing);
            ordered_json p = ordered_json::array();
            for (const hp::Site& s : path)
                p.push_back(site_json(s));
            j["path"] = p;
            j["audit_ok"] = ok;
            if (!ok)
                status = kAuditFalsified;
        }
        if (!doc.contains("walks") && !doc.contains("crossings"))
            throw hp::invalid_argument(input + ": expected a 'walks' or a 'crossings' entry");
        emit({"lift", j.dump(2) + "\n", "json"});
        return status;
    }

    int renorm()
    {
        if (cfg_.k != 2)
            throw hp::invalid_argument("renorm needs k = 2");
        ordered_json j = header("renorm");
        hp::Coord N = cfg_.renorm.N;
        if (N == 0) {
            const hp::Calibration cal = hp::calibrate_box_size(cfg_.params, cfg_.renorm.target,
                                                               cfg_.renorm.calibration_trials, cfg_.seed, g_.workers);
            N = cal.N;
            ordered_json hist = ordered_json::array();
            for (auto [n, f] : cal.history)
                hist.push_back({{"N", n}, {"good_frequency", f}});
            j["calibration"] = {{"target", cfg_.renorm.target}, {"reached", cal.reached}, {"history", hist}};
        }
        hp::Theorem3Options opt;
        opt.K = cfg_.renorm.K;
        opt.N = N;
        opt.c_o = cfg_.renorm.c_o;
        opt.M = cfg_.renorm.M;
        opt.trials = cfg_.renorm.trials;
        opt.seed = cfg_.seed;
        opt.workers = g_.workers;
        const hp::Theorem3Report r = hp::theorem3_event_diagnostics(cfg_.params, opt);
        j["geometry"] = {{"K", r.K}, {"N", r.N}, {"c_o", r.c_o}, {"T", r.T}, {"L", r.L}, {"M", r.M}};
        ordered_json ev = ordered_json::array();
        for (const hp::EventRecord& e : r.events)
            ev.push_back({{"event", e.name},
                          {"trials", e.trials},
                          {"successes", e.successes},
                          {"ci_lo", e.ci.lo},
                          {"ci_hi", e.ci.hi}});
        j["events"] = ev;
        j["audits"] = {{"o123_samples", r.o123},
                       {"o123_without_connection", r.o123_violations},
                       {"o123_without_connection_closed_origin", r.o123_violations_closed_origin},
                       {"o45_samples", r.o45},
                       {"o45_cluster_escapes", r.o45_violations}};
        emit({"renorm", j.dump(2) + "\n", "json"});
        // O1, O2, O3 say nothing about omega_{1j} at the origin, so a closed origin is tolerated
        const bool ok = r.o45_violations == 0 && r.o123_violations == r.o123_violations_closed_origin;
        return ok ? kOk : kAuditFalsified;
    }

    int basis(int n)
    {
        const hp::InclinedBasis b = hp::build_inclined_basis(n);
        const hp::AppendixMaps m = hp::appendix_maps(n);
        ordered_json j = header("basis");
        j["n"] = n;
        j["v1"] = site_json(m.v1);
        j["v2"] = site_json(m.v2);
        ordered_json w1t = ordered_json::array(), w2t = ordered_json::array();
        for (const auto& q : b.w1_tilde)
            w1t.push_back(to_string(q));
        for (const auto& q : b.w2_tilde)
            w2t.push_back(to_string(q));
        j["w1_tilde"] = w1t;
        j["w2_tilde"] = w2t;
        j["w1"] = site_json(b.w1);
        j["w2"] = site_json(b.w2);
        j["R"] = b.R;
        j["factorization_ok"] = hp::verify_factorization(b);
        ordered_json dets = ordered_json::array();
        bool injective = true;
        for (const hp::IndexSet& I : hp::all_index_sets(n, 2)) {
            const hp::InjectivityReport r = hp::injectivity_certificate(b, I);
            injective = injective && r.injective;
            dets.push_back({{"I", I.to_string()}, {"det", to_string(r.min_abs_det)}});
        }
        j["determinants"] = dets;
        ordered_json per_k = ordered_json::array();
        for (int k = 2; k <= n - 1; ++k) {
            const hp::Rational c = hp::separation_constant(b, k);
            ordered_json row{{"k", k}, {"c", to_string(c)}, {"chi", to_string(3 * b.R / c)}};
            if (cfg_.n == n && cfg_.k == k)
                row["s"] = hp::class_c_params(b, cfg_.params, k).s;
            per_k.push_back(row);
        }
        j["separation"] = per_k;
        emit({"basis", j.dump(2) + "\n", "json"});
        return injective && j["factorization_ok"].get<bool>() ? kOk : kAuditFalsified;
    }

    void set_start(std::chrono::steady_clock::time_point t) { start_ = t; }

private:
    void emit(const Artifact& a)
    {
        std::cout << a.body;
        if (g_.out_dir.empty())
            return;
        std::filesystem::create_directories(g_.out_dir);
        const std::filesystem::path dir(g_.out_dir);
        std::ofstream(dir / (a.name + "." + a.extension)) << a.body;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        ordered_json m = header(a.name);
        m["artifact"] = a.name + "." + a.extension;
        m["workers"] = g_.workers;
        m["wall_clock_seconds"] = secs;
        std::ofstream(dir / (a.name + ".manifest.json")) << m.dump(2) << "\n";
    }

    Globals g_;
    hp::ExperimentConfig cfg_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bernoulli hyperplane percolation experiments and audits"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "YAML experiment config");
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    app.add_option("--workers", g.workers, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--out-dir", g.out_dir, "write artifacts and a run manifest here");
    app.add_option("--format", g.format, "artifact format")->check(CLI::IsMember({"csv", "json"}));

    app.add_subcommand("decay", "decay curve, power-law and exponential fits, model selection");
    app.add_subcommand("phase", "connection frequency over a parameter grid with regime tags");
    app.add_subcommand("verify", "deterministic audits of the constructive lemmas");
    std::string lift_input;
    auto* lift = app.add_subcommand("lift", "synchronize walks or lift crossings from a JSON file");
    lift->add_option("--input", lift_input, "JSON input")->required();
    app.add_subcommand("renorm", "wall event frequencies and implication audits");
    int basis_n = 0;
    auto* basis = app.add_subcommand("basis", "inclined-plane basis and certificates");
    basis->add_option("--n", basis_n, "ambient dimension (default: config n)")->check(CLI::Range(3, hp::kMaxDim));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    if (*seed_opt)
        g.seed = seed;

    try {
        hp::ExperimentConfig cfg = g.config_path.empty() ? hp::ExperimentConfig{} : hp::load_config(g.config_path);
        Runner run(g, cfg);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "decay")
            return run.decay();
        if (sub == "phase")
            return run.phase();
        if (sub == "verify")
            return run.verify();
        if (sub == "lift")
            return run.lift(lift_input);
        if (sub == "renorm")
            return run.renorm();
        if (sub == "basis")
            return run.basis(basis_n ? basis_n : cfg.n);
    } catch (const hp::falsified_error& e) {
        std::cerr << "falsified: " << e.what() << "\n";
        return kAuditFalsified;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

#include "infra/cli.hpp"

#include "infra/backends.hpp"
#include "infra/dlog.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

namespace infra {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamGeomsum = 5;
constexpr std::uint64_t kStreamCoprime = 6;

class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CertificationFailed : public std::runtime_error {
public:
    CertificationFailed(std::string msg, json detail) : std::runtime_error(std::move(msg)), detail(std::move(detail)) {}
    json detail;
};

json seed_scheme(std::uint64_t seed) {
    return {{"root", seed},
            {"derivation", "splitmix64 over (root, stream, index); each trial owns one derived seed"},
            {"streams",
             {{"1", "circumference shift draws"},
              {"2", "circumference trial i"},
              {"3", "dlog trial i"},
              {"4", "dlog shift draws"},
              {"5", "geometric-sum sweep"},
              {"6", "coprime sweep"}}}};
}

std::string dec(const ScaledReal& x, int digits = 12) { return x.to_decimal(digits); }

json verdict(std::string name, bool pass, std::string detail = "") {
    json v = {{"name", std::move(name)}, {"pass", pass}};
    if (!detail.empty()) v["detail"] = std::move(detail);
    return v;
}

// exact circular distance test modulo R
bool within_circular(const ScaledReal& a, const ScaledReal& b, const ScaledReal& R, const ScaledReal& tol) {
    const ScaledReal t = mod_reduce(a - b, R);
    return std::min(t, R - t) <= tol;
}

std::shared_ptr<const Infrastructure> build_backend(const json& spec, json& report) {
    std::shared_ptr<const Infrastructure> infra;
    try {
        infra = spec.is_string() ? make_backend(spec.get<std::string>()) : make_backend_json(spec);
    } catch (const std::invalid_argument& e) {
        throw BackendConfigError(e.what());
    }
    report["backend"] = spec.is_string() ? backend_json(spec.get<std::string>()) : spec;
    report["backend"]["kind"] = infra->kind();
    const auto& p = infra->params();
    report["backend"]["witnesses"] = {{"d_min_lower", p.d_min_lower.to_string()},
                                      {"d_max_upper", p.d_max_upper.to_string()},
                                      {"k_bar", p.k_bar},
                                      {"d_k_bar", p.d_k_bar.to_string()},
                                      {"R_upper", p.R_upper.to_string()}};
    if (auto* e = dynamic_cast<const ExactInfrastructure*>(infra.get())) {
        const auto cert = certify_assumptions(*e);
        report["backend"]["certified"] = cert.ok;
        if (!cert.ok) throw CertificationFailed("backend witness constants do not hold", cert.violations);
    } else {
        report["backend"]["certified"] = "cycle enumeration at construction";
    }
    return infra;
}

CircumferenceConfig circ_config(const RunConfig& c) {
    CircumferenceConfig cc;
    cc.delta = ScaledReal::parse(c.delta);
    cc.seed = c.seed;
    cc.trials_cap = c.trials_cap;
    cc.target_S = c.target_S;
    cc.q_power_of_two = c.q_power_of_two;
    cc.max_q = c.max_q;
    return cc;
}

json circ_json(const CircumferenceResult& r) {
    json j = {{"success", r.success}, {"trials_used", r.trials_used}, {"N", r.N}, {"q", r.q}, {"L", r.L},
              {"j", r.j},           {"m", r.m},                     {"shift_switches", r.shift_switches},
              {"zero_resamples", r.zero_resamples}};
    if (r.success) {
        j["R_hat"] = r.R_hat.to_string();
        j["R_hat_decimal"] = dec(r.R_hat);
        j["accepted_candidate"] = r.accepted_candidate.get_str();
        j["divisor"] = r.divisor;
        j["witness"] = r.witness;
    } else {
        j["failure"] = r.failure;
    }
    return j;
}

CircumferenceSizes sizes_or_cap(const Infrastructure& infra, const CircumferenceConfig& cc) {
    try {
        return circumference_sizes(infra.params(), cc);
    } catch (const std::invalid_argument& e) {
        throw CapExceeded(e.what());
    }
}

void write_trace(const RunConfig& c, const std::vector<double>& dist, const std::string& what, json& report) {
    if (c.trace_path.empty()) return;
    const std::size_t n = std::min<std::size_t>(dist.size(), static_cast<std::size_t>(std::max<std::int64_t>(c.trace_cap, 0)));
    std::ofstream f(c.trace_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace file " + c.trace_path);
    f.write(reinterpret_cast<const char*>(dist.data()), static_cast<std::streamsize>(n * sizeof(double)));
    report["trace"] = {{"path", c.trace_path},    {"content", what},          {"format", "float64 native byte order"},
                       {"entries", n},            {"total", dist.size()},     {"truncated", n < dist.size()}};
}

void run_circumference(const RunConfig& c, json& rep) {
    auto infra = build_backend(c.backend, rep);
    const auto cc = circ_config(c);
    const auto sz = sizes_or_cap(*infra, cc);
    const auto r = circumference_pipeline(*infra, cc);
    rep["result"] = circ_json(r);
    rep["bounds"].push_back({{"formula", "psuccess"},
                             {"S", sz.M},
                             {"q", sz.q},
                             {"analytic", bound_psuccess_circ(static_cast<double>(sz.M), static_cast<double>(sz.q))},
                             {"empirical_single_trial", r.trials_used > 0 ? 1.0 / static_cast<double>(r.trials_used) : 0.0}});
    if (!r.success) {
        rep["verdicts"].push_back(verdict("converged", false, r.failure));
        if (r.failure.find("exhausted") != std::string::npos) throw CapExceeded(r.failure);
        return;
    }
    rep["verdicts"].push_back(verdict("converged", true));
    if (auto* e = dynamic_cast<const ExactInfrastructure*>(infra.get())) {
        const ScaledReal err = abs(r.R_hat - e->oracle_circumference());
        rep["verdicts"].push_back(verdict("oracle |R - R_hat| <= delta", err <= cc.delta, "error " + dec(err)));
    }
    if (!c.trace_path.empty()) {
        CircumferenceSampler smp(*infra, cc);
        auto tr = smp.run_trial(0);
        FourierSampler1D fs;
        write_trace(c, fs.distribution(tr.s1), "outcome distribution of the first state of trial 0", rep);
    }
}

DlogConfig dlog_config(const RunConfig& c) {
    DlogConfig dc;
    dc.seed = c.seed;
    dc.delta = ScaledReal::parse(c.delta);
    dc.q_override = c.q_override;
    dc.min_B = c.min_B;
    dc.k_max = c.k_max;
    dc.cell_cap = c.cell_cap;
    dc.max_trials = c.max_trials;
    dc.kappa_grid = c.kappa_grid;
    dc.engine = parse_engine(c.engine);
    dc.circumference = circ_config(c);
    if (c.circumference_hint) dc.circumference_hint = ScaledReal::parse(*c.circumference_hint);
    return dc;
}

void run_dlog(const RunConfig& c, json& rep) {
    auto infra = build_backend(c.backend, rep);
    const Element x = parse_element_spec(*infra, c.target);
    const auto dc = dlog_config(c);
    if (!dc.circumference_hint) sizes_or_cap(*infra, dc.circumference);
    DlogResult r;
    try {
        r = dlog_pipeline(*infra, x, dc);
    } catch (const TransformTooLarge& e) {
        throw CapExceeded(e.what());
    } catch (const MaxTrialsExceeded& e) {
        throw CapExceeded(e.what());
    }
    const auto& P = r.params;
    json res = {{"target", infra->format(x)},
                {"success", r.success},
                {"trials", r.trials},
                {"filtered", r.filtered},
                {"not_coprime", r.not_coprime},
                {"verify_failed", r.verify_failed},
                {"shift_switches", r.shift_switches},
                {"j", r.j},
                {"params",
                 {{"M", P.M}, {"N", P.N}, {"B", P.B}, {"A", P.A}, {"L", P.L}, {"q", P.q}, {"c", P.c},
                  {"R_hat", P.R_hat.to_string()}, {"epsilon", P.epsilon.to_string()}, {"m", P.m},
                  {"k_max", P.k_max}, {"k_filter_relaxed", P.k_filter_relaxed}, {"kappa", P.kappa},
                  {"engine", to_string(P.engine)}}}};
    if (r.circumference) res["circumference"] = circ_json(*r.circumference);
    if (r.success) {
        res["d_hat"] = r.d_hat.to_string();
        res["d_hat_decimal"] = dec(r.d_hat);
        res["d_refined"] = r.d_refined.to_string();
        res["d_refined_decimal"] = dec(r.d_refined);
        res["samples"] = {{{"h", r.s1.h}, {"k", r.s1.k}, {"probability", r.s1.probability}},
                          {{"h", r.s2.h}, {"k", r.s2.k}, {"probability", r.s2.probability}}};
        res["bezout"] = {{"s", r.s.get_str()}, {"t", r.t.get_str()}};
    } else {
        res["failure"] = r.failure;
    }
    rep["result"] = res;
    if (P.B > 0) {
        rep["bounds"].push_back({{"formula", "dlog"}, {"kappa", P.kappa}, {"analytic", P.bound}});
        if (P.bound_simplified)
            rep["bounds"].push_back(
                {{"formula", "dlog-simplified"}, {"kappa", *P.kappa_simplified}, {"analytic", *P.bound_simplified}});
    }
    if (!r.success) {
        rep["verdicts"].push_back(verdict("converged", false, r.failure));
        if (r.failure.find("exhausted") != std::string::npos || r.failure.find("cap") != std::string::npos)
            throw CapExceeded(r.failure);
        return;
    }
    rep["verdicts"].push_back(verdict("converged", true));
    if (auto* e = dynamic_cast<const ExactInfrastructure*>(infra.get())) {
        const ScaledReal R = e->oracle_circumference(), d = e->oracle_distance(x);
        rep["verdicts"].push_back(verdict("oracle |d_x - d_hat| <= 1", within_circular(r.d_hat, d, R, ScaledReal(1))));
        rep["verdicts"].push_back(
            verdict("oracle |d_x - d_refined| <= delta", within_circular(r.d_refined, d, R, dc.delta)));
    }
    if (!c.trace_path.empty() && P.engine != DlogEngine::ExactLine) {
        DlogSampler smp(*infra, x, P, ShiftedGrid{P.N, P.L, r.j}, dc.cell_cap);
        write_trace(c, fourier_conditional_h(smp.fiber_of(0, 0), P.A, P.B, 1),
                    "distribution of h given k = 1 on the fiber of (0, 0)", rep);
    }
}

void run_pell(const RunConfig& c, json& rep) {
    if (c.D < 2) throw std::invalid_argument("pell: --D must be a non-square integer >= 2");
    QuadraticInfra q(c.D);
    rep["backend"] = {{"type", "quadratic"}, {"D", c.D}};
    const auto cc = circ_config(c);
    sizes_or_cap(q, cc);
    const auto r = circumference_pipeline(q, cc);
    if (!r.success) {
        rep["result"] = {{"D", c.D}, {"circumference", circ_json(r)}};
        rep["verdicts"].push_back(verdict("converged", false, r.failure));
        if (r.failure.find("exhausted") != std::string::npos) throw CapExceeded(r.failure);
        return;
    }
    const PellSolution s = pell_solution(c.D, r.R_hat);
    const PellSolution p = pell_plus_one(s, c.D);
    const FieldRegulator fr = field_regulator(c.D, s);
    rep["result"] = {{"D", c.D},
                     {"regulator", fr.value},
                     {"pell_x", s.x.get_str()},
                     {"pell_y", s.y.get_str()},
                     {"norm", s.norm},
                     {"pell_plus_one", {{"x", p.x.get_str()}, {"y", p.y.get_str()}}},
                     {"unit_index", fr.index},
                     {"circumference", circ_json(r)}};
    const BigInt D(static_cast<long>(c.D));
    rep["verdicts"].push_back(verdict("converged", true));
    rep["verdicts"].push_back(verdict("x^2 - D y^2 = norm", s.x * s.x - D * s.y * s.y == s.norm && std::abs(s.norm) == 1));
    rep["verdicts"].push_back(verdict("x+^2 - D y+^2 = 1", p.x * p.x - D * p.y * p.y == 1));
}

void run_verify(const RunConfig& c, json& rep) {
    if (c.trials < 1) throw std::invalid_argument("verify: --trials must be positive");
    if (c.verify_what == "geomsum") {
        Rng rng = make_rng(c.seed, kStreamGeomsum);
        std::int64_t made = 0, violations = 0, attempts = 0;
        json examples = json::array();
        auto check = [&](const GeomSumInstance& g) {
            if (geomsum_violation(g).empty() && geomsum_lhs(g) + 1e-9 >= geomsum_rhs(g)) return;
            ++violations;
            if (examples.size() < 10) examples.push_back({{"n", g.n}, {"delta", g.delta}, {"J", g.J}, {"theta", g.theta}});
        };
        while (made < c.trials) {
            GeomSumInstance g;
            const std::int64_t n = 2 + uniform_below(rng, 500);
            const double delta = 0.95 * uniform01(rng);
            if (!random_geomsum_instance(rng, n, delta, ++attempts % 2 == 0, g)) continue;
            ++made;
            check(g);
        }
        std::int64_t grid = 0, inadmissible = 0;
        for (int d = 0; d <= 9; ++d)
            for (bool prefix : {true, false})
                for (std::int64_t n : {8, 32, 128, 512, 2048}) {
                    GeomSumInstance g;
                    if (!random_geomsum_instance(rng, n, d / 10.0, prefix, g)) {
                        ++inadmissible;
                        continue;
                    }
                    ++grid;
                    check(g);
                }
        rep["result"] = {{"random_instances", made}, {"grid_instances", grid},     {"grid_inadmissible", inadmissible},
                         {"violations", violations}, {"counterexamples", examples}, {"slack", 1e-9}};
        rep["verdicts"].push_back(verdict("no counterexample", violations == 0));
    } else if (c.verify_what == "coprime") {
        Rng rng = make_rng(c.seed, kStreamCoprime);
        const auto r = coprime_experiment(c.coprime_N, c.trials, rng);
        rep["result"] = {{"N", c.coprime_N}, {"trials", r.trials}, {"coprime", r.successes},
                         {"frequency", r.empirical}, {"limit_6_over_pi2", 6 / (M_PI * M_PI)},
                         {"analytic_floor", kCoprimeFloor}};
        rep["verdicts"].push_back(verdict("frequency >= 1/2", r.pass));
    } else {
        throw std::invalid_argument("verify: expected geomsum or coprime");
    }
}

void run_bounds(const RunConfig& c, json& rep) {
    json r = {{"formula", c.formula}};
    if (c.formula == "psuccess") {
        r["S"] = c.S;
        r["q"] = c.q;
        r["value"] = bound_psuccess_circ(c.S, c.q);
    } else if (c.formula == "psuccess-limit") {
        r["value"] = bound_psuccess_circ_limit();
    } else if (c.formula == "periodic") {
        r.update({{"N", c.N}, {"R", c.R}, {"d_min", c.d_min}, {"q", c.q}});
        r["value"] = bound_periodic(c.N, c.R, c.d_min, c.q);
    } else if (c.formula == "dlog") {
        const auto k = bound_dlog(c.q, c.B, c.p_g, c.kappa_grid);
        r.update({{"q", c.q}, {"B", c.B}, {"p_g", c.p_g}, {"kappa", k.kappa}, {"value", k.value}});
    } else if (c.formula == "dlog-simplified") {
        const auto k = bound_dlog_simplified(c.p_g, c.kappa_grid);
        r.update({{"p_g", c.p_g}, {"kappa", k.kappa}, {"value", k.value}});
    } else {
        throw std::invalid_argument("bounds: unknown formula '" + c.formula + "'");
    }
    const double v = r["value"].get<double>();
    rep["result"] = r;
    rep["verdicts"].push_back(verdict("finite and non-negative", std::isfinite(v) && v >= 0));
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: object expected");
    static const std::set<std::string> known{
        "pipeline",  "verify",     "formula",    "backend",    "target",          "seed",   "delta",
        "D",         "trials",     "caps",       "knobs",      "circumference_hint", "S",   "q",
        "N",         "R",          "d_min",      "B",          "p_g",             "coprime_N", "output",
        "trace",     "trace_cap"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw std::invalid_argument("config: unknown field '" + k + "'");
    RunConfig c;
    try {
        c.pipeline = j.at("pipeline").get<std::string>();
        auto opt = [&](const char* key, auto& dst) {
            if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
        };
        opt("verify", c.verify_what);
        opt("formula", c.formula);
        opt("target", c.target);
        opt("seed", c.seed);
        opt("delta", c.delta);
        opt("D", c.D);
        opt("trials", c.trials);
        opt("S", c.S);
        opt("q", c.q);
        opt("N", c.N);
        opt("R", c.R);
        opt("d_min", c.d_min);
        opt("B", c.B);
        opt("p_g", c.p_g);
        opt("coprime_N", c.coprime_N);
        opt("output", c.report_path);
        opt("trace", c.trace_path);
        opt("trace_cap", c.trace_cap);
        if (j.contains("circumference_hint")) c.circumference_hint = j.at("circumference_hint").get<std::string>();
        if (j.contains("backend")) {
            c.backend = j.at("backend");
            if (!c.backend.is_string() && !c.backend.is_object())
                throw std::invalid_argument("config: backend must be a spec string or an object");
        }
        if (j.contains("caps")) {
            const auto& caps = j.at("caps");
            for (const auto& [k, v] : caps.items()) {
                if (k == "trials") c.trials_cap = c.max_trials = v.get<std::int64_t>();
                else if (k == "cells") c.cell_cap = v.get<std::int64_t>();
                else if (k == "max_q") c.max_q = v.get<std::int64_t>();
                else throw std::invalid_argument("config: unknown cap '" + k + "'");
            }
        }
        if (j.contains("knobs")) {
            for (const auto& [k, v] : j.at("knobs").items()) {
                if (k == "kappa_grid") c.kappa_grid = v.get<int>();
                else if (k == "k_max") c.k_max = v.get<std::int64_t>();
                else if (k == "q_power_of_two") c.q_power_of_two = v.get<bool>();
                else if (k == "min_B") c.min_B = v.get<std::int64_t>();
                else if (k == "q_override") c.q_override = v.get<std::int64_t>();
                else if (k == "engine") c.engine = v.get<std::string>();
                else if (k == "target_S") c.target_S = v.get<std::int64_t>();
                else throw std::invalid_argument("config: unknown knob '" + k + "'");
            }
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    static const std::set<std::string> pipelines{"circumference", "dlog", "pell", "verify", "bounds"};
    if (!pipelines.count(c.pipeline)) throw std::invalid_argument("config: unknown pipeline '" + c.pipeline + "'");
    if ((c.pipeline == "circumference" || c.pipeline == "dlog") && c.backend.is_null())
        throw std::invalid_argument("config: pipeline '" + c.pipeline + "' needs a backend");
    return c;
}

json run_config_to_json(const RunConfig& c) {
    json j = {{"pipeline", c.pipeline}, {"seed", c.seed}, {"delta", c.delta}};
    if (!c.backend.is_null()) j["backend"] = c.backend;
    if (c.pipeline == "dlog") j["target"] = c.target;
    if (c.pipeline == "pell") j["D"] = c.D;
    if (c.pipeline == "verify") {
        j["verify"] = c.verify_what;
        j["trials"] = c.trials;
        if (c.verify_what == "coprime") j["coprime_N"] = c.coprime_N;
    }
    if (c.pipeline == "bounds") {
        j["formula"] = c.formula;
        j.update({{"S", c.S}, {"q", c.q}, {"N", c.N}, {"R", c.R}, {"d_min", c.d_min}, {"B", c.B}, {"p_g", c.p_g}});
    }
    j["caps"] = {{"trials", c.pipeline == "dlog" ? c.max_trials : c.trials_cap}, {"cells", c.cell_cap}, {"max_q", c.max_q}};
    j["knobs"] = {{"kappa_grid", c.kappa_grid}, {"k_max", c.k_max},       {"q_power_of_two", c.q_power_of_two},
                  {"min_B", c.min_B},           {"q_override", c.q_override}, {"engine", c.engine},
                  {"target_S", c.target_S}};
    if (c.circumference_hint) j["circumference_hint"] = *c.circumference_hint;
    return j;
}

json execute(const RunConfig& cfg) {
    json rep = {{"schema", "infra-experiment-report"},
                {"schema_version", kReportSchemaVersion},
                {"config", run_config_to_json(cfg)},
                {"seeds", seed_scheme(cfg.seed)},
                {"bounds", json::array()},
                {"verdicts", json::array()}};
    int code = kExitOk;
    try {
        if (cfg.pipeline == "circumference") run_circumference(cfg, rep);
        else if (cfg.pipeline == "dlog") run_dlog(cfg, rep);
        else if (cfg.pipeline == "pell") run_pell(cfg, rep);
        else if (cfg.pipeline == "verify") run_verify(cfg, rep);
        else if (cfg.pipeline == "bounds") run_bounds(cfg, rep);
        else throw std::invalid_argument("unknown pipeline '" + cfg.pipeline + "'");
    } catch (const CapExceeded& e) {
        code = kExitCapExceeded;
        rep["error"] = {{"kind", "cap exceeded"}, {"message", e.what()}};
    } catch (const CertificationFailed& e) {
        code = kExitCertification;
        rep["error"] = {{"kind", "certification"}, {"message", e.what()}, {"violations", e.detail}};
    } catch (const TransformTooLarge& e) {
        code = kExitCapExceeded;
        rep["error"] = {{"kind", "cap exceeded"}, {"message", e.what()}};
    } catch (const std::invalid_argument& e) {
        code = kExitSchemaError;
        rep["error"] = {{"kind", "invalid configuration"}, {"message", e.what()}};
    } catch (const std::exception& e) {
        code = kExitInternal;
        rep["error"] = {{"kind", "internal"}, {"message", e.what()}};
    }
    bool all = !rep["verdicts"].empty();
    for (const auto& v : rep["verdicts"]) all = all && v["pass"].get<bool>();
    if (code == kExitOk && !all) code = kExitVerdictFailed;
    rep["pass"] = code == kExitOk;
    rep["exit_code"] = code;
    return rep;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Infrastructure period and discrete-log simulator", "infra_cli"};
    app.require_subcommand(1);
    RunConfig c;
    std::string backend, config_path;

    auto common = [&](CLI::App* s) {
        s->add_option("--seed", c.seed, "root seed");
        s->add_option("--report", c.report_path, "write the JSON report here instead of stdout");
    };
    auto circ_opts = [&](CLI::App* s) {
        s->add_option("--delta", c.delta, "accuracy (decimal or p/q)");
        s->add_option("--trials-cap", c.trials_cap, "circumference trials cap (0: 50 / bound)");
        s->add_option("--target-S", c.target_S, "raise N until N * R_upper reaches this");
        s->add_option("--max-q", c.max_q, "cap on the transform size q");
        s->add_flag("!--no-q-pow2", c.q_power_of_two, "use q = M^2 instead of the next power of two");
        s->add_option("--trace", c.trace_path, "dump one outcome distribution (float64) to this file");
        s->add_option("--trace-cap", c.trace_cap, "maximum entries written to the trace");
    };

    auto* circ = app.add_subcommand("circumference", "estimate the circumference");
    circ->add_option("--backend", backend, "backend spec or JSON object")->required();
    common(circ);
    circ_opts(circ);

    auto* dl = app.add_subcommand("dlog", "distance of a target element");
    dl->add_option("--backend", backend, "backend spec or JSON object")->required();
    dl->add_option("--target", c.target, "element spec: origin, bs^k or backend notation");
    common(dl);
    circ_opts(dl);
    dl->add_option("--max-trials", c.max_trials, "dlog trials cap");
    dl->add_option("--cell-cap", c.cell_cap, "transform cell cap");
    dl->add_option("--kappa-grid", c.kappa_grid, "grid points for the kappa maximization");
    dl->add_option("--k-max", c.k_max, "k-range filter (-1: floor(B/64) - 1)");
    dl->add_option("--min-B", c.min_B, "raise q until B reaches this");
    dl->add_option("--q-override", c.q_override, "use this q instead of the convergent");
    dl->add_option("--engine", c.engine, "auto | table | point-table | exact-line");
    dl->add_option("--circumference-hint", c.circumference_hint, "skip the quantum circumference run");

    auto* pell = app.add_subcommand("pell", "regulator and fundamental Pell solution");
    pell->add_option("--D", c.D, "non-square D")->required();
    common(pell);
    circ_opts(pell);

    auto* ver = app.add_subcommand("verify", "lemma sweeps");
    ver->require_subcommand(1);
    common(ver);
    auto* vg = ver->add_subcommand("geomsum", "perturbed geometric-sum lemma");
    auto* vc = ver->add_subcommand("coprime", "coprimality of random pairs");
    for (auto* s : {vg, vc}) {
        s->add_option("--trials", c.trials, "instances or pairs");
        common(s);
    }
    vc->add_option("--N", c.coprime_N, "pairs drawn from [1, N]^2");

    auto* bnd = app.add_subcommand("bounds", "evaluate an analytic bound");
    bnd->add_option("--formula", c.formula, "psuccess | psuccess-limit | periodic | dlog | dlog-simplified")->required();
    for (auto [name, dst] : {std::pair{"--S", &c.S}, {"--q", &c.q}, {"--N", &c.N}, {"--R", &c.R},
                             {"--d-min", &c.d_min}, {"--B", &c.B}, {"--p-g", &c.p_g}})
        bnd->add_option(name, *dst);
    bnd->add_option("--kappa-grid", c.kappa_grid);
    common(bnd);

    auto* run = app.add_subcommand("run", "execute a JSON RunConfig");
    run->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const int r = app.exit(e, out, err);
        return r == 0 ? kExitOk : kExitSchemaError;
    }

    try {
        if (run->parsed()) {
            std::ifstream f(config_path);
            c = run_config_from_json(json::parse(f));
        } else {
            if (circ->parsed()) c.pipeline = "circumference";
            if (dl->parsed()) c.pipeline = "dlog";
            if (pell->parsed()) c.pipeline = "pell";
            if (ver->parsed()) {
                c.pipeline = "verify";
                c.verify_what = vg->parsed() ? "geomsum" : "coprime";
            }
            if (bnd->parsed()) c.pipeline = "bounds";
            if (!backend.empty()) {
                const auto first = backend.find_first_not_of(" \t");
                c.backend = first != std::string::npos && backend[first] == '{' ? json::parse(backend) : json(backend);
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitSchemaError;
    }

    const json rep = execute(c);
    const int code = rep["exit_code"].get<int>();
    if (c.report_path.empty()) {
        out << rep.dump(2) << "\n";
    } else {
        std::ofstream f(c.report_path);
        if (!f) {
            err << "error: cannot write " << c.report_path << "\n";
            return kExitInternal;
        }
        f << rep.dump(2) << "\n";
        out << (code == kExitOk ? "pass" : "fail") << " (exit " << code << "), report in " << c.report_path << "\n";
    }
    if (rep.contains("error")) err << "error: " << rep["error"]["message"].get<std::string>() << "\n";
    return code;
}

}  // namespace infra

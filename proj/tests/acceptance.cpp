// Acceptance harness: one line per criterion, exit status 0 iff all pass.
// Usage: acceptance [criterion ...]   (no arguments runs all ten)

#include "infra/backends.hpp"
#include "infra/dlog.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace infra;
using oracle::Float;
using oracle::Rational;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

Rational Q(const ScaledReal& x) { return oracle::to_rational(x); }

Rational mod(const Rational& a, const Rational& R) { return a - Rational(oracle::floor_div(a / R)) * R; }

Rational circ(const Rational& a, const Rational& b, const Rational& R) {
    const Rational t = mod(a - b, R);
    return std::min(t, R - t);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

std::string report(const BoundReport& r) {
    return r.formula + ": " + std::to_string(r.successes) + "/" + std::to_string(r.trials) + " = " + fmt(r.empirical) +
           " vs bound " + fmt(r.analytic) + " (p = " + fmt(r.p_value) + ")";
}

// Fixed instance for the circumference statistics: R = 5/2 with an exact
// upper bound, N = 32, so S = N R = 80 and q = 8192.
std::shared_ptr<SyntheticInfra> stats_infra() {
    ParamOverrides o;
    o.R_upper = ScaledReal::parse("5/2");
    return std::make_shared<SyntheticInfra>(
        std::vector<ScaledReal>{ScaledReal::parse("3/5"), ScaledReal::parse("11/10"), ScaledReal::parse("4/5")}, o);
}

CircumferenceConfig stats_config() {
    CircumferenceConfig cfg;
    cfg.target_S = 80;
    cfg.seed = 2024;
    return cfg;
}

// ---- 1 ---------------------------------------------------------------------------

Verdict circumference_correctness() {
    Rng rng(101);
    const ScaledReal delta = ScaledReal::parse("1/1000");
    std::int64_t trials = 0, accepts = 0, false_accepts = 0, pipelines_ok = 0;
    for (int i = 0; i < 20; ++i) {
        const std::size_t n = 3 + static_cast<std::size_t>(i) * 47 / 19;
        SyntheticInfra s(oracle::random_gaps(rng, n));
        const Rational R = Q(s.oracle_circumference());
        if (R > 200) return {false, "generator produced R > 200"};
        CircumferenceConfig cfg;
        cfg.seed = 1000 + static_cast<std::uint64_t>(i);
        cfg.delta = delta;
        CircumferenceSampler smp(s, cfg);
        for (std::int64_t t = 0; t < 500; ++t, ++trials) {
            auto tr = smp.run_trial(t);
            auto res = verify_and_refine(s, tr.candidates, smp.sizes().N, delta);
            smp.record(res.success);
            if (!res.success) continue;
            ++accepts;
            if (abs(Q(res.R_hat) - R) > Q(delta)) ++false_accepts;
        }
        auto full = circumference_pipeline(s, cfg);
        if (full.success && abs(Q(full.R_hat) - R) <= Q(delta)) ++pipelines_ok;
        else if (full.success) ++false_accepts;
    }
    return {false_accepts == 0 && pipelines_ok == 20,
            std::to_string(trials) + " trials, " + std::to_string(accepts) + " accepts, " +
                std::to_string(false_accepts) + " false accepts, " + std::to_string(pipelines_ok) +
                "/20 pipelines within 1e-3"};
}

// ---- 2 ---------------------------------------------------------------------------

Verdict circumference_bound() {
    auto s = stats_infra();
    const auto cfg = stats_config();
    CircumferenceSampler smp(*s, cfg);
    const auto& sz = smp.sizes();
    const double S = static_cast<double>(sz.N) * 2.5;
    if (S < 64 || S > 128 || sz.q < S * S || sz.q >= 2 * S * S) return {false, "instance outside the required sizes"};
    const Rational R(5, 2);
    std::int64_t ok = 0;
    const std::int64_t trials = 10000;
    for (std::int64_t t = 0; t < trials; ++t) {
        auto tr = smp.run_trial(t);
        auto res = verify_and_refine(*s, tr.candidates, sz.N, cfg.delta);
        smp.record(res.success);
        if (res.success && abs(Q(res.R_hat) - R) <= Q(cfg.delta)) ++ok;
    }
    auto rep = binomial_check("psuccess(S=" + fmt(S) + ", q=" + std::to_string(sz.q) + ")",
                              bound_psuccess_circ(S, static_cast<double>(sz.q)), ok, trials);
    const double limit = bound_psuccess_circ_limit();
    return {rep.pass && limit >= 1e-5, report(rep) + "; asymptotic bound " + fmt(limit)};
}

// ---- 3 ---------------------------------------------------------------------------

Verdict periodic_states() {
    auto s = stats_infra();
    CircumferenceSampler smp(*s, stats_config());
    const auto& sz = smp.sizes();
    const FiberTable& table = smp.table();
    const ScaledReal S = ScaledReal(big(sz.N)) * s->oracle_circumference();
    Rng rng(303);
    std::int64_t periodic = 0;
    const std::int64_t draws = 10000;
    for (std::int64_t i = 0; i < draws; ++i)
        periodic += is_truly_periodic(measure_second_register(table, rng).support, S, sz.q);
    const double bound =
        bound_periodic(static_cast<double>(sz.N), 2.5, s->params().d_min_lower.to_double(), static_cast<double>(sz.q));
    auto rep = binomial_check("periodic(N=" + std::to_string(sz.N) + ", q=" + std::to_string(sz.q) + ")", bound,
                              periodic, draws);
    return {rep.pass, report(rep)};
}

// ---- 4 ---------------------------------------------------------------------------

Verdict geometric_sums() {
    Rng rng(404);
    std::int64_t made = 0, violations = 0, attempts = 0;
    while (made < 100000) {
        ++attempts;
        const std::int64_t n = 2 + uniform_below(rng, 500);
        const double delta = 0.95 * uniform01(rng);
        GeomSumInstance g;
        if (!random_geomsum_instance(rng, n, delta, attempts % 2 == 0, g)) continue;
        ++made;
        if (!geomsum_violation(g).empty() || geomsum_lhs(g) + 1e-9 < geomsum_rhs(g)) ++violations;
    }
    std::int64_t grid = 0, rejected = 0;
    for (int d = 0; d <= 9; ++d)
        for (bool prefix : {true, false})
            for (std::int64_t n : {8, 32, 128, 512, 2048}) {
                GeomSumInstance g;
                if (!random_geomsum_instance(rng, n, d / 10.0, prefix, g)) {
                    ++rejected;
                    continue;
                }
                ++grid;
                if (!geomsum_violation(g).empty() || geomsum_lhs(g) + 1e-9 < geomsum_rhs(g)) ++violations;
            }
    return {violations == 0 && grid > 0,
            std::to_string(made) + " random + " + std::to_string(grid) + " grid instances, " +
                std::to_string(violations) + " violations (" + std::to_string(rejected) +
                " grid points inadmissible)"};
}

// ---- 5 ---------------------------------------------------------------------------

Verdict dlog_correctness() {
    Rng rng(505);
    std::int64_t runs = 0, successes = 0, bad_raw = 0, bad_refined = 0, max_cells = 0;
    std::set<std::string> engines;
    for (int i = 0; i < 10; ++i) {
        SyntheticInfra s(oracle::random_gaps(rng, 3 + static_cast<std::size_t>(uniform_below(rng, 6))));
        const Rational R = Q(s.oracle_circumference());
        DlogConfig cfg;
        cfg.min_B = 192;
        cfg.circumference.seed = 50 + static_cast<std::uint64_t>(i);
        auto circ_run = circumference_pipeline(s, cfg.circumference);
        if (!circ_run.success) return {false, "circumference failed on instance " + std::to_string(i)};
        cfg.circumference_hint = circ_run.R_hat;
        for (int t = 0; t < 5; ++t) {
            const Element x =
                s.element_at(static_cast<std::size_t>(uniform_below(rng, static_cast<std::int64_t>(s.size()))));
            cfg.seed = 500 + static_cast<std::uint64_t>(10 * i + t);
            auto r = dlog_pipeline(s, x, cfg);
            ++runs;
            const std::int64_t cells = r.params.A * (r.params.B - 1);
            engines.insert(to_string(r.params.engine));
            if (r.params.engine != DlogEngine::ExactLine) max_cells = std::max(max_cells, cells);
            if (!r.success) continue;
            ++successes;
            const Rational dx = Q(s.oracle_distance(x));
            if (circ(Q(r.d_hat), dx, R) > 1) ++bad_raw;
            if (circ(Q(r.d_refined), dx, R) > Q(cfg.delta)) ++bad_refined;
        }
    }
    std::string eng;
    for (const auto& e : engines) eng += (eng.empty() ? "" : ",") + e;
    return {bad_raw == 0 && bad_refined == 0 && successes == runs && max_cells <= kDefaultCellCap,
            std::to_string(successes) + "/" + std::to_string(runs) + " successes, " + std::to_string(bad_raw) +
                " outside 1, " + std::to_string(bad_refined) + " refined outside 1e-3, largest table " +
                std::to_string(max_cells) + " cells, engines " + eng};
}

// ---- 6 ---------------------------------------------------------------------------

struct DlogStats {
    std::int64_t ok = 0, trials = 0, wrong = 0, past_filter = 0;
    DlogParams P;
};

DlogStats dlog_statistics(const ExactInfrastructure& s, const Element& x, const DlogConfig& cfg, std::int64_t trials) {
    DlogStats st;
    st.P = select_params(s, s.oracle_circumference(), ScaledReal::parse("1/1000"), cfg);
    const Rational R = Q(s.oracle_circumference()), dx = Q(s.oracle_distance(x));
    Rng shift_rng = make_rng(cfg.seed, 4);
    ShiftPolicy policy(pick_shift_dlog(st.P.N, st.P.A, st.P.R_hat, s.params(), cfg.p_g, shift_rng), cfg.switch_after);
    DlogSampler smp(s, x, st.P, policy.grid(), cfg.cell_cap);
    for (std::int64_t t = 0; t < trials; ++t) {
        auto tr = run_dlog_trial(s, x, smp, cfg.seed, t, cfg.delta);
        bool ok = tr.outcome == DlogTrial::Outcome::Accepted;
        st.past_filter += tr.outcome != DlogTrial::Outcome::Filtered;
        if (ok && circ(Q(tr.combined->d_hat), dx, R) > 1) {
            ++st.wrong;
            ok = false;
        }
        st.ok += ok;
        if (tr.outcome == DlogTrial::Outcome::Accepted || tr.outcome == DlogTrial::Outcome::VerifyFailed)
            if (policy.record(ok, shift_rng)) smp.set_grid(policy.grid());
    }
    st.trials = trials;
    return st;
}

Verdict dlog_bound() {
    SyntheticInfra small({ScaledReal::parse("3/5"), ScaledReal::parse("113/100"), ScaledReal::parse("4/5")});
    DlogConfig a;
    a.seed = 66;
    a.min_B = 192;
    a.engine = DlogEngine::Table;
    auto sa = dlog_statistics(small, Element{2, 0}, a, 10000);
    auto ra = binomial_check("dlog(q=" + std::to_string(sa.P.q) + ", B=" + std::to_string(sa.P.B) + ")", sa.P.bound,
                             sa.ok, sa.trials);

    // R = 260 with q = 8 so that the simplified bound applies too
    std::vector<ScaledReal> gaps;
    for (int i = 0; i < 26; ++i)
        for (const char* g : {"2", "3", "5/2", "5/2"}) gaps.push_back(ScaledReal::parse(g));
    SyntheticInfra large(gaps);
    DlogConfig b;
    b.seed = 67;
    b.q_override = 8;
    auto sb = dlog_statistics(large, Element{37, 0}, b, 10000);
    auto rb = binomial_check("dlog(q=8, B=" + std::to_string(sb.P.B) + ")", sb.P.bound, sb.ok, sb.trials);
    bool simp = sb.P.bound_simplified.has_value();
    BoundReport rs;
    if (simp) rs = binomial_check("dlog simplified", *sb.P.bound_simplified, sb.ok, sb.trials);
    return {ra.pass && rb.pass && simp && rs.pass && sa.wrong == 0 && sb.wrong == 0,
            report(ra) + " (" + std::to_string(sa.past_filter) + " past the k filter); " + report(rb) + " (" +
                std::to_string(sb.past_filter) + " past the k filter)" + " [" + to_string(sb.P.engine) + "]; " +
                (simp ? report(rs) : std::string("simplified bound not configured"))};
}

// ---- 7 ---------------------------------------------------------------------------

Verdict quadratic_backend() {
    std::string detail;
    bool all = true;
    for (std::int64_t D : {2, 3, 5, 13, 61}) {
        QuadraticInfra q(D);
        CircumferenceConfig cfg;
        cfg.delta = ScaledReal::parse("1/100000");
        cfg.seed = 7;
        auto r = circumference_pipeline(q, cfg);
        if (!r.success) {
            all = false;
            detail += " D=" + std::to_string(D) + " circumference failed;";
            continue;
        }
        // smallest unit of Z[sqrt D] by direct search
        auto m = oracle::brute_force_pell(D, -1, 100000), p = oracle::brute_force_pell(D, +1, 100000);
        auto pick = m.second != 0 && (p.second == 0 || m.second < p.second) ? m : p;
        const Float circ_ref = log(Float(pick.first) + Float(pick.second) * sqrt(Float(D)));
        const double e1 = std::abs(r.R_hat.to_double() - static_cast<double>(circ_ref));

        PellSolution s = pell_solution(D, r.R_hat);
        const oracle::BigI x = oracle::to_cpp_int(s.x), y = oracle::to_cpp_int(s.y);
        const bool pell_ok = x * x - D * y * y == s.norm && (s.norm == 1 || s.norm == -1) && x == pick.first &&
                             y == pick.second;
        PellSolution plus = pell_plus_one(s, D);
        const oracle::BigI xp = oracle::to_cpp_int(plus.x), yp = oracle::to_cpp_int(plus.y);
        const bool plus_ok = xp * xp - D * yp * yp == 1;

        oracle::Unit u = oracle::maximal_order_unit(D);
        const Float reg_ref = log((Float(u.a) + Float(u.b) * sqrt(Float(D))) / u.den);
        const double e2 = std::abs(field_regulator(D, s).value - static_cast<double>(reg_ref));
        const bool ok = e1 <= 1e-4 && e2 <= 1e-4 && pell_ok && plus_ok;
        all = all && ok;
        detail += " D=" + std::to_string(D) + " R=" + r.R_hat.to_decimal(6) + " err " + fmt(std::max(e1, e2)) +
                  (pell_ok && plus_ok ? "" : " pell mismatch") + ";";
    }
    return {all, detail.substr(1)};
}

// ---- 8 ---------------------------------------------------------------------------

Verdict approximate_contracts() {
    std::vector<std::shared_ptr<const Infrastructure>> backends{
        make_backend("synthetic:3/5,11/10,4/5"), make_backend("synthetic:1/3,2/5,5/4,1,7/9,3/11,6/5"),
        make_backend(R"({"type":"synthetic","gaps":["3/5","11/10","4/5","7/10"],"perturb":5})"),
        make_backend(R"({"type":"synthetic","gaps":["1/2","2/3","3/4","9/7","5/6"],"perturb":11})")};
    Rng rng(808);
    std::int64_t points = 0, promised = 0, p1_fail = 0, p2_fail = 0, dominate_fail = 0;
    for (const auto& b : backends) {
        const auto& e = as_exact(*b);
        const auto& p = b->params();
        const Rational R = Q(e.oracle_circumference());
        std::vector<Rational> dist;
        for (std::size_t i = 0; i < e.size(); ++i) dist.push_back(Q(e.oracle_distance(e.element_at(i))));
        const std::int64_t L = 4096;
        const ScaledReal B = p.R_upper * p.R_upper * BigInt(2) + ScaledReal(1);
        const auto budget = choose_precision(B, L, p);
        CircleGroup G(*b, budget.m);
        const Rational unit = Q(ScaledReal::dyadic(1, budget.m));
        const BigInt kmax = floor(B * BigInt(L));
        for (int i = 0; i < 25000; ++i, ++points) {
            const BigInt k = BigInt(static_cast<unsigned long>(rng())) % kmax;
            const ScaledReal r(k, BigInt(L));
            const FRep t = G.h_tilde(r), x = h_exact_on_oracle(e, r);
            const Rational err = circ(Q(absolute_distance(e, t)), Q(r), R);
            // P1: landing within one baby step of h, error within the tracked budget
            if (!(t.x == x.x || t.x == b->bs(x.x) || t.x == b->bs_inv(x.x)) ||
                err > unit * Rational(static_cast<long>(t.err_units)))
                ++p1_fail;
            if (err.convert_to<double>() > budget.bound) ++dominate_fail;
            Rational gap = R;
            for (const auto& d : dist) gap = std::min(gap, circ(Q(r), d, R));
            if (gap > Rational(1, L)) {
                ++promised;
                if (!(t.x == x.x) || abs(Q(t.f - x.f)) > Rational(1, 2 * L)) ++p2_fail;
            }
        }
    }
    return {p1_fail == 0 && p2_fail == 0 && dominate_fail == 0 && promised > 0,
            std::to_string(points) + " points (" + std::to_string(promised) + " under the promise): P1 failures " +
                std::to_string(p1_fail) + ", P2 failures " + std::to_string(p2_fail) + ", bound exceeded " +
                std::to_string(dominate_fail)};
}

// ---- 9 ---------------------------------------------------------------------------

Verdict appendix_lemmas() {
    Rng rng(909);
    auto cop = coprime_experiment(1'000'000, 1'000'000, rng);
    std::int64_t cf_fail = 0;
    for (int i = 0; i < 10000; ++i) {
        const ScaledReal r(big(uniform_below(rng, 1'000'000'000)), big(1 + uniform_below(rng, 1'000'000)));
        const ScaledReal c(big(2000 + uniform_below(rng, 10'000'000 - 2000)), big(1000));
        const Convergent v = cf_approx(r, c);
        const Rational d(oracle::to_cpp_int(v.d)), C = Q(c);
        const Rational pq = Rational(oracle::to_cpp_int(v.c)) / d;
        if (d > C || abs(Q(r) - pq) >= 1 / (C * d)) ++cf_fail;
    }
    return {cop.pass && cf_fail == 0,
            "coprime " + fmt(cop.empirical) + " over 10^6 pairs; cf_approx failures " + std::to_string(cf_fail) +
                "/10000"};
}

// ---- 10 --------------------------------------------------------------------------

Verdict determinism() {
    auto s = stats_infra();
    const auto cfg = stats_config();
    std::int64_t replayed = 0, mismatches = 0;
    {
        CircumferenceSampler a(*s, cfg);
        std::vector<std::int64_t> failing;
        for (std::int64_t t = 0; t < 400 && failing.size() < 25; ++t) {
            auto tr = a.run_trial(t);
            if (!verify_and_refine(*s, tr.candidates, a.sizes().N, cfg.delta).success) failing.push_back(t);
        }
        CircumferenceSampler b(*s, cfg);
        CircumferenceSampler c(*s, cfg);
        for (auto it = failing.rbegin(); it != failing.rend(); ++it) {
            auto x = b.run_trial(*it), y = c.run_trial(*it);
            auto z = a.run_trial(*it);
            ++replayed;
            if (x.c.h != z.c.h || x.d.h != z.d.h || x.s1.support != z.s1.support || x.s2.support != z.s2.support ||
                x.candidates.values != z.candidates.values || y.c.lineage != z.c.lineage)
                ++mismatches;
            if (verify_and_refine(*s, x.candidates, b.sizes().N, cfg.delta).success) ++mismatches;
        }
    }
    {
        SyntheticInfra d({ScaledReal::parse("3/5"), ScaledReal::parse("113/100"), ScaledReal::parse("4/5")});
        DlogConfig dc;
        dc.seed = 10;
        auto P = select_params(d, d.oracle_circumference(), ScaledReal::parse("1/1000"), dc);
        const ShiftedGrid g{P.N, P.L, 3};
        DlogSampler a(d, Element{1, 0}, P, g), b(d, Element{1, 0}, P, g);
        std::vector<std::pair<std::int64_t, DlogTrial>> failing;
        for (std::int64_t t = 0; t < 2000 && failing.size() < 50; ++t) {
            auto tr = run_dlog_trial(d, Element{1, 0}, a, dc.seed, t, dc.delta);
            if (tr.outcome != DlogTrial::Outcome::Accepted) failing.emplace_back(t, tr);
        }
        for (auto it = failing.rbegin(); it != failing.rend(); ++it) {
            auto tr = run_dlog_trial(d, Element{1, 0}, b, dc.seed, it->first, dc.delta);
            const auto& o = it->second;
            ++replayed;
            if (tr.outcome != o.outcome || tr.s1.k != o.s1.k || tr.s2.k != o.s2.k || tr.s1.h != o.s1.h ||
                tr.s2.h != o.s2.h || tr.s1.probability != o.s1.probability || tr.s1.lineage != o.s1.lineage)
                ++mismatches;
        }
        auto r1 = dlog_pipeline(d, Element{2, 0}, dc), r2 = dlog_pipeline(d, Element{2, 0}, dc);
        ++replayed;
        if (r1.trials != r2.trials || !(r1.d_hat == r2.d_hat) || r1.j != r2.j || r1.s1.h != r2.s1.h ||
            r1.circumference->trials_used != r2.circumference->trials_used)
            ++mismatches;
    }
    return {mismatches == 0 && replayed > 2,
            std::to_string(replayed) + " failing trials and runs replayed, " + std::to_string(mismatches) +
                " mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"circumference correctness against the oracle", circumference_correctness},
        {"circumference success probability", circumference_bound},
        {"periodic-state probability", periodic_states},
        {"perturbed geometric sums", geometric_sums},
        {"dlog correctness against the oracle", dlog_correctness},
        {"dlog success probability", dlog_bound},
        {"quadratic backend regulators and Pell", quadratic_backend},
        {"approximate-arithmetic contracts", approximate_contracts},
        {"coprimality and continued fractions", appendix_lemmas},
        {"replay determinism", determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << ", "
                  << fmt(secs) << " s): " << v.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}

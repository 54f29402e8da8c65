#include "infra/period_est.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace infra {

namespace {

constexpr std::uint64_t kStreamShift = 1;
constexpr std::uint64_t kStreamTrial = 2;

std::int64_t next_pow2(std::int64_t v) {
    std::int64_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

}  // namespace

CandidateList candidate_periods(const BigInt& c, const BigInt& d, std::int64_t q) {
    if (c < 1) throw ZeroSample("candidate_periods: c must be positive");
    if (d < 1) throw ZeroSample("candidate_periods: d must be positive");
    CandidateList out;
    std::set<BigInt> seen;
    for (const auto& cv : convergents(c, d, big(q / 32))) {
        if (cv.c == 0) continue;
        BigInt v = round_nearest(ScaledReal(cv.c * big(q), c));
        if (v <= 0 || !seen.insert(v).second) continue;
        out.values.push_back(v);
        out.provenance.push_back(cv);
    }
    return out;
}

CandidateList estimate_period(const QuantumSample& s1, const QuantumSample& s2, std::int64_t q) {
    if (s1.h == 0 || s2.h == 0) throw ZeroSample("estimate_period: zero outcome must be resampled");
    return candidate_periods(big(s1.h), big(s2.h), q);
}

LandingCheck check_landing(const Infrastructure& infra, const ScaledReal& R_prime, const ScaledReal& tolerance,
                           const ScaledReal& delta) {
    LandingCheck out;
    if (R_prime.sign() < 0) return out;
    const auto& p = infra.params();
    const auto L_ref = to_i64(ceil(ScaledReal(8) / delta));
    const PrecisionBudget budget = choose_precision(R_prime + ScaledReal(1), L_ref, p);
    CircleGroup G(infra, budget.m);
    const FRep h = G.h_tilde(R_prime);
    const ScaledReal acc = R_prime - h.f;  // approximate accumulated distance of the landing element
    const Element x0 = infra.origin();
    const int window = p.k_bar + 1;

    std::optional<ScaledReal> best;
    auto consider = [&](const ScaledReal& v, int steps) {
        if (!best || abs(R_prime - v) < abs(R_prime - *best)) {
            best = v;
            out.offset_steps = steps;
        }
    };
    if (h.x == x0) consider(acc, 0);
    Element y = h.x;
    ScaledReal a = acc;
    for (int t = 1; t <= window; ++t) {
        a += infra.delta_bs_approx(y, budget.m);
        y = infra.bs(y);
        if (y == x0) consider(a, t);
    }
    y = h.x;
    a = acc;
    for (int t = 1; t <= window; ++t) {
        y = infra.bs_inv(y);
        a -= infra.delta_bs_approx(y, budget.m);
        if (y == x0) consider(a, -t);
    }
    if (!best) return out;
    out.R_hat = best->normalized();
    out.near_origin = abs(R_prime - *best) <= tolerance;
    if (out.offset_steps == 0)
        out.witness = "x0";
    else if (out.offset_steps == 1)
        out.witness = "bs_inv(x0)";
    else
        out.witness = "bs^" + std::to_string(-out.offset_steps) + "(x0)";
    return out;
}

CircumferenceResult verify_and_refine(const Infrastructure& infra, const CandidateList& candidates, std::int64_t N,
                                      const ScaledReal& delta) {
    CircumferenceResult res;
    res.delta = delta;
    res.N = N;
    if (candidates.values.empty()) {
        res.failure = "empty candidate list";
        return res;
    }
    const auto& p = infra.params();
    std::vector<BigInt> sorted = candidates.values;
    std::sort(sorted.begin(), sorted.end());
    const ScaledReal tol = ScaledReal(1, big(N)) + delta;
    for (const auto& S_hat : sorted) {
        const ScaledReal R_prime(S_hat, big(N));
        LandingCheck lc = check_landing(infra, R_prime, tol, delta);
        if (!lc.near_origin || lc.R_hat < p.d_min_lower) continue;
        // The passing value is j R for an unknown j >= 1. A divisor t <= T with
        // T <= d_min/(4 delta) passes the tight test iff t divides j.
        ScaledReal R_hat = lc.R_hat;
        int divisor = 1;
        std::string witness = lc.witness;
        const BigInt cap_big = floor(p.d_min_lower / (delta * ScaledReal(4)));
        const int T = static_cast<int>(std::min<BigInt>(cap_big, BigInt(64)).get_si());
        for (int t = T; t >= 2; --t) {
            const ScaledReal R_div = lc.R_hat / ScaledReal(t);
            if (R_div < p.d_min_lower) continue;
            LandingCheck lt = check_landing(infra, R_div, delta * ScaledReal(2), delta);
            if (lt.near_origin) {
                R_hat = lt.R_hat;
                divisor = t;
                witness = lt.witness;
                break;
            }
        }
        if (R_hat > p.R_upper + delta) continue;  // still a multiple: A1 rules it out
        res.success = true;
        res.R_hat = R_hat;
        res.accepted_candidate = S_hat;
        res.divisor = divisor;
        res.witness = witness;
        return res;
    }
    res.failure = "no candidate within 1/N of a multiple of the circumference";
    return res;
}

std::optional<ScaledReal> refine_estimate(const Infrastructure& infra, const ScaledReal& R_hat, const ScaledReal& delta) {
    const ScaledReal tol = infra.params().d_min_lower / ScaledReal(2);
    LandingCheck lc = check_landing(infra, R_hat, tol, delta);
    if (!lc.near_origin) return std::nullopt;
    return lc.R_hat;
}

CircumferenceSizes circumference_sizes(const InfraParams& p, const CircumferenceConfig& cfg) {
    CircumferenceSizes s;
    const std::int64_t N0 = to_i64(ceil(ScaledReal(2) / p.d_min_lower));
    const std::int64_t N1 = to_i64(ceil(ScaledReal(big(cfg.target_S)) / p.R_upper));
    s.N = std::max(N0, N1);
    s.M = to_i64(ceil(p.R_upper * big(s.N)));
    s.q = cfg.q_power_of_two ? next_pow2(s.M * s.M) : s.M * s.M;
    if (s.q > cfg.max_q)
        throw std::invalid_argument("circumference: q = " + std::to_string(s.q) + " exceeds the configured cap " +
                                    std::to_string(cfg.max_q));
    s.L = offset_L_circ(s.N, s.q, p, cfg.p_h);
    s.m = choose_precision(ScaledReal(big(s.q), big(s.N)) + ScaledReal(1), s.L, p).m;
    return s;
}

CircumferenceSampler::CircumferenceSampler(const Infrastructure& infra, const CircumferenceConfig& cfg)
    : infra_(&infra),
      cfg_(cfg),
      sizes_(circumference_sizes(infra.params(), cfg)),
      G_(infra, sizes_.m),
      policy_(ShiftedGrid{sizes_.N, sizes_.L, 0}, cfg.switch_after),
      shift_rng_(make_rng(cfg.seed, kStreamShift)) {
    ShiftedGrid g{sizes_.N, sizes_.L, uniform_below(shift_rng_, sizes_.L / sizes_.N)};
    g.validate(infra.params());
    policy_ = ShiftPolicy(g, cfg.switch_after);
}

const FiberTable& CircumferenceSampler::table() {
    if (!table_ || table_j_ != policy_.grid().j) {
        table_.reset();
        table_ = build_fibers_1d(G_, sizes_.q, policy_.grid());
        table_j_ = policy_.grid().j;
        sampler_ = FourierSampler1D();
    }
    return *table_;
}

CircumferenceSampler::Trial CircumferenceSampler::run_trial(std::int64_t index) {
    const FiberTable& t = table();
    const std::uint64_t lineage = derive_seed(cfg_.seed, kStreamTrial, static_cast<std::uint64_t>(index));
    Rng rng(lineage);
    Trial tr;
    auto draw = [&](PseudoPeriodicState& s, QuantumSample& out) {
        s = measure_second_register(t, rng);
        for (int attempt = 0;; ++attempt) {
            out = sampler_.sample(s, rng, lineage);
            if (out.h != 0) return;
            ++tr.zero_resamples;
            if (attempt > 10000) throw std::runtime_error("circumference: state only yields zero outcomes");
        }
    };
    draw(tr.s1, tr.c);
    draw(tr.s2, tr.d);
    tr.candidates = estimate_period(tr.c, tr.d, sizes_.q);
    return tr;
}

void CircumferenceSampler::record(bool success) { policy_.record(success, shift_rng_); }

CircumferenceResult circumference_pipeline(const Infrastructure& infra, const CircumferenceConfig& cfg) {
    CircumferenceSampler sampler(infra, cfg);
    const auto& sz = sampler.sizes();
    std::int64_t cap = cfg.trials_cap;
    if (cap <= 0) {
        const double b = bound_psuccess_circ(static_cast<double>(sz.M), static_cast<double>(sz.q));
        cap = static_cast<std::int64_t>(std::ceil(50.0 / std::max(b, 1e-7)));
    }
    CircumferenceResult res;
    std::int64_t zeros = 0;
    for (std::int64_t t = 0; t < cap; ++t) {
        auto tr = sampler.run_trial(t);
        zeros += tr.zero_resamples;
        res = verify_and_refine(infra, tr.candidates, sz.N, cfg.delta);
        res.j = sampler.grid().j;
        sampler.record(res.success);
        if (res.success) {
            res.trials_used = t + 1;
            break;
        }
        res.trials_used = t + 1;
    }
    if (!res.success) res.failure = "trials cap of " + std::to_string(cap) + " exhausted";
    res.delta = cfg.delta;
    res.N = sz.N;
    res.q = sz.q;
    res.L = sz.L;
    res.m = sz.m;
    res.shift_switches = sampler.shift_switches();
    res.zero_resamples = zeros;
    return res;
}

}  // namespace infra

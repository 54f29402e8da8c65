#pragma once

#include "infra/analysis.hpp"
#include "infra/qsampler.hpp"

#include <optional>

namespace infra {

class ZeroSample : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CandidateList {
    std::vector<BigInt> values;
    std::vector<Convergent> provenance;  // convergent behind each value
};

/** { round(c_i q / c) : d_i <= floor(q/32) } over the convergents of c/d, zero values dropped. */
CandidateList candidate_periods(const BigInt& c, const BigInt& d, std::int64_t q);
/** Algorithm 1 on two 1-D samples. Throws ZeroSample on a zero outcome. */
CandidateList estimate_period(const QuantumSample& s1, const QuantumSample& s2, std::int64_t q);

/** Outcome of testing a single real R' against the origin. */
struct LandingCheck {
    bool near_origin = false;
    ScaledReal R_hat;      // refined multiple of R
    int offset_steps = 0;  // signed steps from the landing element to x0
    std::string witness;   // "x0", "bs_inv(x0)" or a step count
};

/**
 * Evaluates h-tilde(R') with certified error below delta/8 and probes up to
 * k_bar + 1 baby steps either way for x0. near_origin reports whether
 * |R' - R_hat| <= tolerance.
 */
LandingCheck check_landing(const Infrastructure& infra, const ScaledReal& R_prime, const ScaledReal& tolerance,
                           const ScaledReal& delta);

struct CircumferenceResult {
    bool success = false;
    ScaledReal R_hat;
    ScaledReal delta;
    std::int64_t trials_used = 0;
    BigInt accepted_candidate;
    int divisor = 1;            // R_hat = refined(candidate / N) / divisor
    std::string witness;
    std::string failure;        // empty on success
    std::int64_t N = 0, q = 0, L = 0, j = 0;
    unsigned m = 0;
    std::int64_t shift_switches = 0;
    std::int64_t zero_resamples = 0;
};

/**
 * Tests candidates in increasing order with |R' - R_hat| <= 1/N, probes
 * divisors of the first passing value, and refines to delta.
 */
CircumferenceResult verify_and_refine(const Infrastructure& infra, const CandidateList& candidates, std::int64_t N,
                                      const ScaledReal& delta);

/** Re-centres an existing estimate to accuracy delta. */
std::optional<ScaledReal> refine_estimate(const Infrastructure& infra, const ScaledReal& R_hat, const ScaledReal& delta);

struct CircumferenceConfig {
    ScaledReal delta = ScaledReal::parse("1/1000");
    double p_h = 0.5;
    std::uint64_t seed = 1;
    std::int64_t trials_cap = 0;      // 0: 50 / analytic bound
    std::int64_t target_S = 32;       // N is raised until N * R_upper reaches this
    std::int64_t switch_after = 32;   // consecutive failures before a new shift
    bool q_power_of_two = true;
    std::int64_t max_q = std::int64_t{1} << 22;
};

/** Derived sizes shared by the pipeline and the statistics harness. */
struct CircumferenceSizes {
    std::int64_t N = 0, M = 0, q = 0, L = 0;
    unsigned m = 0;
};
CircumferenceSizes circumference_sizes(const InfraParams& p, const CircumferenceConfig& cfg);

/** State preparation, sampling and candidate extraction for one trial. */
class CircumferenceSampler {
public:
    CircumferenceSampler(const Infrastructure& infra, const CircumferenceConfig& cfg);

    const CircumferenceSizes& sizes() const { return sizes_; }
    const ShiftedGrid& grid() const { return policy_.grid(); }
    /** Fiber table for the current shift (built on first use). */
    const FiberTable& table();

    struct Trial {
        PseudoPeriodicState s1, s2;
        QuantumSample c, d;
        CandidateList candidates;
        std::int64_t zero_resamples = 0;
    };
    /** One invocation of Algorithm 1 with its own derived seed. */
    Trial run_trial(std::int64_t index);
    /** Feeds the batch shift policy. */
    void record(bool success);
    std::int64_t shift_switches() const { return policy_.switches(); }

private:
    const Infrastructure* infra_;
    CircumferenceConfig cfg_;
    CircumferenceSizes sizes_;
    CircleGroup G_;
    ShiftPolicy policy_;
    Rng shift_rng_;
    std::optional<FiberTable> table_;
    std::int64_t table_j_ = -1;
    FourierSampler1D sampler_;
};

CircumferenceResult circumference_pipeline(const Infrastructure& infra, const CircumferenceConfig& cfg);

}  // namespace infra

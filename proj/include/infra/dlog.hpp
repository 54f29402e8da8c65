#pragma once

#include "infra/period_est.hpp"

#include <optional>

namespace infra {

class DlogParamError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MaxTrialsExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** How g_N is tabulated for state preparation. */
enum class DlogEngine {
    Auto,       // table when it fits, otherwise the exact line engine on oracle backends
    Table,      // row sweep: one scalar multiple per a, baby steps along b
    PointTable, // one g-tilde evaluation per (a, b)
    ExactLine,  // oracle backends only: fibers solved per a in exact arithmetic, O(A) memory
};

std::string to_string(DlogEngine e);
DlogEngine parse_engine(std::string_view s);

struct DlogConfig {
    double p_g = 0.5;
    std::uint64_t seed = 1;
    ScaledReal delta = ScaledReal::parse("1/1000");  // accuracy of the refined output
    std::int64_t q_override = 0;  // 0: convergent from the approximation lemma
    std::int64_t min_B = 0;       // raise q until B reaches this (invariant still enforced)
    std::int64_t k_max = -1;      // -1: floor(B/64)-1, widened to B-1 when that admits fewer than two values
    std::int64_t cell_cap = kDefaultCellCap;
    std::int64_t max_trials = 5'000'000;
    std::int64_t switch_after = 8;  // verification failures in a row before a new shift
    int kappa_grid = 64;
    DlogEngine engine = DlogEngine::Auto;
    CircumferenceConfig circumference;
    /** Skips the quantum circumference run; the value is still refined classically. */
    std::optional<ScaledReal> circumference_hint;
};

struct DlogParams {
    std::int64_t M = 0, N = 0, B = 0, A = 0, L = 0;
    std::int64_t q = 0;   // N = q * c
    std::int64_t c = 0;   // ceil(2 / d_min)
    ScaledReal R_hat;
    ScaledReal epsilon;   // refinement target of R_hat
    unsigned m = 0;
    std::int64_t k_max = 0;
    bool k_filter_relaxed = false;
    double kappa = 0;
    double bound = 0;
    std::optional<double> kappa_simplified, bound_simplified;  // only when R_hat >= 256 and q >= 8
    DlogEngine engine = DlogEngine::Table;

    /** |M B - M N R_hat| <= 1/2, exactly. */
    bool invariant_holds() const;
    bool invariant_holds_for(const ScaledReal& R) const;
};

/**
 * Parameter selection from a circumference estimate: M, refinement of R_hat,
 * N from a convergent of R_hat * ceil(2/d_min) with denominator <= 4M,
 * B = round(R_hat N), A = M B, L, precision and kappa.
 */
DlogParams select_params(const Infrastructure& infra, const ScaledReal& R_coarse, const ScaledReal& coarse_error,
                         const DlogConfig& cfg);

/** Extended Euclid on k1, k2 >= 0 (not both zero): s k1 + t k2 = gcd. */
struct Bezout {
    BigInt g, s, t;
};
Bezout ext_euclid(std::int64_t k1, std::int64_t k2);

struct DlogSample {
    std::int64_t h = -1;  // -1 while the conditional draw was not needed
    std::int64_t k = 0;
    double probability = 0;
    std::int64_t fiber_size = 0;
    QValue value;
    std::uint64_t lineage = 0;
};

struct Combined {
    BigInt s, t;
    ScaledReal r;      // (s h1 + t h2) / (N M)
    ScaledReal d_hat;  // r mod R_hat in [0, R_hat)
};

/**
 * Steps 6-8: nullopt when gcd(k1, k2) != 1 (resample). Throws
 * std::invalid_argument when k1 = k2 = 0.
 */
std::optional<Combined> combine_samples(const DlogSample& s1, const DlogSample& s2, const DlogParams& params);

/**
 * Draws from the exact simulated 2-D Fourier distribution of g_N fibers for a
 * fixed target and shift.
 *
 * On fibers with one b per a the marginal of k is uniform, so k is drawn
 * first and h | k only when the caller asks for it.
 */
class DlogSampler {
public:
    DlogSampler(const Infrastructure& infra, const Element& x, const DlogParams& params, ShiftedGrid grid,
                std::int64_t cell_cap = kDefaultCellCap);
    ~DlogSampler();
    DlogSampler(const DlogSampler&) = delete;
    DlogSampler& operator=(const DlogSampler&) = delete;

    const DlogParams& params() const { return params_; }
    const ShiftedGrid& grid() const { return grid_; }
    void set_grid(const ShiftedGrid& g);

    /** One pair drawn to completion. */
    DlogSample sample(Rng& rng);

    /**
     * Two independent pairs with lazy h: h is drawn only when both k pass
     * the filter and are coprime. Distributionally identical to two calls
     * of sample() followed by the filter.
     */
    std::pair<DlogSample, DlogSample> sample_pair_lazy(Rng& rng, std::int64_t k_max);

    /** Fiber (pairs (a, b)) containing a given point; test surface. */
    std::vector<std::pair<std::int64_t, std::int64_t>> fiber_of(std::int64_t a, std::int64_t b);
    /** Quantized g_N(a, b) as seen by the engine. */
    QValue value_at(std::int64_t a, std::int64_t b);
    /** Size of every fiber (table engines only). */
    std::vector<std::int64_t> fiber_sizes();

    struct Impl;

private:
    const Infrastructure* infra_;
    Element x_;
    DlogParams params_;
    ShiftedGrid grid_;
    std::int64_t cell_cap_;
    std::unique_ptr<Impl> impl_;
};

struct DlogTrial {
    DlogSample s1, s2;
    std::optional<Combined> combined;
    enum class Outcome { Filtered, NotCoprime, VerifyFailed, Accepted } outcome = Outcome::Filtered;
};

/**
 * Looks for x within baby steps of h-tilde(d_hat) and returns its refined
 * distance (within delta, reduced mod R_hat) when x lies within 1 of d_hat
 * modulo the circumference. On backends with approximate deltas the reach
 * is 1 - delta/4 so that evaluation error cannot widen it.
 */
std::optional<ScaledReal> locate_target(const Infrastructure& infra, const Element& x, const ScaledReal& d_hat,
                                        const ScaledReal& R_hat, const ScaledReal& delta);

struct DlogResult {
    bool success = false;
    ScaledReal d_hat;      // raw output of the combination step
    ScaledReal d_refined;  // within delta of the true distance
    DlogSample s1, s2;
    BigInt s, t;
    ScaledReal r;
    std::int64_t trials = 0;
    std::int64_t filtered = 0, not_coprime = 0, verify_failed = 0;
    std::int64_t shift_switches = 0;
    std::int64_t j = 0;
    DlogParams params;
    std::optional<CircumferenceResult> circumference;
    std::string failure;
};

/** One seeded trial of Algorithm 2 on a prepared sampler. */
DlogTrial run_dlog_trial(const Infrastructure& infra, const Element& x, DlogSampler& sampler, std::uint64_t seed,
                         std::int64_t index, const ScaledReal& delta);

/** Derived per-trial seed (stream 3 of the run seed). */
std::uint64_t dlog_trial_seed(std::uint64_t seed, std::int64_t index);

DlogResult dlog_pipeline(const Infrastructure& infra, const Element& x, const DlogConfig& cfg);

}  // namespace infra

#pragma once

#include "infra/circle_group.hpp"

#include <complex>
#include <functional>
#include <unordered_map>

namespace infra {

/** Fiber partition of {0, ..., q-1} under a quantized function. */
struct FiberTable {
    std::int64_t q = 0;
    std::vector<std::int32_t> fiber_of;               // index -> fiber id
    std::vector<std::vector<std::int64_t>> fibers;    // sorted preimages
    std::vector<QValue> values;                       // fiber id -> image value
};

FiberTable build_fibers(std::int64_t q, const std::function<QValue(std::int64_t)>& f);
/** Fibers of h_N on the grid over [0, q). */
FiberTable build_fibers_1d(const CircleGroup& G, std::int64_t q, const ShiftedGrid& grid);

struct PseudoPeriodicState {
    std::int64_t q = 0;
    std::vector<std::int64_t> support;
    std::int32_t fiber_id = -1;
    QValue value;
};

/** Picks a fiber with probability |fiber| / q. */
PseudoPeriodicState measure_second_register(const FiberTable& table, Rng& rng);

/**
 * Whether the support is {round(k + t S) : t < p} for some real k, with
 * p within one of floor(q/S). Exact in rational arithmetic.
 */
bool is_truly_periodic(const std::vector<std::int64_t>& support, const ScaledReal& S, std::int64_t q);

struct QuantumSample {
    std::int64_t h = 0;  // 1-D outcome, or the first index of a pair
    std::int64_t k = 0;  // second index for 2-D samples
    double probability = 0;
    std::uint64_t lineage = 0;  // seed that produced the draw
};

/** Clamps entries below 1e-15 to zero and renormalizes. */
void clamp_and_normalize(std::vector<double>& p);

/** |sum_j omega_q^{l idx_j}|^2 / (q p) for every l. */
std::vector<double> fourier_distribution_1d(const std::vector<std::int64_t>& support, std::int64_t q);
/** Inverse-CDF draw from a normalized distribution. */
std::int64_t sample_index(const std::vector<double>& dist, Rng& rng);

/** Caches the outcome distribution per fiber; distributions are exact transforms. */
class FourierSampler1D {
public:
    explicit FourierSampler1D(std::size_t cache_bytes = std::size_t{1} << 28) : cap_(cache_bytes) {}
    QuantumSample sample(const PseudoPeriodicState& state, Rng& rng, std::uint64_t lineage = 0);
    const std::vector<double>& distribution(const PseudoPeriodicState& state);

private:
    std::size_t cap_;
    std::size_t used_ = 0;
    std::unordered_map<std::int32_t, std::vector<double>> cache_;
    std::vector<double> scratch_;
};

class TransformTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr std::int64_t kDefaultCellCap = std::int64_t{1} << 24;

/**
 * Full 2-D distribution over Z_A x Z_B of a fiber of (a, b) pairs with phase
 * omega_A^{a h + M b k}; indexed [h * B + k]. Requires A = M B.
 */
std::vector<double> fourier_distribution_2d(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber,
                                            std::int64_t A, std::int64_t B, std::int64_t M,
                                            std::int64_t cell_cap = kDefaultCellCap);

/**
 * Conditional distribution of h given k when the fiber has one b per a:
 * |FFT_A(omega_B^{b_a k})|^2 / (A |F|). The marginal of k is uniform.
 */
std::vector<double> fourier_conditional_h(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber,
                                          std::int64_t A, std::int64_t B, std::int64_t k);

/**
 * Draws (h, k) from the exact 2-D transform of the fiber indicator. Uses the
 * O(A) factorized path when each a has a single b, the full transform
 * otherwise.
 */
QuantumSample fourier_sample_2d(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber, std::int64_t A,
                                std::int64_t B, std::int64_t M, Rng& rng, std::int64_t cell_cap = kDefaultCellCap,
                                std::uint64_t lineage = 0);

}  // namespace infra

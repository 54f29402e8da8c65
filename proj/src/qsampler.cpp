#include "infra/qsampler.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace infra {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kClamp = 1e-15;

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

/** In-place forward transform; planning is serialized because FFTW requires it. */
void fft_inplace(std::vector<std::complex<double>>& v, int rows, int cols) {
    auto* data = reinterpret_cast<fftw_complex*>(v.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = rows == 1 ? fftw_plan_dft_1d(cols, data, data, FFTW_FORWARD, FFTW_ESTIMATE)
                         : fftw_plan_dft_2d(rows, cols, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace

FiberTable build_fibers(std::int64_t q, const std::function<QValue(std::int64_t)>& f) {
    if (q < 1) throw std::invalid_argument("build_fibers: q must be positive");
    FiberTable t;
    t.q = q;
    t.fiber_of.resize(static_cast<std::size_t>(q));
    std::unordered_map<QValue, std::int32_t, QValueHash> ids;
    for (std::int64_t i = 0; i < q; ++i) {
        QValue v = f(i);
        auto [it, fresh] = ids.emplace(v, static_cast<std::int32_t>(t.fibers.size()));
        if (fresh) {
            t.fibers.emplace_back();
            t.values.push_back(v);
        }
        t.fibers[static_cast<std::size_t>(it->second)].push_back(i);
        t.fiber_of[static_cast<std::size_t>(i)] = it->second;
    }
    return t;
}

FiberTable build_fibers_1d(const CircleGroup& G, std::int64_t q, const ShiftedGrid& grid) {
    return build_fibers(q, [&](std::int64_t i) { return G.quantize_hN(big(i), grid); });
}

PseudoPeriodicState measure_second_register(const FiberTable& table, Rng& rng) {
    std::int64_t i = uniform_below(rng, table.q);
    std::int32_t id = table.fiber_of[static_cast<std::size_t>(i)];
    PseudoPeriodicState s;
    s.q = table.q;
    s.support = table.fibers[static_cast<std::size_t>(id)];
    s.fiber_id = id;
    s.value = table.values[static_cast<std::size_t>(id)];
    return s;
}

bool is_truly_periodic(const std::vector<std::int64_t>& support, const ScaledReal& S, std::int64_t q) {
    if (support.empty() || S.sign() <= 0) return false;
    const BigInt base = floor(ScaledReal(big(q)) / S);
    const BigInt p = big(static_cast<std::int64_t>(support.size()));
    if (p < base - 1 || p > base + 1) return false;
    ScaledReal lo, hi;
    for (std::size_t t = 0; t < support.size(); ++t) {
        ScaledReal v = ScaledReal(big(support[t])) - S * big(static_cast<std::int64_t>(t));
        if (t == 0 || v < lo) lo = v;
        if (t == 0 || v > hi) hi = v;
    }
    return hi - lo < ScaledReal(1);
}

void clamp_and_normalize(std::vector<double>& p) {
    double total = 0;
    for (double& x : p) {
        if (x < kClamp) x = 0;
        total += x;
    }
    if (total <= 0) throw std::runtime_error("clamp_and_normalize: empty distribution");
    for (double& x : p) x /= total;
}

std::vector<double> fourier_distribution_1d(const std::vector<std::int64_t>& support, std::int64_t q) {
    if (support.empty()) throw std::invalid_argument("fourier_distribution_1d: empty support");
    if (q > (std::int64_t{1} << 30)) throw TransformTooLarge("fourier_distribution_1d: q too large");
    std::vector<std::complex<double>> v(static_cast<std::size_t>(q));
    for (auto i : support) v[static_cast<std::size_t>(i)] = 1.0;
    fft_inplace(v, 1, static_cast<int>(q));
    const double scale = 1.0 / (static_cast<double>(q) * static_cast<double>(support.size()));
    std::vector<double> p(v.size());
    for (std::size_t l = 0; l < v.size(); ++l) p[l] = std::norm(v[l]) * scale;
    clamp_and_normalize(p);
    return p;
}

std::int64_t sample_index(const std::vector<double>& dist, Rng& rng) {
    double u = uniform01(rng);
    double acc = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i];
        if (u < acc) return static_cast<std::int64_t>(i);
    }
    // rounding left u above the running sum: take the last nonzero entry
    for (std::size_t i = dist.size(); i-- > 0;)
        if (dist[i] > 0) return static_cast<std::int64_t>(i);
    throw std::runtime_error("sample_index: empty distribution");
}

const std::vector<double>& FourierSampler1D::distribution(const PseudoPeriodicState& state) {
    if (state.fiber_id >= 0) {
        auto it = cache_.find(state.fiber_id);
        if (it != cache_.end()) return it->second;
    }
    std::vector<double> d = fourier_distribution_1d(state.support, state.q);
    const std::size_t bytes = d.size() * sizeof(double);
    if (state.fiber_id < 0) {
        scratch_ = std::move(d);
        return scratch_;
    }
    if (used_ + bytes > cap_) {
        cache_.clear();
        used_ = 0;
    }
    used_ += bytes;
    return cache_.emplace(state.fiber_id, std::move(d)).first->second;
}

QuantumSample FourierSampler1D::sample(const PseudoPeriodicState& state, Rng& rng, std::uint64_t lineage) {
    const auto& d = distribution(state);
    QuantumSample s;
    s.h = sample_index(d, rng);
    s.probability = d[static_cast<std::size_t>(s.h)];
    s.lineage = lineage;
    return s;
}

std::vector<double> fourier_distribution_2d(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber,
                                            std::int64_t A, std::int64_t B, std::int64_t M, std::int64_t cell_cap) {
    if (fiber.empty()) throw std::invalid_argument("fourier_distribution_2d: empty fiber");
    if (A != M * B) throw std::invalid_argument("fourier_distribution_2d: A must equal M B");
    if (A > cell_cap / B) throw TransformTooLarge("2-D transform of " + std::to_string(A) + " x " + std::to_string(B) +
                                                  " cells exceeds the cap of " + std::to_string(cell_cap));
    std::vector<std::complex<double>> v(static_cast<std::size_t>(A * B));
    for (auto [a, b] : fiber) v[static_cast<std::size_t>(a * B + b)] += 1.0;
    fft_inplace(v, static_cast<int>(A), static_cast<int>(B));
    const double scale = 1.0 / (static_cast<double>(A) * static_cast<double>(B) * static_cast<double>(fiber.size()));
    std::vector<double> p(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::norm(v[i]) * scale;
    clamp_and_normalize(p);
    return p;
}

std::vector<double> fourier_conditional_h(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber,
                                          std::int64_t A, std::int64_t B, std::int64_t k) {
    if (fiber.empty()) throw std::invalid_argument("fourier_conditional_h: empty fiber");
    std::vector<std::complex<double>> v(static_cast<std::size_t>(A));
    for (auto [a, b] : fiber) {
        // exact reduction of the phase exponent before converting to double
        const std::int64_t e = static_cast<std::int64_t>((static_cast<__int128>(b) * k) % B);
        const double th = kTwoPi * static_cast<double>(e) / static_cast<double>(B);
        v[static_cast<std::size_t>(a)] = std::complex<double>(std::cos(th), -std::sin(th));
    }
    fft_inplace(v, 1, static_cast<int>(A));
    const double scale = 1.0 / (static_cast<double>(A) * static_cast<double>(fiber.size()));
    std::vector<double> p(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::norm(v[i]) * scale;
    clamp_and_normalize(p);
    return p;
}

QuantumSample fourier_sample_2d(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber, std::int64_t A,
                                std::int64_t B, std::int64_t M, Rng& rng, std::int64_t cell_cap, std::uint64_t lineage) {
    if (A != M * B) throw std::invalid_argument("fourier_sample_2d: A must equal M B");
    QuantumSample s;
    s.lineage = lineage;
    std::vector<std::int64_t> seen;
    seen.reserve(fiber.size());
    for (auto [a, b] : fiber) seen.push_back(a);
    std::sort(seen.begin(), seen.end());
    const bool single_b = std::adjacent_find(seen.begin(), seen.end()) == seen.end();
    if (single_b) {
        s.k = uniform_below(rng, B);
        auto cond = fourier_conditional_h(fiber, A, B, s.k);
        s.h = sample_index(cond, rng);
        s.probability = cond[static_cast<std::size_t>(s.h)] / static_cast<double>(B);
        return s;
    }
    auto p = fourier_distribution_2d(fiber, A, B, M, cell_cap);
    std::int64_t idx = sample_index(p, rng);
    s.h = idx / B;
    s.k = idx % B;
    s.probability = p[static_cast<std::size_t>(idx)];
    return s;
}

}  // namespace infra

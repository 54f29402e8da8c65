#include "infra/dlog.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace infra {

namespace {

constexpr std::uint64_t kStreamTrial = 3;
constexpr std::uint64_t kStreamShift = 4;

using i128 = __int128;

i128 to_i128(const BigInt& v) {
    if (bit_length(v) > 124) throw DlogParamError("exact line engine: value exceeds 124 bits");
    BigInt a = abs(v);
    const BigInt lo = a & BigInt("18446744073709551615");
    const BigInt hi = a >> 64;
    i128 r = (static_cast<i128>(static_cast<unsigned long long>(hi.get_ui())) << 64) |
             static_cast<i128>(static_cast<unsigned long long>(lo.get_ui()));
    return v < 0 ? -r : r;
}

i128 floor_mod(i128 a, i128 m) {
    i128 r = a % m;
    return r < 0 ? r + m : r;
}

i128 ceil_div(i128 a, i128 b) {  // b > 0
    i128 q = a / b;
    if (a % b != 0 && a > 0) ++q;
    return q;
}

BigInt lcm_big(const BigInt& a, const BigInt& b) {
    BigInt r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

std::vector<std::pair<std::int64_t, std::int64_t>> to_pairs(const std::vector<std::int64_t>& support,
                                                            std::int64_t cols) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    out.reserve(support.size());
    for (auto i : support) out.emplace_back(i / cols, i % cols);
    return out;
}

DlogSample draw_h(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber, const DlogParams& P,
                  DlogSample s, Rng& rng) {
    auto cond = fourier_conditional_h(fiber, P.A, P.B, s.k);
    s.h = sample_index(cond, rng);
    s.probability = cond[static_cast<std::size_t>(s.h)] / static_cast<double>(P.B);
    return s;
}

bool passes(std::int64_t k1, std::int64_t k2, std::int64_t k_max) {
    if (k1 > k_max || k2 > k_max) return false;
    return std::gcd(k1, k2) == 1;
}

}  // namespace

std::string to_string(DlogEngine e) {
    switch (e) {
        case DlogEngine::Auto: return "auto";
        case DlogEngine::Table: return "table";
        case DlogEngine::PointTable: return "point-table";
        case DlogEngine::ExactLine: return "exact-line";
    }
    return "auto";
}

DlogEngine parse_engine(std::string_view s) {
    if (s == "auto") return DlogEngine::Auto;
    if (s == "table") return DlogEngine::Table;
    if (s == "point-table") return DlogEngine::PointTable;
    if (s == "exact-line") return DlogEngine::ExactLine;
    throw std::invalid_argument("unknown dlog engine '" + std::string(s) + "'");
}

// ---- parameters -------------------------------------------------------------

bool DlogParams::invariant_holds_for(const ScaledReal& R) const {
    const ScaledReal lhs = ScaledReal(big(M) * big(B)) - ScaledReal(big(M) * big(N)) * R;
    return abs(lhs) <= ScaledReal(1, big(2));
}

bool DlogParams::invariant_holds() const { return invariant_holds_for(R_hat); }

DlogParams select_params(const Infrastructure& infra, const ScaledReal& R_coarse, const ScaledReal& coarse_error,
                         const DlogConfig& cfg) {
    const auto& p = infra.params();
    DlogParams P;
    P.c = to_i64(ceil(ScaledReal(2) / p.d_min_lower));
    // M = ceil(2 R_hat + 1) exceeds 2R whenever the coarse error is below 1/2
    if (coarse_error >= ScaledReal(1, big(2))) throw DlogParamError("coarse circumference error must be below 1/2");
    P.M = to_i64(ceil(ScaledReal(2) * R_coarse + ScaledReal(1)));
    const ScaledReal eps0(1, big(16) * big(P.M) * big(P.M) * big(P.c));
    P.epsilon = std::min(eps0, cfg.delta / ScaledReal(4));
    auto refined = refine_estimate(infra, R_coarse, P.epsilon);
    if (!refined) throw DlogParamError("circumference refinement failed near " + R_coarse.to_decimal(6));
    P.R_hat = *refined;

    auto B_of = [&](std::int64_t q) { return to_i64(round_nearest(P.R_hat * big(q * P.c))); };
    auto ok = [&](std::int64_t q) {
        DlogParams t = P;
        t.N = q * P.c;
        t.B = B_of(q);
        return t.invariant_holds();
    };

    if (cfg.q_override > 0) {
        P.q = cfg.q_override;
    } else {
        const Convergent cv = cf_approx(P.R_hat * big(P.c), ScaledReal(big(4 * P.M)));
        P.q = to_i64(cv.d);
        if (cfg.min_B > 0 && B_of(P.q) < cfg.min_B) {
            const std::int64_t start =
                std::max(P.q, to_i64(ceil(ScaledReal(big(cfg.min_B)) / (P.R_hat * big(P.c)))));
            std::int64_t found = 0;
            for (std::int64_t q = start; q < start + 100000 && !found; ++q)
                if (B_of(q) >= cfg.min_B && ok(q)) found = q;
            if (!found) throw DlogParamError("no q reaches B >= " + std::to_string(cfg.min_B) + " under the invariant");
            P.q = found;
        }
    }
    P.N = P.q * P.c;
    if (P.N > 4 * P.M * P.c) {
        // N beyond the lemma's range: tighten R_hat so that N R |R - R_hat| / 8 stays below 1/16
        const ScaledReal eps1 = ScaledReal(1, big(2)) / (p.R_upper * big(P.N));
        if (eps1 < P.epsilon) {
            P.epsilon = eps1;
            auto again = refine_estimate(infra, P.R_hat, P.epsilon);
            if (!again) throw DlogParamError("circumference refinement failed at the tighter target");
            P.R_hat = *again;
        }
    }
    P.B = B_of(P.q);
    if (!P.invariant_holds())
        throw DlogParamError("|M B - M N R_hat| > 1/2 for q = " + std::to_string(P.q) +
                             "; pick q from the convergents of R_hat * ceil(2/d_min)");
    if (P.B < 3) throw DlogParamError("B = " + std::to_string(P.B) + " is too small");
    P.A = P.M * P.B;
    P.L = offset_L_dlog(P.N, P.A, P.R_hat, p, cfg.p_g);
    P.m = choose_precision(P.R_hat + ScaledReal(1), P.L, p, P.A).m;

    const std::int64_t default_k = P.B / 64 - 1;
    if (cfg.k_max >= 0) {
        P.k_max = std::min(cfg.k_max, P.B - 1);
    } else if (default_k >= 1) {
        P.k_max = default_k;
    } else {
        P.k_max = P.B - 1;
        P.k_filter_relaxed = true;
    }

    const KappaChoice kc = bound_dlog(static_cast<double>(P.q), static_cast<double>(P.B), cfg.p_g, cfg.kappa_grid);
    P.kappa = kc.kappa;
    P.bound = kc.value;
    if (P.R_hat >= ScaledReal(256) && P.q >= 8) {
        const KappaChoice ks = bound_dlog_simplified(cfg.p_g, cfg.kappa_grid);
        P.kappa_simplified = ks.kappa;
        P.bound_simplified = ks.value;
    }

    const std::int64_t cells = P.A * (P.B - 1);
    const bool exact = dynamic_cast<const ExactInfrastructure*>(&infra) != nullptr;
    auto too_large = [&] {
        const double shrink = static_cast<double>(cells) / static_cast<double>(cfg.cell_cap);
        return TransformTooLarge("g_N table of " + std::to_string(cells) + " cells exceeds the cap of " +
                                 std::to_string(cfg.cell_cap) + "; shrink A*B by a factor of at least " +
                                 std::to_string(shrink));
    };
    switch (cfg.engine) {
        case DlogEngine::Auto:
            if (cells <= cfg.cell_cap)
                P.engine = DlogEngine::Table;
            else if (exact)
                P.engine = DlogEngine::ExactLine;
            else
                throw too_large();
            break;
        case DlogEngine::Table:
        case DlogEngine::PointTable:
            if (cells > cfg.cell_cap) throw too_large();
            P.engine = cfg.engine;
            break;
        case DlogEngine::ExactLine:
            if (!exact) throw DlogParamError("the exact line engine needs an oracle backend");
            P.engine = DlogEngine::ExactLine;
            break;
    }
    return P;
}

// ---- combination ------------------------------------------------------------

Bezout ext_euclid(std::int64_t k1, std::int64_t k2) {
    if (k1 < 0 || k2 < 0) throw std::invalid_argument("ext_euclid: negative input");
    if (k1 == 0 && k2 == 0) throw std::invalid_argument("ext_euclid: both inputs are zero");
    BigInt r0 = k1, r1 = k2, s0 = 1, s1 = 0, t0 = 0, t1 = 1;
    while (r1 != 0) {
        BigInt q = r0 / r1;
        BigInt r2 = r0 - q * r1, s2 = s0 - q * s1, t2 = t0 - q * t1;
        r0 = r1, r1 = r2, s0 = s1, s1 = s2, t0 = t1, t1 = t2;
    }
    return {r0, s0, t0};
}

std::optional<Combined> combine_samples(const DlogSample& s1, const DlogSample& s2, const DlogParams& params) {
    if (s1.k == 0 && s2.k == 0) throw std::invalid_argument("combine_samples: k1 = k2 = 0");
    if (s1.h < 0 || s2.h < 0) throw std::invalid_argument("combine_samples: h was not drawn");
    const Bezout e = ext_euclid(s1.k, s2.k);
    if (e.g != 1) return std::nullopt;
    Combined c;
    c.s = e.s;
    c.t = e.t;
    c.r = ScaledReal(e.s * big(s1.h) + e.t * big(s2.h), big(params.N) * big(params.M));
    c.d_hat = (c.r - params.R_hat * floor(c.r / params.R_hat)).normalized();
    return c;
}

// ---- engines ----------------------------------------------------------------

struct DlogSampler::Impl {
    virtual ~Impl() = default;
    virtual QValue value_at(std::int64_t a, std::int64_t b) = 0;
    /** Fiber of a uniformly drawn cell; id is engine specific. */
    virtual std::int64_t measure(Rng& rng) = 0;
    virtual std::vector<std::pair<std::int64_t, std::int64_t>> fiber(std::int64_t id) = 0;
    virtual QValue fiber_value(std::int64_t id) = 0;
    virtual std::int64_t fiber_size(std::int64_t id) = 0;
    /** Whether every a of the fiber carries a single b. */
    virtual bool single_b(std::int64_t id) = 0;
    virtual std::int64_t locate(std::int64_t a, std::int64_t b) = 0;
    virtual std::vector<std::int64_t> sizes() = 0;
    virtual bool k_first() const = 0;
};

namespace {

class TableImpl final : public DlogSampler::Impl {
public:
    TableImpl(const Infrastructure& infra, const Element& x, const DlogParams& P, const ShiftedGrid& grid, bool sweep)
        : P_(P), cols_(P.B - 1) {
        CircleGroup G(infra, P.m);
        t_.q = P.A * cols_;
        t_.fiber_of.resize(static_cast<std::size_t>(t_.q));
        std::unordered_map<QValue, std::int32_t, QValueHash> ids;
        auto put = [&](std::int64_t i, const QValue& v) {
            auto [it, fresh] = ids.emplace(v, static_cast<std::int32_t>(t_.fibers.size()));
            if (fresh) {
                t_.fibers.emplace_back();
                t_.values.push_back(v);
            }
            t_.fibers[static_cast<std::size_t>(it->second)].push_back(i);
            t_.fiber_of[static_cast<std::size_t>(i)] = it->second;
        };
        const ScaledReal shift(big(grid.j), big(grid.L));
        const ScaledReal step(1, big(grid.N));
        const FRep base{x, ScaledReal(), 0};
        for (std::int64_t a = 0; a < P.A; ++a) {
            if (!sweep) {
                for (std::int64_t b = 0; b < cols_; ++b) put(a * cols_ + b, G.quantize_gN(big(a), big(b), x, grid));
                continue;
            }
            // a (x, 0) once, then walk the row b/N + j/L with baby steps
            FRep Pa = G.scalar_mul_cached(big(a), base);
            Element y = Pa.x;
            ScaledReal pos = Pa.f + shift;
            ScaledReal gap = infra.delta_bs_approx(y, P.m);
            for (std::int64_t b = 0; b < cols_; ++b) {
                while (pos >= gap) {
                    pos -= gap;
                    y = infra.bs(y);
                    gap = infra.delta_bs_approx(y, P.m);
                }
                put(a * cols_ + b, QValue{y, to_i64(floor_scaled(pos, big(grid.N)))});
                pos += step;
            }
        }
        single_.assign(t_.fibers.size(), -1);
    }

    QValue value_at(std::int64_t a, std::int64_t b) override { return t_.values[id_at(a, b)]; }
    std::int64_t measure(Rng& rng) override {
        return t_.fiber_of[static_cast<std::size_t>(uniform_below(rng, t_.q))];
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> fiber(std::int64_t id) override {
        return to_pairs(t_.fibers[static_cast<std::size_t>(id)], cols_);
    }
    QValue fiber_value(std::int64_t id) override { return t_.values[static_cast<std::size_t>(id)]; }
    std::int64_t fiber_size(std::int64_t id) override {
        return static_cast<std::int64_t>(t_.fibers[static_cast<std::size_t>(id)].size());
    }
    bool single_b(std::int64_t id) override {
        auto& flag = single_[static_cast<std::size_t>(id)];
        if (flag < 0) {
            const auto& f = t_.fibers[static_cast<std::size_t>(id)];
            flag = 1;
            for (std::size_t i = 1; i < f.size(); ++i)
                if (f[i] / cols_ == f[i - 1] / cols_) flag = 0;
        }
        return flag == 1;
    }
    std::int64_t locate(std::int64_t a, std::int64_t b) override { return static_cast<std::int64_t>(id_at(a, b)); }
    std::vector<std::int64_t> sizes() override {
        std::vector<std::int64_t> out;
        out.reserve(t_.fibers.size());
        for (const auto& f : t_.fibers) out.push_back(static_cast<std::int64_t>(f.size()));
        return out;
    }
    bool k_first() const override { return false; }

private:
    std::size_t id_at(std::int64_t a, std::int64_t b) const {
        if (a < 0 || a >= P_.A || b < 0 || b >= cols_) throw std::out_of_range("g_N: point outside A x (B-1)");
        return static_cast<std::size_t>(t_.fiber_of[static_cast<std::size_t>(a * cols_ + b)]);
    }

    DlogParams P_;
    std::int64_t cols_;
    FiberTable t_;
    std::vector<std::int8_t> single_;
};

/**
 * Exact arithmetic on a common denominator Q: every distance, the shift j/L
 * and the grid step 1/N become integers, so the unique b of each a in a
 * fiber is a ceiling division.
 */
class ExactLineImpl final : public DlogSampler::Impl {
public:
    ExactLineImpl(const ExactInfrastructure& infra, const Element& x, const DlogParams& P, const ShiftedGrid& grid)
        : P_(P), cols_(P.B - 1) {
        const std::size_t n = infra.size();
        std::vector<ScaledReal> dist(n), gap(n);
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = infra.oracle_distance(infra.element_at(i)).normalized();
            gap[i] = infra.oracle_gap(i).normalized();
        }
        const ScaledReal X = infra.oracle_distance(x).normalized();
        const ScaledReal R = infra.oracle_circumference().normalized();
        BigInt Q = big(grid.L);
        Q = lcm_big(Q, X.scale());
        Q = lcm_big(Q, R.scale());
        for (std::size_t i = 0; i < n; ++i) Q = lcm_big(lcm_big(Q, dist[i].scale()), gap[i].scale());
        auto scaled = [&](const ScaledReal& v) { return to_i128(v.mantissa() * (Q / v.scale())); };
        XQ_ = scaled(X);
        RQ_ = scaled(R);
        step_ = to_i128(Q / big(grid.N));
        JQ_ = to_i128(big(grid.j) * (Q / big(grid.L)));
        // headroom for a X + b/N + j/L + R in 128 bits
        const BigInt peak = big(P.A) * (X.mantissa() * (Q / X.scale())) + big(P.B) * (Q / big(grid.N)) + Q * 4 +
                            R.mantissa() * (Q / R.scale()) * 2;
        if (bit_length(peak) > 120) throw DlogParamError("exact line engine: common denominator too large");
        D_.resize(n);
        end_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            D_[i] = scaled(dist[i]);
            end_[i] = D_[i] + scaled(gap[i]);
        }
        elements_.resize(n);
        for (std::size_t i = 0; i < n; ++i) elements_[i] = infra.element_at(i);
    }

    QValue value_at(std::int64_t a, std::int64_t b) override { return fiber_value(locate(a, b)); }

    std::int64_t measure(Rng& rng) override {
        const std::int64_t a = uniform_below(rng, P_.A);
        const std::int64_t b = uniform_below(rng, cols_);
        return locate(a, b);
    }

    // id packs (element index, l)
    std::int64_t locate(std::int64_t a, std::int64_t b) override {
        if (a < 0 || a >= P_.A || b < 0 || b >= cols_) throw std::out_of_range("g_N: point outside A x (B-1)");
        const i128 t = floor_mod(static_cast<i128>(a) * XQ_ + JQ_ + static_cast<i128>(b) * step_, RQ_);
        const auto it = std::upper_bound(D_.begin(), D_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - D_.begin()) - 1;
        const std::int64_t l = static_cast<std::int64_t>((t - D_[i]) / step_);
        return pack(i, l);
    }

    std::vector<std::pair<std::int64_t, std::int64_t>> fiber(std::int64_t id) override {
        if (cached_id_ == id) return cached_;
        const auto [i, l] = unpack(id);
        const i128 W = D_[i] + static_cast<i128>(l) * step_;
        const i128 end = std::min(W + step_, end_[i]);
        std::vector<std::pair<std::int64_t, std::int64_t>> out;
        for (std::int64_t a = 0; a < P_.A; ++a) {
            const i128 T = static_cast<i128>(a) * XQ_ + JQ_;
            const i128 u = floor_mod(W - T, RQ_);
            int hits = 0;
            for (i128 z : {u - RQ_, u}) {
                const i128 b = ceil_div(z, step_);
                if (b < 0 || b >= cols_) continue;
                const i128 tm = floor_mod(T + b * step_, RQ_);
                if (tm >= W && tm < end) {
                    out.emplace_back(a, static_cast<std::int64_t>(b));
                    ++hits;
                }
            }
            if (hits > 1) throw std::logic_error("exact line engine: two b values for one a");
        }
        cached_id_ = id;
        cached_ = out;
        return out;
    }

    QValue fiber_value(std::int64_t id) override {
        const auto [i, l] = unpack(id);
        return {elements_[i], l};
    }
    std::int64_t fiber_size(std::int64_t id) override { return static_cast<std::int64_t>(fiber(id).size()); }
    bool single_b(std::int64_t) override { return true; }
    std::vector<std::int64_t> sizes() override {
        throw std::logic_error("fiber census is only available on table engines");
    }
    bool k_first() const override { return true; }

private:
    static constexpr std::int64_t kLBits = 32;
    static std::int64_t pack(std::size_t i, std::int64_t l) {
        return (static_cast<std::int64_t>(i) << kLBits) | l;
    }
    static std::pair<std::size_t, std::int64_t> unpack(std::int64_t id) {
        return {static_cast<std::size_t>(id >> kLBits), id & ((std::int64_t{1} << kLBits) - 1)};
    }

    DlogParams P_;
    std::int64_t cols_;
    i128 XQ_ = 0, RQ_ = 1, step_ = 1, JQ_ = 0;
    std::vector<i128> D_, end_;
    std::vector<Element> elements_;
    std::int64_t cached_id_ = -1;
    std::vector<std::pair<std::int64_t, std::int64_t>> cached_;
};

}  // namespace

DlogSampler::DlogSampler(const Infrastructure& infra, const Element& x, const DlogParams& params, ShiftedGrid grid,
                         std::int64_t cell_cap)
    : infra_(&infra), x_(x), params_(params), grid_(grid), cell_cap_(cell_cap) {
    if (!infra.is_valid(x)) throw MalformedElement("dlog: target is not an element of the infrastructure");
    set_grid(grid);
}

DlogSampler::~DlogSampler() = default;

void DlogSampler::set_grid(const ShiftedGrid& g) {
    if (g.N != params_.N) throw std::invalid_argument("dlog sampler: grid N differs from the parameters");
    grid_ = g;
    switch (params_.engine) {
        case DlogEngine::ExactLine:
            impl_ = std::make_unique<ExactLineImpl>(as_exact(*infra_), x_, params_, grid_);
            break;
        case DlogEngine::PointTable:
        case DlogEngine::Table:
        case DlogEngine::Auto:
            if (params_.A * (params_.B - 1) > cell_cap_) throw TransformTooLarge("dlog sampler: table over the cap");
            impl_ = std::make_unique<TableImpl>(*infra_, x_, params_, grid_, params_.engine != DlogEngine::PointTable);
            break;
    }
}

DlogSample DlogSampler::sample(Rng& rng) {
    DlogSample s;
    if (impl_->k_first()) s.k = uniform_below(rng, params_.B);
    const std::int64_t id = impl_->measure(rng);
    auto fib = impl_->fiber(id);
    s.value = impl_->fiber_value(id);
    s.fiber_size = static_cast<std::int64_t>(fib.size());
    if (impl_->k_first()) return draw_h(fib, params_, s, rng);
    QuantumSample q = fourier_sample_2d(fib, params_.A, params_.B, params_.M, rng, cell_cap_);
    s.h = q.h;
    s.k = q.k;
    s.probability = q.probability;
    return s;
}

std::pair<DlogSample, DlogSample> DlogSampler::sample_pair_lazy(Rng& rng, std::int64_t k_max) {
    DlogSample s[2];
    std::int64_t ids[2] = {-1, -1};
    if (impl_->k_first()) {
        s[0].k = uniform_below(rng, params_.B);
        s[1].k = uniform_below(rng, params_.B);
        if (!passes(s[0].k, s[1].k, k_max)) return {s[0], s[1]};
        for (int i = 0; i < 2; ++i) {
            ids[i] = impl_->measure(rng);
            auto fib = impl_->fiber(ids[i]);
            s[i].value = impl_->fiber_value(ids[i]);
            s[i].fiber_size = static_cast<std::int64_t>(fib.size());
            s[i] = draw_h(fib, params_, s[i], rng);
        }
        return {s[0], s[1]};
    }
    for (int i = 0; i < 2; ++i) {
        ids[i] = impl_->measure(rng);
        s[i].value = impl_->fiber_value(ids[i]);
        s[i].fiber_size = impl_->fiber_size(ids[i]);
        if (impl_->single_b(ids[i])) {
            s[i].k = uniform_below(rng, params_.B);
        } else {
            QuantumSample q = fourier_sample_2d(impl_->fiber(ids[i]), params_.A, params_.B, params_.M, rng, cell_cap_);
            s[i].h = q.h;
            s[i].k = q.k;
            s[i].probability = q.probability;
        }
    }
    if (!passes(s[0].k, s[1].k, k_max)) return {s[0], s[1]};
    for (int i = 0; i < 2; ++i)
        if (s[i].h < 0) s[i] = draw_h(impl_->fiber(ids[i]), params_, s[i], rng);
    return {s[0], s[1]};
}

std::vector<std::pair<std::int64_t, std::int64_t>> DlogSampler::fiber_of(std::int64_t a, std::int64_t b) {
    return impl_->fiber(impl_->locate(a, b));
}

QValue DlogSampler::value_at(std::int64_t a, std::int64_t b) { return impl_->value_at(a, b); }

std::vector<std::int64_t> DlogSampler::fiber_sizes() { return impl_->sizes(); }

// ---- verification and pipeline ---------------------------------------------

std::optional<ScaledReal> locate_target(const Infrastructure& infra, const Element& x, const ScaledReal& d_hat,
                                        const ScaledReal& R_hat, const ScaledReal& delta) {
    const auto& p = infra.params();
    const std::int64_t W =
        p.k_bar * (to_i64(ceil((ScaledReal(1) + p.d_max_upper) / p.d_k_bar)) + 1) + 1;
    const std::int64_t L_ref = to_i64(ceil(ScaledReal(big(8 * (W + 2))) / delta));
    const PrecisionBudget budget = choose_precision(R_hat + ScaledReal(2), L_ref, p);
    CircleGroup G(infra, budget.m);
    ScaledReal r = d_hat;
    if (r.sign() < 0) r += R_hat * (-floor(r / R_hat));
    const FRep h = G.h_tilde(r);
    const ScaledReal acc = r - h.f;

    std::optional<ScaledReal> best;
    auto consider = [&](const ScaledReal& v) {
        if (!best || abs(v - r) < abs(*best - r)) best = v;
    };
    if (h.x == x) consider(acc);
    Element y = h.x;
    ScaledReal a = acc;
    for (std::int64_t t = 0; t < W; ++t) {
        a += infra.delta_bs_approx(y, budget.m);
        y = infra.bs(y);
        if (y == x) consider(a);
    }
    y = h.x;
    a = acc;
    for (std::int64_t t = 0; t < W; ++t) {
        y = infra.bs_inv(y);
        a -= infra.delta_bs_approx(y, budget.m);
        if (y == x) consider(a);
    }
    // exact deltas make best exact; otherwise keep a delta/4 margin for its evaluation error
    const ScaledReal reach = infra.exact_deltas() ? ScaledReal(1) : ScaledReal(1) - delta / ScaledReal(4);
    if (!best || abs(*best - r) > reach) return std::nullopt;
    ScaledReal out = *best;
    while (out.sign() < 0) out += R_hat;
    while (out >= R_hat) out -= R_hat;
    return out.normalized();
}

std::uint64_t dlog_trial_seed(std::uint64_t seed, std::int64_t index) {
    return derive_seed(seed, kStreamTrial, static_cast<std::uint64_t>(index));
}

DlogTrial run_dlog_trial(const Infrastructure& infra, const Element& x, DlogSampler& sampler, std::uint64_t seed,
                         std::int64_t index, const ScaledReal& delta) {
    const std::uint64_t lineage = dlog_trial_seed(seed, index);
    Rng rng(lineage);
    DlogTrial tr;
    const auto& P = sampler.params();
    std::tie(tr.s1, tr.s2) = sampler.sample_pair_lazy(rng, P.k_max);
    tr.s1.lineage = tr.s2.lineage = lineage;
    if (tr.s1.k > P.k_max || tr.s2.k > P.k_max) return tr;
    tr.outcome = DlogTrial::Outcome::NotCoprime;
    if (tr.s1.h < 0 || tr.s2.h < 0) return tr;
    tr.combined = combine_samples(tr.s1, tr.s2, P);
    if (!tr.combined) return tr;
    tr.outcome = locate_target(infra, x, tr.combined->d_hat, P.R_hat, delta) ? DlogTrial::Outcome::Accepted
                                                                               : DlogTrial::Outcome::VerifyFailed;
    return tr;
}

DlogResult dlog_pipeline(const Infrastructure& infra, const Element& x, const DlogConfig& cfg) {
    DlogResult res;
    if (!infra.is_valid(x)) throw MalformedElement("dlog: target is not an element of the infrastructure");
    ScaledReal R_coarse, err;
    if (cfg.circumference_hint) {
        R_coarse = *cfg.circumference_hint;
        err = cfg.circumference.delta;
    } else {
        res.circumference = circumference_pipeline(infra, cfg.circumference);
        if (!res.circumference->success) {
            res.failure = "circumference: " + res.circumference->failure;
            return res;
        }
        R_coarse = res.circumference->R_hat;
        err = res.circumference->delta;
    }
    res.params = select_params(infra, R_coarse, err, cfg);
    const auto& P = res.params;

    Rng shift_rng = make_rng(cfg.seed, kStreamShift);
    ShiftedGrid grid = pick_shift_dlog(P.N, P.A, P.R_hat, infra.params(), cfg.p_g, shift_rng);
    grid.validate(infra.params());
    ShiftPolicy policy(grid, cfg.switch_after);
    DlogSampler sampler(infra, x, P, grid, cfg.cell_cap);

    for (std::int64_t t = 0; t < cfg.max_trials; ++t) {
        DlogTrial tr = run_dlog_trial(infra, x, sampler, cfg.seed, t, cfg.delta);
        res.trials = t + 1;
        switch (tr.outcome) {
            case DlogTrial::Outcome::Filtered: ++res.filtered; continue;
            case DlogTrial::Outcome::NotCoprime: ++res.not_coprime; continue;
            case DlogTrial::Outcome::VerifyFailed:
                ++res.verify_failed;
                // only a failed verification points at the shift; filtered draws say nothing about it
                if (policy.record(false, shift_rng)) sampler.set_grid(policy.grid());
                continue;
            case DlogTrial::Outcome::Accepted: break;
        }
        policy.record(true, shift_rng);
        res.success = true;
        res.s1 = tr.s1;
        res.s2 = tr.s2;
        res.s = tr.combined->s;
        res.t = tr.combined->t;
        res.r = tr.combined->r;
        res.d_hat = tr.combined->d_hat;
        res.d_refined = *locate_target(infra, x, res.d_hat, P.R_hat, cfg.delta);
        break;
    }
    res.j = sampler.grid().j;
    res.shift_switches = policy.switches();
    if (!res.success) res.failure = "trial cap of " + std::to_string(cfg.max_trials) + " exhausted";
    return res;
}

}  // namespace infra

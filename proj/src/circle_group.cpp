#include "infra/circle_group.hpp"

#include <algorithm>
#include <cmath>

namespace infra {

namespace {

double to_d(const ScaledReal& x) { return x.to_double(); }

double ceil_ratio(double num, double den) { return std::ceil(num / den); }

}  // namespace

// ---- precision ------------------------------------------------------------

double closed_form_error_h(const InfraParams& p, double B, unsigned m) {
    const double k = p.k_bar;
    const double dk = to_d(p.d_k_bar);
    const double dmax = to_d(p.d_max_upper);
    const double C = ceil_ratio(2 * dmax, dk);
    const double u = std::ldexp(1.0, -static_cast<int>(m));
    // number of summands in the double-and-add is at most ceil(log2(a_max)) + 1
    const double terms = std::ceil(std::log2(B / dk + 1)) + 1;
    const double e1 = (B + dk) / dk * u * (k + 1 + k * C) + terms * u * (1 + k * C);
    const double landing = e1 + std::max(k, k / 2 + 1) * dmax;
    return e1 + k * u * (std::ceil(landing / dk) + 1);
}

double closed_form_error_g(const InfraParams& p, double B, std::int64_t A, unsigned m) {
    const double k = p.k_bar;
    const double C = ceil_ratio(2 * to_d(p.d_max_upper), to_d(p.d_k_bar));
    const double u = std::ldexp(1.0, -static_cast<int>(m));
    return closed_form_error_h(p, B, m) + 4.0 * static_cast<double>(A) * (1 + k * C) * u + (1 + k * C) * u;
}

PrecisionBudget choose_precision(const ScaledReal& B, std::int64_t L, const InfraParams& p, std::int64_t A) {
    if (L < 1) throw std::invalid_argument("choose_precision: L must be positive");
    PrecisionBudget b;
    b.B = B;
    b.L = L;
    b.A = A;
    const double Bd = std::max(to_d(B), 0.0);
    const double target = 1.0 / (2.0 * static_cast<double>(L));
    auto bound = [&](unsigned m) { return A > 0 ? closed_form_error_g(p, Bd, A, m) : closed_form_error_h(p, Bd, m); };
    for (unsigned m = 1; m < 2000; ++m) {
        if (std::ldexp(1.0, -static_cast<int>(m)) * static_cast<double>(L) >= 1.0) continue;
        if (bound(m) < target) {
            b.m = m + 2;
            b.bound = bound(b.m);
            return b;
        }
    }
    throw BudgetFailure("choose_precision: no precision below 2000 bits meets the bound");
}

// ---- grid -----------------------------------------------------------------

ScaledReal ShiftedGrid::point(const BigInt& i) const {
    return ScaledReal(i * big(L / N) + big(j), big(L));
}

void ShiftedGrid::validate(const InfraParams& p) const {
    if (N < 1 || L < 1 || L % N != 0) throw std::invalid_argument("ShiftedGrid: L must be a positive multiple of N");
    if (j < 0 || j >= L / N) throw std::invalid_argument("ShiftedGrid: shift outside [0, L/N)");
    if (big(N) < ceil(ScaledReal(2) / p.d_min_lower)) throw std::invalid_argument("ShiftedGrid: N below ceil(2/d_min)");
}

std::int64_t offset_L_circ(std::int64_t N, std::int64_t q, const InfraParams& p, double p_h) {
    if (!(p_h > 0 && p_h < 1)) throw std::invalid_argument("offset_L_circ: p_h must lie in (0,1)");
    const BigInt inner = ceil(ScaledReal(big(q)) / (p.d_k_bar * big(N)));
    const double outer = std::ceil(2.0 * p.k_bar / (1.0 - p_h) * inner.get_d());
    return N * static_cast<std::int64_t>(outer);
}

ShiftedGrid pick_shift_circ(std::int64_t N, std::int64_t q, const InfraParams& p, double p_h, Rng& rng) {
    ShiftedGrid g;
    g.N = N;
    g.L = offset_L_circ(N, q, p, p_h);
    g.j = uniform_below(rng, g.L / N);
    return g;
}

std::int64_t offset_L_dlog(std::int64_t N, std::int64_t A, const ScaledReal& R_hat, const InfraParams& p, double p_g) {
    if (!(p_g > 0 && p_g < 1)) throw std::invalid_argument("offset_L_dlog: p_g must lie in (0,1)");
    const BigInt inner = ceil(R_hat / p.d_k_bar);
    const double outer = std::ceil(2.0 * static_cast<double>(A) * p.k_bar / (1.0 - p_g) * inner.get_d());
    return static_cast<std::int64_t>(outer) * N;
}

ShiftedGrid pick_shift_dlog(std::int64_t N, std::int64_t A, const ScaledReal& R_hat, const InfraParams& p, double p_g,
                            Rng& rng) {
    ShiftedGrid g;
    g.N = N;
    g.L = offset_L_dlog(N, A, R_hat, p, p_g);
    g.j = uniform_below(rng, g.L / N);
    return g;
}

bool ShiftPolicy::record(bool success, Rng& rng) {
    if (success) {
        failures_ = 0;
        return false;
    }
    if (++failures_ < switch_after_) return false;
    failures_ = 0;
    ++switches_;
    grid_.j = uniform_below(rng, grid_.L / grid_.N);
    return true;
}

// ---- group ----------------------------------------------------------------

CircleGroup::CircleGroup(const Infrastructure& infra, unsigned m) : infra_(&infra), m_(m) {
    const auto& p = infra.params();
    default_budget_ = 4 * p.k_bar * to_i64(ceil(ScaledReal(2) * p.d_max_upper / p.d_k_bar));
    Element x = infra.origin();
    ScaledReal d;
    for (int i = 0; i < p.k_bar; ++i) {
        d += infra.delta_bs_approx(x, m);
        x = infra.bs(x);
    }
    x_kbar_ = x;
    d_kbar_tilde_ = d < p.d_k_bar ? p.d_k_bar : d;
    d_kbar_err_units_ = p.k_bar;
}

FRep CircleGroup::reduce(const Element& x0, const ScaledReal& f0, std::int64_t max_steps, double err_units,
                         int* steps) const {
    const std::int64_t budget = max_steps > 0 ? max_steps : default_budget_;
    Element x = x0;
    ScaledReal f = f0;
    std::int64_t n = 0;
    auto bump = [&] {
        if (++n > budget)
            throw StepBudgetExceeded("reduce: more than " + std::to_string(budget) + " baby steps from " +
                                     infra_->format(x0));
    };
    while (f.sign() < 0) {
        bump();
        x = infra_->bs_inv(x);
        f += infra_->delta_bs_approx(x, m_);
    }
    for (;;) {
        ScaledReal d = infra_->delta_bs_approx(x, m_);
        if (f < d) break;
        bump();
        f -= d;
        x = infra_->bs(x);
    }
    if (steps) *steps = static_cast<int>(n);
    return {x, f, err_units + static_cast<double>(n)};
}

FRep CircleGroup::add(const FRep& p, const FRep& q) const {
    auto [z, delta] = infra_->gs_with_delta(p.x, q.x, m_);
    return reduce(z, p.f + q.f - delta, 0, p.err_units + q.err_units + 1);
}

FRep CircleGroup::scalar_mul(const BigInt& a, const FRep& p) const {
    if (a < 0) throw std::invalid_argument("scalar_mul: negative scalar");
    FRep acc = identity();
    FRep cur = p;
    BigInt k = a;
    while (k > 0) {
        if (mpz_odd_p(k.get_mpz_t())) acc = add(acc, cur);
        k >>= 1;
        if (k > 0) cur = add(cur, cur);
    }
    return acc;
}

FRep CircleGroup::scalar_mul_cached(const BigInt& a, const FRep& base) const {
    if (a < 0) throw std::invalid_argument("scalar_mul: negative scalar");
    const std::size_t bits = bit_length(a);
    std::vector<FRep> pow;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto& t = tables_[base.x];
        if (t.empty()) t.push_back(base);
        while (t.size() < bits) t.push_back(add(t.back(), t.back()));
        pow.assign(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(bits));
    }
    FRep acc = identity();
    for (std::size_t i = 0; i < bits; ++i)
        if (mpz_tstbit(a.get_mpz_t(), i)) acc = add(acc, pow[i]);
    return acc;
}

FRep CircleGroup::h_tilde(const ScaledReal& r, HTildeStats* stats) const {
    if (r.sign() < 0) throw std::invalid_argument("h_tilde: negative evaluation point");
    const auto& p = infra_->params();
    const BigInt a = round_nearest(r / d_kbar_tilde_);
    FRep base{x_kbar_, ScaledReal(), d_kbar_err_units_};
    FRep P = a == 0 ? identity() : scalar_mul_cached(a, base);
    ScaledReal f = P.f + (r - d_kbar_tilde_ * a);
    const std::int64_t landing_budget =
        p.k_bar * to_i64(ceil((d_kbar_tilde_ / ScaledReal(2) + p.d_max_upper) / p.d_k_bar)) + p.k_bar;
    const std::int64_t budget = std::max(default_budget_, landing_budget);
    int steps = 0;
    FRep out = reduce(P.x, f, budget, P.err_units, &steps);
    {
        std::lock_guard<std::mutex> lock(mu_);
        max_landing_ = std::max(max_landing_, steps);
        if (steps > p.k_bar) ++beyond_kbar_;
    }
    if (stats) {
        stats->a = a;
        stats->landing_steps = steps;
        stats->default_budget = default_budget_;
        stats->budget = budget;
        stats->beyond_kbar = steps > p.k_bar;
    }
    return out;
}

FRep CircleGroup::h_tilde_signed(const ScaledReal& r, const std::optional<ScaledReal>& circumference) const {
    if (r.sign() >= 0) return h_tilde(r);
    if (!circumference || circumference->sign() <= 0)
        throw std::invalid_argument("h_tilde: negative point needs a circumference estimate");
    const BigInt k = ceil(-r / *circumference);
    return h_tilde(r + *circumference * k);
}

FRep CircleGroup::g_tilde(const BigInt& a, const ScaledReal& r, const Element& x) const {
    FRep h = h_tilde(r);
    if (a == 0) return h;
    return add(scalar_mul_cached(a, FRep{x, ScaledReal(), 0}), h);
}

QValue CircleGroup::quantize_hN(const BigInt& i, const ShiftedGrid& grid) const {
    FRep h = h_tilde(grid.point(i));
    return {h.x, to_i64(floor_scaled(h.f, big(grid.N)))};
}

QValue CircleGroup::quantize_gN(const BigInt& a, const BigInt& b, const Element& x, const ShiftedGrid& grid) const {
    FRep g = g_tilde(a, grid.point(b), x);
    return {g.x, to_i64(floor_scaled(g.f, big(grid.N)))};
}

int CircleGroup::max_landing_steps() const {
    std::lock_guard<std::mutex> lock(mu_);
    return max_landing_;
}

std::int64_t CircleGroup::landings_beyond_kbar() const {
    std::lock_guard<std::mutex> lock(mu_);
    return beyond_kbar_;
}

// ---- oracle ---------------------------------------------------------------

FRep h_exact_on_oracle(const ExactInfrastructure& infra, const ScaledReal& r) {
    const ScaledReal t = mod_reduce(r, infra.oracle_circumference());
    std::size_t lo = 0, hi = infra.size();  // invariant: d(lo) <= t < d(hi)
    while (hi - lo > 1) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (infra.oracle_distance(infra.element_at(mid)) <= t)
            lo = mid;
        else
            hi = mid;
    }
    Element x = infra.element_at(lo);
    return {x, (t - infra.oracle_distance(x)).normalized(), 0};
}

FRep g_exact_on_oracle(const ExactInfrastructure& infra, const BigInt& a, const ScaledReal& r, const Element& x) {
    return h_exact_on_oracle(infra, infra.oracle_distance(x) * a + r);
}

ScaledReal absolute_distance(const ExactInfrastructure& infra, const FRep& p) {
    return mod_reduce(infra.oracle_distance(p.x) + p.f, infra.oracle_circumference()).normalized();
}

}  // namespace infra

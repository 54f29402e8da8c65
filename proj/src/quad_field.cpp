#include "infra/quad_field.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace infra {

// ---- integer helpers ------------------------------------------------------

std::int64_t isqrt(std::int64_t n) {
    if (n < 0) throw std::domain_error("isqrt of negative");
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

bool is_square(std::int64_t n) {
    if (n < 0) return false;
    std::int64_t r = isqrt(n);
    return r * r == n;
}

namespace {

BigInt gcd3(const BigInt& a, const BigInt& b, const BigInt& c) {
    BigInt g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
    return g;
}

/** sign of A + B sqrt(D) */
int sign_surd(const BigInt& A, const BigInt& B, std::int64_t D) {
    int sa = sgn(A), sb = sgn(B);
    if (sa >= 0 && sb >= 0) return (sa > 0 || sb > 0) ? 1 : 0;
    if (sa <= 0 && sb <= 0) return -1;
    BigInt a2 = A * A, b2d = B * B * big(D);
    int c = cmp(a2, b2d);
    return sa > 0 ? c : -c;
}

struct ExtGcd {
    std::int64_t g, x, y;
};

ExtGcd ext_gcd(std::int64_t a, std::int64_t b) {
    std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        std::int64_t q = old_r / r;
        std::int64_t tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        tmp = old_s - q * s;
        old_s = s;
        s = tmp;
        tmp = old_t - q * t;
        old_t = t;
        t = tmp;
    }
    if (old_r < 0) return {-old_r, -old_s, -old_t};
    return {old_r, old_s, old_t};
}

std::int64_t floor_div64(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t mod64(std::int64_t a, std::int64_t m) {
    std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

/** One continued-fraction step on an arbitrary (P, Q) with Q > 0. */
ReducedForm cf_step(const ReducedForm& f, std::int64_t s) {
    std::int64_t a = floor_div64(f.P + s, f.Q);
    std::int64_t P2 = a * f.Q - f.P;
    std::int64_t Q2 = (f.D - P2 * P2) / f.Q;
    return {P2, Q2, f.D};
}

/**
 * xi -> 1/(xi - floor(xi)) for xi = (P + sqrt D)/Q with Q of either sign;
 * multiplies acc by the new xi, which always exceeds 1.
 */
ReducedForm general_cf_step(const ReducedForm& f, std::int64_t s, QuadNumber& acc) {
    std::int64_t a = f.Q > 0 ? floor_div64(f.P + s, f.Q) : -(floor_div64(f.P + s, -f.Q) + 1);
    std::int64_t P2 = a * f.Q - f.P;
    std::int64_t Q2 = (f.D - P2 * P2) / f.Q;
    QuadNumber xi = Q2 > 0 ? QuadNumber{big(P2), BigInt(1), big(Q2)} : QuadNumber{big(-P2), BigInt(-1), big(-Q2)};
    acc = acc.mul(xi, f.D);
    return {P2, Q2, f.D};
}

}  // namespace

// ---- QuadNumber -----------------------------------------------------------

QuadNumber QuadNumber::mul(const QuadNumber& o, std::int64_t D) const {
    QuadNumber r;
    r.u = u * o.u + v * o.v * big(D);
    r.v = u * o.v + v * o.u;
    r.w = w * o.w;
    return r.reduced();
}

QuadNumber QuadNumber::div(const QuadNumber& o, std::int64_t D) const {
    // 1/o = o.w (o.u - o.v sqrt D) / (o.u^2 - D o.v^2)
    BigInt n = o.u * o.u - o.v * o.v * big(D);
    if (n == 0) throw std::domain_error("QuadNumber: division by zero");
    QuadNumber inv;
    inv.u = o.w * o.u;
    inv.v = -o.w * o.v;
    inv.w = n;
    if (inv.w < 0) {
        inv.u = -inv.u;
        inv.v = -inv.v;
        inv.w = -inv.w;
    }
    return mul(inv, D);
}

QuadNumber QuadNumber::reduced() const {
    BigInt g = gcd3(u, v, w);
    if (g <= 1) return *this;
    QuadNumber r;
    mpz_divexact(r.u.get_mpz_t(), u.get_mpz_t(), g.get_mpz_t());
    mpz_divexact(r.v.get_mpz_t(), v.get_mpz_t(), g.get_mpz_t());
    mpz_divexact(r.w.get_mpz_t(), w.get_mpz_t(), g.get_mpz_t());
    return r;
}

int QuadNumber::cmp_one(std::int64_t D) const { return sign_surd(u - w, v, D); }

// ---- forms ----------------------------------------------------------------

bool is_reduced(const ReducedForm& f) {
    if (f.D <= 1 || is_square(f.D) || f.Q <= 0) return false;
    if ((f.D - f.P * f.P) % f.Q != 0) return false;
    std::int64_t s = isqrt(f.D);
    // xi = (P + sqrt D)/Q > 1 and -1 < conj(xi) < 0
    return f.P >= 1 && f.P <= s && f.P + f.Q > s && f.Q - f.P <= s;
}

ReducedForm principal_form(std::int64_t D) {
    if (D <= 1 || is_square(D)) throw std::invalid_argument("D must be a positive non-square");
    return {isqrt(D), 1, D};
}

ReducedForm qf_bs(const ReducedForm& f) {
    if (!is_reduced(f)) throw std::invalid_argument("qf_bs: form is not reduced");
    return cf_step(f, isqrt(f.D));
}

ReducedForm qf_bs_inv(const ReducedForm& f) {
    if (!is_reduced(f)) throw std::invalid_argument("qf_bs_inv: form is not reduced");
    std::int64_t s = isqrt(f.D);
    std::int64_t Q = (f.D - f.P * f.P) / f.Q;
    // largest P <= s with P = -f.P (mod Q)
    std::int64_t P = s - mod64(s + f.P, Q);
    return {P, Q, f.D};
}

QuadNumber qf_step_multiplier(const ReducedForm& f) {
    ReducedForm n = cf_step(f, isqrt(f.D));
    return QuadNumber{big(n.P), BigInt(1), big(n.Q)};
}

ScaledReal log_quadratic(const QuadNumber& x, std::int64_t D, unsigned m) {
    std::size_t bits = std::max({bit_length(x.u), bit_length(x.v), bit_length(x.w)});
    mpfr_prec_t prec = static_cast<mpfr_prec_t>(m + 64 + 2 * bits);
    const int sv = sgn(x.v);
    for (int attempt = 0; attempt < 12; ++attempt, prec *= 2) {
        mpfr_t s_lo, s_hi, lo, hi, t;
        mpfr_inits2(prec, s_lo, s_hi, lo, hi, t, static_cast<mpfr_ptr>(nullptr));
        mpfr_set_si(t, static_cast<long>(D), MPFR_RNDN);
        mpfr_sqrt(s_lo, t, MPFR_RNDD);
        mpfr_sqrt(s_hi, t, MPFR_RNDU);
        // lower and upper bounds of u + v sqrt D
        mpfr_mul_z(lo, sv >= 0 ? s_lo : s_hi, x.v.get_mpz_t(), MPFR_RNDD);
        mpfr_mul_z(hi, sv >= 0 ? s_hi : s_lo, x.v.get_mpz_t(), MPFR_RNDU);
        mpfr_add_z(lo, lo, x.u.get_mpz_t(), MPFR_RNDD);
        mpfr_add_z(hi, hi, x.u.get_mpz_t(), MPFR_RNDU);
        mpfr_div_z(lo, lo, x.w.get_mpz_t(), MPFR_RNDD);
        mpfr_div_z(hi, hi, x.w.get_mpz_t(), MPFR_RNDU);
        bool ok = false;
        ScaledReal result;
        if (mpfr_sgn(lo) > 0) {
            mpfr_log(lo, lo, MPFR_RNDD);
            mpfr_log(hi, hi, MPFR_RNDU);
            mpfr_sub(t, hi, lo, MPFR_RNDU);
            mpfr_mul_2ui(t, t, m + 2, MPFR_RNDU);
            if (mpfr_cmp_ui(t, 1) < 0) {
                mpfr_add(t, lo, hi, MPFR_RNDN);
                mpfr_mul_2ui(t, t, m + 1, MPFR_RNDN);  // midpoint * 2^(m+2)
                BigInt k;
                mpfr_get_z(k.get_mpz_t(), t, MPFR_RNDN);
                result = ScaledReal::dyadic(k, m + 2);
                ok = true;
            }
        } else if (sign_surd(x.u, x.v, D) <= 0) {
            mpfr_clears(s_lo, s_hi, lo, hi, t, static_cast<mpfr_ptr>(nullptr));
            throw std::domain_error("log_quadratic: non-positive argument");
        }
        mpfr_clears(s_lo, s_hi, lo, hi, t, static_cast<mpfr_ptr>(nullptr));
        if (ok) return result;
    }
    throw std::runtime_error("log_quadratic: precision escalation failed");
}

ScaledReal qf_delta_bs(const ReducedForm& f, unsigned m) {
    if (!is_reduced(f)) throw std::invalid_argument("qf_delta_bs: form is not reduced");
    return log_quadratic(qf_step_multiplier(f), f.D, m);
}

GiantStep qf_gs(const ReducedForm& f, const ReducedForm& g) {
    if (f.D != g.D) throw std::invalid_argument("qf_gs: mismatched D");
    if (!is_reduced(f) || !is_reduced(g)) throw std::invalid_argument("qf_gs: operands must be reduced");
    const std::int64_t D = f.D;
    const std::int64_t s = isqrt(D);
    // ideal product [a1, b1 + sqrt D][a2, b2 + sqrt D] = n [a3, b3 + sqrt D]
    const std::int64_t a1 = f.Q, b1 = f.P, a2 = g.Q, b2 = g.P;
    ExtGcd e1 = ext_gcd(a1, a2);
    ExtGcd e2 = ext_gcd(e1.g, b1 + b2);
    const std::int64_t n = e2.g;
    const std::int64_t u = e2.x * e1.x, v = e2.x * e1.y, w = e2.y;
    const std::int64_t a3 = (a1 / n) * (a2 / n);
    BigInt num = big(u) * big(a1) * big(b2) + big(v) * big(a2) * big(b1) + big(w) * (big(b1) * big(b2) + big(D));
    BigInt b3big;
    mpz_divexact(b3big.get_mpz_t(), num.get_mpz_t(), big(n).get_mpz_t());
    BigInt b3m;
    mpz_fdiv_r(b3m.get_mpz_t(), b3big.get_mpz_t(), big(a3).get_mpz_t());
    ReducedForm c{to_i64(b3m), a3, D};

    // the module [1, xi] scales by n under composition, then by each new xi
    GiantStep out;
    out.relative = QuadNumber{big(n), BigInt(0), BigInt(1)};
    int guard = 0;
    while (!is_reduced(c)) {
        c = general_cf_step(c, s, out.relative);
        ++out.steps;
        if (++guard > 100000) throw std::runtime_error("qf_gs: reduction did not terminate");
    }
    // adjust to the first form whose distance is at least d(f) + d(g)
    while (out.relative.cmp_one(D) < 0) {
        out.relative = out.relative.mul(qf_step_multiplier(c), D);
        c = qf_bs(c);
        ++out.steps;
    }
    for (;;) {
        ReducedForm prev = qf_bs_inv(c);
        QuadNumber back = out.relative.div(qf_step_multiplier(prev), D);
        if (back.cmp_one(D) < 0) break;
        out.relative = back;
        c = prev;
        ++out.steps;
    }
    out.form = c;
    return out;
}

// ---- Pell -----------------------------------------------------------------

PellSolution pell_solution(std::int64_t D, const ScaledReal& regulator_estimate, const ScaledReal& tolerance) {
    if (D <= 1 || is_square(D)) throw std::invalid_argument("pell_solution: D must be a positive non-square");
    const ReducedForm start = principal_form(D);
    ReducedForm c = start;
    QuadNumber eps;
    const std::int64_t cap = 50'000'000;
    for (std::int64_t i = 0;; ++i) {
        if (i > cap) throw std::runtime_error("pell_solution: cycle too long");
        eps = eps.mul(qf_step_multiplier(c), D);
        c = qf_bs(c);
        if (c == start) break;
    }
    if (!mpz_divisible_p(eps.u.get_mpz_t(), eps.w.get_mpz_t()) || !mpz_divisible_p(eps.v.get_mpz_t(), eps.w.get_mpz_t()))
        throw std::logic_error("pell_solution: cycle product is not integral");
    PellSolution sol;
    sol.x = eps.u / eps.w;
    sol.y = eps.v / eps.w;
    BigInt nrm = sol.x * sol.x - big(D) * sol.y * sol.y;
    if (nrm != 1 && nrm != -1) throw std::logic_error("pell_solution: norm is not +-1");
    sol.norm = static_cast<int>(nrm.get_si());
    ScaledReal ln = log_quadratic(QuadNumber{sol.x, sol.y, BigInt(1)}, D, 40);
    if (abs(ln - regulator_estimate) > tolerance)
        throw std::invalid_argument("pell_solution: regulator estimate too coarse (unit has log " + ln.to_decimal(9) + ")");
    return sol;
}

PellSolution pell_plus_one(const PellSolution& s, std::int64_t D) {
    if (s.norm == 1) return s;
    PellSolution r;
    r.x = s.x * s.x + big(D) * s.y * s.y;
    r.y = 2 * s.x * s.y;
    r.norm = 1;
    return r;
}

FieldRegulator field_regulator(std::int64_t D, const PellSolution& unit) {
    FieldRegulator fr;
    fr.a = 2 * unit.x;
    fr.b = 2 * unit.y;
    double lnu = log_quadratic(QuadNumber{unit.x, unit.y, BigInt(1)}, D, 60).to_double();
    fr.value = lnu;
    if (mod64(D, 4) != 1) return fr;
    // candidate eta = (a + b sqrt D)/2 with eta^3 = unit
    mpfr_t e, c, r, sd;
    mpfr_inits2(256, e, c, r, sd, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_si(sd, static_cast<long>(D), MPFR_RNDN);
    mpfr_sqrt(sd, sd, MPFR_RNDN);
    mpfr_mul_z(e, sd, unit.y.get_mpz_t(), MPFR_RNDN);
    mpfr_add_z(e, e, unit.x.get_mpz_t(), MPFR_RNDN);
    mpfr_cbrt(e, e, MPFR_RNDN);                  // eta
    mpfr_ui_div(c, 1, e, MPFR_RNDN);             // |conjugate| of eta
    if (unit.norm < 0) mpfr_neg(c, c, MPFR_RNDN);  // N(eta) = N(unit)
    mpfr_add(r, e, c, MPFR_RNDN);
    BigInt a, b;
    mpfr_get_z(a.get_mpz_t(), r, MPFR_RNDN);
    mpfr_sub(r, e, c, MPFR_RNDN);
    mpfr_div(r, r, sd, MPFR_RNDN);
    mpfr_get_z(b.get_mpz_t(), r, MPFR_RNDN);
    mpfr_clears(e, c, r, sd, static_cast<mpfr_ptr>(nullptr));
    // (a + b sqrt D)^3 = 8 (x + y sqrt D)
    BigInt X = a * a * a + 3 * a * b * b * big(D);
    BigInt Y = 3 * a * a * b + b * b * b * big(D);
    if (X == 8 * unit.x && Y == 8 * unit.y) {
        fr.index = 3;
        fr.a = a;
        fr.b = b;
        fr.value = lnu / 3.0;
    }
    return fr;
}

// ---- backend --------------------------------------------------------------

namespace {

ScaledReal dyadic_floor(double v, unsigned bits) {
    return ScaledReal::dyadic(BigInt(std::floor(std::ldexp(v, static_cast<int>(bits)))), bits);
}
ScaledReal dyadic_ceil(double v, unsigned bits) {
    return ScaledReal::dyadic(BigInt(std::ceil(std::ldexp(v, static_cast<int>(bits)))), bits);
}

}  // namespace

QuadraticInfra::QuadraticInfra(std::int64_t D) : D_(D) {
    if (D <= 1 || is_square(D)) throw std::invalid_argument("QuadraticInfra: D must be a positive non-square");
    if (D > 1'000'000) throw std::invalid_argument("QuadraticInfra: D above the enumerable range (10^6)");
    const ReducedForm start = principal_form(D);
    ReducedForm c = start;
    do {
        index_.emplace(encode(c), static_cast<std::int64_t>(cycle_.forms.size()));
        cycle_.forms.push_back(c);
        double g = qf_delta_bs(c, 64).to_double();
        cycle_.gaps.push_back(g);
        cycle_.circumference += g;
        c = qf_bs(c);
    } while (!(c == start));

    const std::size_t n = cycle_.forms.size();
    double lo = *std::min_element(cycle_.gaps.begin(), cycle_.gaps.end());
    double hi = *std::max_element(cycle_.gaps.begin(), cycle_.gaps.end());
    // witness constants: doubles carry ~1e-16 relative error, slack 2^-30 covers it
    const double slack = std::ldexp(1.0, -30);
    params_.d_min_lower = dyadic_floor(lo - slack, 30);
    params_.d_max_upper = dyadic_ceil(hi + slack, 30);
    params_.k_bar = n >= 2 ? 2 : 1;
    double span = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (int k = 0; k < params_.k_bar; ++k) s += cycle_.gaps[(i + static_cast<std::size_t>(k)) % n];
        span = std::min(span, s);
    }
    params_.d_k_bar = dyadic_floor(span - slack, 30);
    params_.R_upper = ScaledReal(BigInt(std::ceil(cycle_.circumference + slack)));
    params_.validate();
}

bool QuadraticInfra::is_valid(const Element& x) const { return index_.count(x) != 0; }

Element QuadraticInfra::bs(const Element& x) const {
    check(x);
    return encode(qf_bs(decode(x)));
}

Element QuadraticInfra::bs_inv(const Element& x) const {
    check(x);
    return encode(qf_bs_inv(decode(x)));
}

const QuadraticInfra::GsEntry& QuadraticInfra::gs_cached(const Element& x, const Element& y) const {
    check(x);
    check(y);
    std::int64_t ix = index_.at(x), iy = index_.at(y);
    Element key{std::min(ix, iy), std::max(ix, iy)};
    std::lock_guard<std::mutex> lock(mu_);
    auto it = gs_cache_.find(key);
    if (it != gs_cache_.end()) return it->second;
    GiantStep r = qf_gs(decode(x), decode(y));
    return gs_cache_.emplace(key, GsEntry{encode(r.form), r.relative}).first->second;
}

Element QuadraticInfra::gs(const Element& x, const Element& y) const { return gs_cached(x, y).z; }

std::pair<Element, ScaledReal> QuadraticInfra::gs_with_delta(const Element& x, const Element& y, unsigned m) const {
    const GsEntry& e = gs_cached(x, y);
    std::int64_t ix = index_.at(x), iy = index_.at(y);
    auto n = static_cast<std::int64_t>(cycle_.forms.size());
    Element key{std::min(ix, iy) * n + std::max(ix, iy), static_cast<std::int64_t>(m)};
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = gsd_cache_.find(key);
        if (it != gsd_cache_.end()) return {e.z, it->second};
    }
    ScaledReal v = log_quadratic(e.rel, D_, m);
    std::lock_guard<std::mutex> lock(mu_);
    gsd_cache_.emplace(key, v);
    return {e.z, v};
}

ScaledReal QuadraticInfra::delta_gs_approx(const Element& x, const Element& y, unsigned m) const {
    return gs_with_delta(x, y, m).second;
}

ScaledReal QuadraticInfra::delta_bs_approx(const Element& x, unsigned m) const {
    check(x);
    Element key{index_.at(x), static_cast<std::int64_t>(m)};
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = bs_cache_.find(key);
        if (it != bs_cache_.end()) return it->second;
    }
    ScaledReal v = qf_delta_bs(decode(x), m);
    std::lock_guard<std::mutex> lock(mu_);
    bs_cache_.emplace(key, v);
    return v;
}

std::string QuadraticInfra::format(const Element& x) const {
    return "(" + std::to_string(x.a) + "," + std::to_string(x.b) + ")";
}

Element QuadraticInfra::parse_element(std::string_view text) const {
    std::string t(text);
    t.erase(std::remove_if(t.begin(), t.end(), [](char ch) { return ch == '(' || ch == ')' || ch == ' '; }), t.end());
    auto comma = t.find(',');
    if (comma == std::string::npos) throw MalformedElement("quadratic element must look like (P,Q)");
    Element e{std::stoll(t.substr(0, comma)), std::stoll(t.substr(comma + 1))};
    check(e);
    return e;
}

}  // namespace infra

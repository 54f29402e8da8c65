#include "infra/analysis.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace infra {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double s32() { return 2.0 * std::sin(kPi / 32.0); }

double pos(double x) { return x > 0 ? x : 0; }

}  // namespace

double sinc(double x) {
    if (x == 0) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// ---- geometric sums ---------------------------------------------------------

double geomsum_min_J(std::int64_t n, double delta) {
    return static_cast<double>(n) * (1.0 - sinc(delta)) / (1.0 - s32());
}

std::string geomsum_violation(const GeomSumInstance& inst) {
    if (inst.n < 2) return "n must be at least 2";
    if (!(std::abs(inst.delta) < 1)) return "|delta| must be below 1";
    if (inst.J.empty()) return "J is empty";
    if (inst.J.size() != inst.theta.size()) return "theta must have one entry per element of J";
    std::vector<std::int64_t> s = inst.J;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) return "J has repeated indices";
    if (s.front() < 0 || s.back() >= inst.n) return "J must lie in [0, n)";
    const double cap = static_cast<double>(inst.n) / 32.0;
    for (double t : inst.theta)
        if (std::abs(t) > cap) return "|theta_j| exceeds n/32";
    if (static_cast<double>(inst.J.size()) < geomsum_min_J(inst.n, inst.delta)) return "|J| below n(1-c_delta)/(1-2sin(pi/32))";
    return {};
}

double geomsum_lhs(const GeomSumInstance& inst) {
    if (auto v = geomsum_violation(inst); !v.empty()) throw InadmissibleInstance("geomsum: " + v);
    std::complex<long double> acc = 0;
    const long double w = 2.0L * static_cast<long double>(kPi) / static_cast<long double>(inst.n);
    for (std::size_t t = 0; t < inst.J.size(); ++t) {
        long double ph = w * (static_cast<long double>(inst.delta) * static_cast<long double>(inst.J[t]) +
                              static_cast<long double>(inst.theta[t]));
        acc += std::complex<long double>(std::cos(ph), std::sin(ph));
    }
    const long double j = static_cast<long double>(inst.J.size());
    return static_cast<double>(std::norm(acc) / (j * j));
}

double geomsum_rhs(const GeomSumInstance& inst) {
    if (auto v = geomsum_violation(inst); !v.empty()) throw InadmissibleInstance("geomsum: " + v);
    const double r = 1.0 - s32() - (1.0 - sinc(inst.delta)) * static_cast<double>(inst.n) / static_cast<double>(inst.J.size());
    return r * r;
}

bool random_geomsum_instance(Rng& rng, std::int64_t n, double delta, bool prefix, GeomSumInstance& out) {
    const double need = geomsum_min_J(n, delta);
    if (need > static_cast<double>(n)) return false;
    auto size = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(need)));
    out.n = n;
    out.delta = delta;
    out.J.resize(static_cast<std::size_t>(n));
    std::iota(out.J.begin(), out.J.end(), 0);
    if (!prefix) std::shuffle(out.J.begin(), out.J.end(), rng);
    out.J.resize(static_cast<std::size_t>(size));
    std::sort(out.J.begin(), out.J.end());
    const double cap = static_cast<double>(n) / 32.0;
    const bool extremes = uniform_below(rng, 3) == 0;
    out.theta.resize(out.J.size());
    for (double& t : out.theta)
        t = extremes ? (uniform_below(rng, 2) == 0 ? -cap : cap) : (2.0 * uniform01(rng) - 1.0) * cap;
    return true;
}

// ---- bounds -------------------------------------------------------------------

double bound_psuccess_circ(double S, double q) {
    if (!(S > 1) || !(q > 0)) throw std::invalid_argument("bound_psuccess_circ: need S > 1 and q > 0");
    const double a = pos(1.0 / 32.0 - 2.0 / S);
    const double b = pos(1.0 - 2.0 * S / q);
    const double c = pos(sinc(0.5 + 0.5 / S) - s32());
    return 0.5 * a * a * b * b * std::pow(c, 4);
}

double bound_psuccess_circ_limit() {
    const double c = sinc(0.5) - s32();
    return 0.5 * std::pow(1.0 / 32.0, 2) * std::pow(c, 4);
}

double bound_periodic(double N, double R, double d_min, double q) {
    if (!(N > 0 && R > 0 && d_min > 0 && q > 0)) throw std::invalid_argument("bound_periodic: arguments must be positive");
    return pos(1.0 - 1.0 / (N * d_min) - 1.0 / (N * R)) * pos(1.0 - 2.0 * N * R / q);
}

KappaRange kappa_range(double q_cfg) {
    return {(1.0 - sinc(0.75)) / (1.0 - s32()), 1.0 - 2.0 / (2.0 * q_cfg + 1.0)};
}

namespace {

double kappa_core(double kappa) {
    const double inner = pos(1.0 - s32() - (1.0 - sinc(0.75)) / kappa);
    return kappa * kappa / 2.0 * std::pow(inner, 4);
}

KappaChoice maximize(double lo, double hi, int grid, const std::function<double(double)>& f) {
    KappaChoice best;
    if (!(hi > lo)) return best;
    const double step = (hi - lo) / grid;
    best = {lo + 0.5 * step, f(lo + 0.5 * step)};
    for (int i = 1; i < grid; ++i) {
        double k = lo + (i + 0.5) * step;
        double v = f(k);
        if (v > best.value) best = {k, v};
    }
    // golden-section refinement inside the winning cell's neighbourhood
    double a = std::max(lo + 1e-12, best.kappa - step), b = std::min(hi - 1e-12, best.kappa + step);
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 60; ++it) {
        double c = b - g * (b - a), d = a + g * (b - a);
        if (f(c) > f(d))
            b = d;
        else
            a = c;
    }
    double k = (a + b) / 2;
    if (f(k) > best.value) best = {k, f(k)};
    return best;
}

}  // namespace

double bound_dlog_at(double q_cfg, double B, double p_g, double kappa) {
    const auto r = kappa_range(q_cfg);
    if (!(kappa > r.lo && kappa < r.hi)) throw std::invalid_argument("bound_dlog: kappa outside the admissible interval");
    const double f1 = pos(1.0 - 2.0 / ((2.0 * q_cfg + 1.0) * (1.0 - kappa)));
    const double f2 = pos(1.0 / 64.0 - 2.0 / B);
    return p_g * f1 * f1 * kappa_core(kappa) * f2 * f2;
}

double bound_dlog_simplified_at(double p_g, double kappa) {
    const double lo = kappa_range(8).lo;
    if (!(kappa > lo && kappa < 7.0 / 8.0)) throw std::invalid_argument("bound_dlog_simplified: kappa out of range");
    const double f1 = pos(1.0 - 1.0 / (8.0 * (1.0 - kappa)));
    return p_g * f1 * f1 * kappa_core(kappa) / (128.0 * 128.0);
}

KappaChoice bound_dlog(double q_cfg, double B, double p_g, int grid) {
    const auto r = kappa_range(q_cfg);
    return maximize(r.lo, r.hi, grid, [&](double k) { return bound_dlog_at(q_cfg, B, p_g, k); });
}

KappaChoice bound_dlog_simplified(double p_g, int grid) {
    return maximize(kappa_range(8).lo, 7.0 / 8.0, grid, [&](double k) { return bound_dlog_simplified_at(p_g, k); });
}

// ---- statistics -------------------------------------------------------------

BoundReport binomial_check(std::string formula, double analytic, std::int64_t successes, std::int64_t trials,
                           double alpha, double slack) {
    BoundReport r;
    r.formula = std::move(formula);
    r.analytic = analytic;
    r.successes = successes;
    r.trials = trials;
    r.empirical = trials > 0 ? static_cast<double>(successes) / static_cast<double>(trials) : 0;
    const double p0 = analytic - slack;
    if (p0 <= 0) {
        r.p_value = 1;
    } else if (p0 >= 1) {
        r.p_value = successes >= trials ? 1 : 0;
    } else {
        boost::math::binomial_distribution<double> dist(static_cast<double>(trials), p0);
        r.p_value = boost::math::cdf(dist, static_cast<double>(successes));
    }
    r.pass = r.empirical >= p0 || r.p_value >= alpha;
    return r;
}

// ---- coprimality --------------------------------------------------------------

double coprime_exhaustive(std::int64_t N) {
    if (N < 1) throw std::invalid_argument("coprime_exhaustive: N must be positive");
    std::int64_t hits = 0;
    for (std::int64_t a = 1; a <= N; ++a)
        for (std::int64_t b = 1; b <= N; ++b)
            if (std::gcd(a, b) == 1) ++hits;
    return static_cast<double>(hits) / static_cast<double>(N * N);
}

BoundReport coprime_experiment(std::int64_t N, std::int64_t trials, Rng& rng) {
    std::int64_t hits = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        std::int64_t a = 1 + uniform_below(rng, N), b = 1 + uniform_below(rng, N);
        if (std::gcd(a, b) == 1) ++hits;
    }
    BoundReport r = binomial_check("coprime", 0.5, hits, trials);
    r.pass = r.empirical >= 0.5;
    return r;
}

// ---- continued fractions -----------------------------------------------------

std::vector<BigInt> cf_expand(const BigInt& p, const BigInt& q) {
    if (q <= 0) throw std::invalid_argument("cf_expand: denominator must be positive");
    std::vector<BigInt> out;
    BigInt a = p, b = q;
    while (b != 0) {
        BigInt t;
        mpz_fdiv_q(t.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
        out.push_back(t);
        BigInt r = a - t * b;
        a = b;
        b = r;
    }
    return out;
}

std::vector<Convergent> convergents(const BigInt& c, const BigInt& d, const BigInt& cap) {
    if (d < 1) throw std::invalid_argument("convergents: d must be positive");
    std::vector<Convergent> out;
    BigInt h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    for (const auto& a : cf_expand(c, d)) {
        BigInt h = a * h1 + h2, k = a * k1 + k2;
        if (k > cap) break;
        out.push_back({h, k});
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
    }
    return out;
}

Convergent cf_approx(const ScaledReal& r, const ScaledReal& c) {
    if (c <= ScaledReal(1)) throw std::invalid_argument("cf_approx: c must exceed 1");
    ScaledReal n = r.normalized();
    auto list = convergents(n.mantissa(), n.scale(), floor(c));
    if (list.empty()) throw std::logic_error("cf_approx: no convergent with denominator <= c");
    return list.back();
}

}  // namespace infra

#pragma once

#include "infra/fixedpoint.hpp"
#include "infra/rng.hpp"

#include <string>
#include <functional>
#include <vector>

namespace infra {

double sinc(double x);

// ---- perturbed geometric sums ----------------------------------------------

struct GeomSumInstance {
    std::int64_t n = 2;
    double delta = 0;
    std::vector<std::int64_t> J;  // distinct indices in [0, n)
    std::vector<double> theta;    // theta[t] belongs to J[t]
};

class InadmissibleInstance : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/** Smallest admissible |J| for (n, delta); may exceed n. */
double geomsum_min_J(std::int64_t n, double delta);
/** Empty string when admissible, otherwise the violated condition. */
std::string geomsum_violation(const GeomSumInstance& inst);
double geomsum_lhs(const GeomSumInstance& inst);
double geomsum_rhs(const GeomSumInstance& inst);

/**
 * Random admissible instance: J is a random subset of minimal admissible size
 * or a prefix; theta uniform in [-n/32, n/32]. Returns false when no subset of
 * {0..n-1} is admissible for the drawn delta.
 */
bool random_geomsum_instance(Rng& rng, std::int64_t n, double delta, bool prefix, GeomSumInstance& out);

// ---- success bounds -----------------------------------------------------------

double bound_psuccess_circ(double S, double q);
/** Limit of bound_psuccess_circ as S, q grow. */
double bound_psuccess_circ_limit();
double bound_periodic(double N, double R, double d_min, double q);

struct KappaRange {
    double lo, hi;
};
KappaRange kappa_range(double q_cfg);
double bound_dlog_at(double q_cfg, double B, double p_g, double kappa);
double bound_dlog_simplified_at(double p_g, double kappa);

struct KappaChoice {
    double kappa = 0;
    double value = 0;
};
/** Maximizes over a 64-point grid of the open interval, then refines locally. */
KappaChoice bound_dlog(double q_cfg, double B, double p_g, int grid = 64);
KappaChoice bound_dlog_simplified(double p_g, int grid = 64);

// ---- statistics -------------------------------------------------------------

struct BoundReport {
    std::string formula;
    double analytic = 0;
    double empirical = 0;
    std::int64_t successes = 0;
    std::int64_t trials = 0;
    double p_value = 1;  // P(X <= successes) under p = analytic
    bool pass = false;
};

/**
 * One-sided binomial test at level alpha: fails only when the observed count
 * is significantly below analytic - slack.
 */
BoundReport binomial_check(std::string formula, double analytic, std::int64_t successes, std::int64_t trials,
                           double alpha = 0.01, double slack = 1e-9);

// ---- coprimality --------------------------------------------------------------

constexpr double kCoprimeFloor = 0.5477525800;

/** Exact fraction of coprime pairs in [1, N]^2. */
double coprime_exhaustive(std::int64_t N);
/** Monte Carlo over uniform pairs in [1, N]^2; passes iff frequency >= 1/2. */
BoundReport coprime_experiment(std::int64_t N, std::int64_t trials, Rng& rng);

// ---- continued fractions -----------------------------------------------------

struct Convergent {
    BigInt c;
    BigInt d;
};

/** Continued-fraction coefficients of p/q (q > 0). */
std::vector<BigInt> cf_expand(const BigInt& p, const BigInt& q);
/** All convergents of c/d with denominator <= cap, in order. */
std::vector<Convergent> convergents(const BigInt& c, const BigInt& d, const BigInt& cap);
/** Last convergent of r with denominator <= c; satisfies |r - p/q| < 1/(c q). */
Convergent cf_approx(const ScaledReal& r, const ScaledReal& c);

}  // namespace infra

#pragma once
// Independent reference implementations used only by tests.

#include "infra/fixedpoint.hpp"
#include "infra/rng.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

namespace bmp = boost::multiprecision;
// expression templates off so results mix freely with std::min and friends
using Rational = bmp::number<bmp::cpp_rational_backend, bmp::et_off>;
using BigI = bmp::number<bmp::cpp_int_backend<>, bmp::et_off>;
using Float = bmp::number<bmp::cpp_bin_float<100>, bmp::et_off>;

inline BigI to_cpp_int(const infra::BigInt& v) { return BigI(v.get_str()); }

inline Rational to_rational(const infra::ScaledReal& x) {
    return Rational(to_cpp_int(x.mantissa()), to_cpp_int(x.scale()));
}

inline Rational parse_rational(const std::string& p, const std::string& q = "1") { return Rational(BigI(p), BigI(q)); }

inline BigI floor_div(const Rational& r) {
    BigI n = numerator(r), d = denominator(r);
    BigI q = n / d;
    if (n % d != 0 && n < 0) --q;
    return q;
}

inline Float to_float(const Rational& r) { return Float(numerator(r)) / Float(denominator(r)); }

/** ln((P + sqrt D) / Q) at 100 digits. */
inline Float log_surd(std::int64_t P, std::int64_t Q, std::int64_t D) {
    return log((Float(P) + sqrt(Float(D))) / Float(Q));
}

/**
 * Fundamental unit of the maximal order of Q(sqrt D), D squarefree, found by
 * the continued fraction of omega = (1 + sqrt D)/2 (D = 1 mod 4) or sqrt D.
 * Returns (a, b, den) with unit (a + b sqrt D) / den and its norm.
 */
struct Unit {
    BigI a, b;
    int den = 1;
    int norm = 0;
};

inline Unit maximal_order_unit(std::int64_t D) {
    // expand (P + sqrt D) / Q with Q | D - P^2, starting from omega
    BigI P, Q;
    int den;
    if (D % 4 == 1) {
        P = 1, Q = 2, den = 2;
    } else {
        P = 0, Q = 1, den = 1;
    }
    BigI s = boost::multiprecision::sqrt(BigI(D));
    // convergent recurrence seeds p_{-2}/q_{-2}, p_{-1}/q_{-1}; Q stays positive
    BigI p_prev = 0, p = 1, q_prev = 1, q = 0;
    for (int i = 0; i < 100000; ++i) {
        BigI a = (P + s) / Q;
        BigI pn = a * p + p_prev, qn = a * q + q_prev;
        p_prev = p, p = pn, q_prev = q, q = qn;
        if (den == 1) {
            BigI nrm = p * p - BigI(D) * q * q;
            if (nrm == 1 || nrm == -1) return {p, q, 1, static_cast<int>(nrm)};
        } else {
            // p - q conj(omega) = (2p - q + q sqrt D) / 2
            BigI a2 = 2 * p - q, b2 = q;
            BigI nrm4 = a2 * a2 - BigI(D) * b2 * b2;
            if (nrm4 == 4 || nrm4 == -4) return {a2, b2, 2, nrm4 > 0 ? 1 : -1};
        }
        P = a * Q - P;
        Q = (BigI(D) - P * P) / Q;
    }
    return {};
}

/** Smallest y >= 1 with D y^2 + sign a perfect square, by direct search. */
inline std::pair<BigI, BigI> brute_force_pell(std::int64_t D, int sign, std::int64_t y_cap) {
    for (std::int64_t y = 1; y <= y_cap; ++y) {
        BigI t = BigI(D) * y * y + sign;
        if (t <= 0) continue;
        BigI r = boost::multiprecision::sqrt(t);
        if (r * r == t) return {r, BigI(y)};
    }
    return {0, 0};
}

/** n rational gaps k/den with den in [2, 10] and values in (1/2, 4]. */
inline std::vector<infra::ScaledReal> random_gaps(infra::Rng& rng, std::size_t n) {
    std::vector<infra::ScaledReal> g;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t den = 2 + infra::uniform_below(rng, 9);
        const std::int64_t k = den / 2 + 1 + infra::uniform_below(rng, 4 * den - den / 2);
        g.emplace_back(infra::BigInt(static_cast<long>(k)), infra::BigInt(static_cast<long>(den)));
    }
    return g;
}

}  // namespace oracle

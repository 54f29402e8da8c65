#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace infra {

using BigInt = mpz_class;

/**
 * Exact real number mantissa/scale with scale >= 1.
 *
 * Values are never rounded. Scales are reduced by a gcd only when they grow
 * past a size threshold, so two equal values may carry different scales;
 * comparison and equality are value based.
 */
class ScaledReal {
public:
    ScaledReal() : mant_(0), scale_(1) {}
    ScaledReal(long v) : mant_(v), scale_(1) {}  // NOLINT(implicit)
    ScaledReal(int v) : mant_(v), scale_(1) {}   // NOLINT(implicit)
    explicit ScaledReal(const BigInt& v) : mant_(v), scale_(1) {}
    ScaledReal(const BigInt& mantissa, const BigInt& scale);

    /** Accepts "p/q", integers, and decimals such as "0.6" or "1e-3". */
    static ScaledReal parse(std::string_view text);
    /** Exact value of a finite double. */
    static ScaledReal from_double(double v);
    /** k / 2^bits */
    static ScaledReal dyadic(const BigInt& k, unsigned bits);

    const BigInt& mantissa() const { return mant_; }
    const BigInt& scale() const { return scale_; }

    ScaledReal normalized() const;
    int sign() const { return sgn(mant_); }
    bool is_zero() const { return mant_ == 0; }
    bool is_integer() const;

    double to_double() const;
    /** Normalized "p/q" (or "p" when the scale is 1). */
    std::string to_string() const;
    /** Decimal expansion rounded to the nearest multiple of 10^-digits. */
    std::string to_decimal(int digits) const;

    ScaledReal& operator+=(const ScaledReal& o);
    ScaledReal& operator-=(const ScaledReal& o);
    ScaledReal& operator*=(const ScaledReal& o);
    ScaledReal& operator/=(const ScaledReal& o);

    friend ScaledReal operator+(ScaledReal a, const ScaledReal& b) { return a += b; }
    friend ScaledReal operator-(ScaledReal a, const ScaledReal& b) { return a -= b; }
    friend ScaledReal operator*(ScaledReal a, const ScaledReal& b) { return a *= b; }
    friend ScaledReal operator/(ScaledReal a, const ScaledReal& b) { return a /= b; }
    friend ScaledReal operator*(ScaledReal a, const BigInt& k);
    friend ScaledReal operator*(const BigInt& k, ScaledReal a) { return std::move(a) * k; }
    ScaledReal operator-() const;

    friend bool operator==(const ScaledReal& a, const ScaledReal& b);
    friend std::strong_ordering operator<=>(const ScaledReal& a, const ScaledReal& b);

private:
    void maybe_normalize();

    BigInt mant_;
    BigInt scale_;
};

ScaledReal add(const ScaledReal& a, const ScaledReal& b);
ScaledReal abs(const ScaledReal& a);

BigInt floor(const ScaledReal& a);
BigInt ceil(const ScaledReal& a);
/** Nearest integer; an exact half goes toward +infinity. */
BigInt round_nearest(const ScaledReal& a);
/** floor(a * N) */
BigInt floor_scaled(const ScaledReal& a, const BigInt& N);
/** Representative of a in [0, modulus). */
ScaledReal mod_reduce(const ScaledReal& a, const ScaledReal& modulus);

/** Helpers for code that mixes BigInt with machine integers. */
std::int64_t to_i64(const BigInt& v);
BigInt big(std::int64_t v);
BigInt pow2(unsigned bits);
std::size_t bit_length(const BigInt& v);

}  // namespace infra

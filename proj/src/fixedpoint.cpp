#include "infra/fixedpoint.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace infra {

namespace {

// gcd reduction kicks in only once the scale outgrows this many bits
constexpr std::size_t kNormalizeBits = 192;

BigInt floor_div(const BigInt& n, const BigInt& d) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    return q;
}

BigInt parse_int(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty integer");
    std::string str(s);
    if (str[0] == '+') str.erase(0, 1);
    BigInt v;
    if (v.set_str(str, 10) != 0) throw std::invalid_argument("bad integer: " + std::string(s));
    return v;
}

}  // namespace

ScaledReal::ScaledReal(const BigInt& mantissa, const BigInt& scale) : mant_(mantissa), scale_(scale) {
    if (scale_ == 0) throw std::invalid_argument("ScaledReal: zero scale");
    if (scale_ < 0) {
        scale_ = -scale_;
        mant_ = -mant_;
    }
    maybe_normalize();
}

ScaledReal ScaledReal::parse(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("ScaledReal::parse: empty");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        return ScaledReal(parse_int(trim(text.substr(0, slash))), parse_int(trim(text.substr(slash + 1))));
    }
    long exp10 = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        exp10 = std::stol(std::string(text.substr(e + 1)));
        text = text.substr(0, e);
    }
    bool neg = false;
    if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
        neg = text[0] == '-';
        text.remove_prefix(1);
    }
    std::string digits;
    long frac = 0;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        digits = std::string(text.substr(0, dot)) + std::string(text.substr(dot + 1));
        frac = static_cast<long>(text.size() - dot - 1);
    } else {
        digits = std::string(text);
    }
    if (digits.empty()) throw std::invalid_argument("ScaledReal::parse: no digits");
    for (char c : digits)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw std::invalid_argument("ScaledReal::parse: bad character in " + std::string(text));
    BigInt m(digits, 10);
    if (neg) m = -m;
    long shift = exp10 - frac;
    BigInt p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    if (shift >= 0) return ScaledReal(m * p10, 1);
    return ScaledReal(m, p10);
}

ScaledReal ScaledReal::from_double(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("ScaledReal::from_double: non-finite");
    int e = 0;
    double frac = std::frexp(v, &e);
    // 53 significant bits fit exactly in an int64 after scaling
    auto m = static_cast<long long>(std::ldexp(frac, 53));
    BigInt mant(static_cast<long>(m));
    e -= 53;
    if (e >= 0) return ScaledReal(mant * pow2(static_cast<unsigned>(e)), 1);
    return ScaledReal(mant, pow2(static_cast<unsigned>(-e)));
}

ScaledReal ScaledReal::dyadic(const BigInt& k, unsigned bits) { return ScaledReal(k, pow2(bits)); }

void ScaledReal::maybe_normalize() {
    if (mant_ == 0) {
        scale_ = 1;
        return;
    }
    if (mpz_sizeinbase(scale_.get_mpz_t(), 2) > kNormalizeBits) *this = normalized();
}

ScaledReal ScaledReal::normalized() const {
    ScaledReal r;
    if (mant_ == 0) return r;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), mant_.get_mpz_t(), scale_.get_mpz_t());
    mpz_divexact(r.mant_.get_mpz_t(), mant_.get_mpz_t(), g.get_mpz_t());
    mpz_divexact(r.scale_.get_mpz_t(), scale_.get_mpz_t(), g.get_mpz_t());
    return r;
}

bool ScaledReal::is_integer() const { return mpz_divisible_p(mant_.get_mpz_t(), scale_.get_mpz_t()) != 0; }

double ScaledReal::to_double() const {
    mpq_class q(mant_, scale_);
    q.canonicalize();
    return q.get_d();
}

std::string ScaledReal::to_string() const {
    ScaledReal n = normalized();
    if (n.scale_ == 1) return n.mant_.get_str();
    return n.mant_.get_str() + "/" + n.scale_.get_str();
}

std::string ScaledReal::to_decimal(int digits) const {
    if (digits < 0) digits = 0;
    BigInt p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    BigInt r = round_nearest(*this * p10);
    bool neg = r < 0;
    if (neg) r = -r;
    std::string s = r.get_str();
    if (digits > 0) {
        if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) - s.size() + 1, '0');
        s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    }
    return neg ? "-" + s : s;
}

ScaledReal& ScaledReal::operator+=(const ScaledReal& o) {
    if (scale_ == o.scale_) {
        mant_ += o.mant_;
    } else {
        mant_ = mant_ * o.scale_ + o.mant_ * scale_;
        scale_ *= o.scale_;
    }
    maybe_normalize();
    return *this;
}

ScaledReal& ScaledReal::operator-=(const ScaledReal& o) {
    if (scale_ == o.scale_) {
        mant_ -= o.mant_;
    } else {
        mant_ = mant_ * o.scale_ - o.mant_ * scale_;
        scale_ *= o.scale_;
    }
    maybe_normalize();
    return *this;
}

ScaledReal& ScaledReal::operator*=(const ScaledReal& o) {
    mant_ *= o.mant_;
    scale_ *= o.scale_;
    maybe_normalize();
    return *this;
}

ScaledReal& ScaledReal::operator/=(const ScaledReal& o) {
    if (o.mant_ == 0) throw std::domain_error("ScaledReal: division by zero");
    mant_ *= o.scale_;
    scale_ *= o.mant_;
    if (scale_ < 0) {
        scale_ = -scale_;
        mant_ = -mant_;
    }
    maybe_normalize();
    return *this;
}

ScaledReal operator*(ScaledReal a, const BigInt& k) {
    a.mant_ *= k;
    a.maybe_normalize();
    return a;
}

ScaledReal ScaledReal::operator-() const {
    ScaledReal r = *this;
    r.mant_ = -r.mant_;
    return r;
}

bool operator==(const ScaledReal& a, const ScaledReal& b) {
    if (a.scale_ == b.scale_) return a.mant_ == b.mant_;
    return a.mant_ * b.scale_ == b.mant_ * a.scale_;
}

std::strong_ordering operator<=>(const ScaledReal& a, const ScaledReal& b) {
    int c = (a.scale_ == b.scale_) ? cmp(a.mant_, b.mant_) : cmp(a.mant_ * b.scale_, b.mant_ * a.scale_);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

ScaledReal add(const ScaledReal& a, const ScaledReal& b) { return a + b; }

ScaledReal abs(const ScaledReal& a) { return a.sign() < 0 ? -a : a; }

BigInt floor(const ScaledReal& a) { return floor_div(a.mantissa(), a.scale()); }

BigInt ceil(const ScaledReal& a) {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), a.mantissa().get_mpz_t(), a.scale().get_mpz_t());
    return q;
}

BigInt round_nearest(const ScaledReal& a) {
    // floor(a + 1/2) = floor((2m + s) / 2s)
    return floor_div(2 * a.mantissa() + a.scale(), 2 * a.scale());
}

BigInt floor_scaled(const ScaledReal& a, const BigInt& N) { return floor_div(a.mantissa() * N, a.scale()); }

ScaledReal mod_reduce(const ScaledReal& a, const ScaledReal& modulus) {
    if (modulus.sign() <= 0) throw std::domain_error("mod_reduce: modulus must be positive");
    BigInt k = floor(a / modulus);
    return a - modulus * k;
}

std::int64_t to_i64(const BigInt& v) {
    if (!mpz_fits_slong_p(v.get_mpz_t())) throw std::overflow_error("to_i64: value out of range");
    return static_cast<std::int64_t>(v.get_si());
}

BigInt big(std::int64_t v) { return BigInt(static_cast<long>(v)); }

BigInt pow2(unsigned bits) {
    BigInt r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, bits);
    return r;
}

std::size_t bit_length(const BigInt& v) {
    if (v == 0) return 0;
    return mpz_sizeinbase(v.get_mpz_t(), 2);
}

}  // namespace infra

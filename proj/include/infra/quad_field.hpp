#pragma once

#include "infra/infrastructure.hpp"

#include <mutex>
#include <unordered_map>

namespace infra {

/** (P + sqrt(D)) / Q with Q > 0 and Q | D - P^2. */
struct ReducedForm {
    std::int64_t P = 0;
    std::int64_t Q = 1;
    std::int64_t D = 2;
    friend bool operator==(const ReducedForm&, const ReducedForm&) = default;
};

/** (u + v sqrt(D)) / w with w > 0, exact. */
struct QuadNumber {
    BigInt u{1}, v{0}, w{1};

    QuadNumber mul(const QuadNumber& o, std::int64_t D) const;
    QuadNumber div(const QuadNumber& o, std::int64_t D) const;
    QuadNumber reduced() const;
    /** Sign of (value - 1). */
    int cmp_one(std::int64_t D) const;
};

std::int64_t isqrt(std::int64_t n);
bool is_square(std::int64_t n);

bool is_reduced(const ReducedForm& f);
/** Origin of the principal cycle, (floor(sqrt D), 1). */
ReducedForm principal_form(std::int64_t D);
/** One continued-fraction step. */
ReducedForm qf_bs(const ReducedForm& f);
ReducedForm qf_bs_inv(const ReducedForm& f);
/** Exact multiplier between f and qf_bs(f). */
QuadNumber qf_step_multiplier(const ReducedForm& f);
/** ln of the baby-step multiplier, within 2^-m. */
ScaledReal qf_delta_bs(const ReducedForm& f, unsigned m);

struct GiantStep {
    ReducedForm form;
    int steps = 0;  // reduction plus adjustment steps
    QuadNumber relative;  // d(form) = d(f) + d(g) + ln(relative), relative >= 1
};

/** Composition, reduction and adjustment to the first form at or past d(f)+d(g). */
GiantStep qf_gs(const ReducedForm& f, const ReducedForm& g);

/** ln((u + v sqrt D) / w) within 2^-m; the argument must be positive. */
ScaledReal log_quadratic(const QuadNumber& x, std::int64_t D, unsigned m);

struct PellSolution {
    BigInt x, y;
    int norm = 0;  // x^2 - D y^2
};

/**
 * Fundamental solution of x^2 - D y^2 = +-1 from one walk of the principal
 * cycle, checked against the supplied circumference estimate.
 */
PellSolution pell_solution(std::int64_t D, const ScaledReal& regulator_estimate,
                           const ScaledReal& tolerance = ScaledReal::parse("1/1000"));
/** Smallest solution with norm +1. */
PellSolution pell_plus_one(const PellSolution& s, std::int64_t D);

/**
 * Field regulator from the unit of Z[sqrt D]: divides by 3 when that unit is
 * the cube of a half-integral unit (possible only for D = 5 mod 8).
 */
struct FieldRegulator {
    double value = 0;
    int index = 1;  // 1 or 3
    BigInt a, b;    // fundamental unit of the maximal order (a + b sqrt D) / 2
};
FieldRegulator field_regulator(std::int64_t D, const PellSolution& unit);

/** Witness data from enumerating the principal cycle once. */
struct QuadCycleInfo {
    std::vector<ReducedForm> forms;
    std::vector<double> gaps;  // ln multipliers, 64-bit accurate
    double circumference = 0;
};

class QuadraticInfra final : public Infrastructure {
public:
    /** D <= 10^6 non-square; enumerates the cycle once to certify witnesses. */
    explicit QuadraticInfra(std::int64_t D);

    std::string kind() const override { return "quadratic"; }
    Element origin() const override { return encode(principal_form(D_)); }
    bool is_valid(const Element& x) const override;
    Element bs(const Element& x) const override;
    Element bs_inv(const Element& x) const override;
    Element gs(const Element& x, const Element& y) const override;
    ScaledReal delta_bs_approx(const Element& x, unsigned m) const override;
    ScaledReal delta_gs_approx(const Element& x, const Element& y, unsigned m) const override;
    std::pair<Element, ScaledReal> gs_with_delta(const Element& x, const Element& y, unsigned m) const override;
    std::string format(const Element& x) const override;
    Element parse_element(std::string_view text) const override;

    std::int64_t D() const { return D_; }
    ReducedForm decode(const Element& x) const { return {x.a, x.b, D_}; }
    Element encode(const ReducedForm& f) const { return {f.P, f.Q}; }
    /** Certification surface; algorithms never look at it. */
    const QuadCycleInfo& cycle_info() const { return cycle_; }

private:
    struct GsEntry {
        Element z;
        QuadNumber rel;
    };
    const GsEntry& gs_cached(const Element& x, const Element& y) const;

    std::int64_t D_;
    QuadCycleInfo cycle_;
    mutable std::mutex mu_;
    mutable std::unordered_map<Element, GsEntry, ElementHash> gs_cache_;  // key packs both operands
    mutable std::unordered_map<Element, ScaledReal, ElementHash> bs_cache_;  // key (index, m)
    mutable std::unordered_map<Element, ScaledReal, ElementHash> gsd_cache_;
    std::unordered_map<Element, std::int64_t, ElementHash> index_;
};

}  // namespace infra

#pragma once

#include "infra/infrastructure.hpp"
#include "infra/rng.hpp"

#include <map>
#include <mutex>
#include <optional>

namespace infra {

/**
 * f-representation (x, f). err_units bounds the drift of the accumulated
 * distance in units of 2^-m; it is zero on exact backends in practice but is
 * always tracked so the closed-form budget can be compared with it.
 */
struct FRep {
    Element x;
    ScaledReal f;
    double err_units = 0;
};

class StepBudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BudgetFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PrecisionBudget {
    unsigned m = 0;
    ScaledReal B;          // evaluation points lie in [0, B)
    std::int64_t L = 1;
    std::int64_t A = 0;    // scalar range for g; 0 means h only
    double bound = 0;      // closed-form error at m
};

/** Closed-form accumulated-distance error of h-tilde at r < B and precision m. */
double closed_form_error_h(const InfraParams& p, double B, unsigned m);
/** Same for g-tilde with scalars below A (own derivation, see README). */
double closed_form_error_g(const InfraParams& p, double B, std::int64_t A, unsigned m);
/** Smallest m whose closed-form bound is below 1/(2L), plus two slack bits. */
PrecisionBudget choose_precision(const ScaledReal& B, std::int64_t L, const InfraParams& p, std::int64_t A = 0);

/** Evaluation grid i/N + j/L. */
struct ShiftedGrid {
    std::int64_t N = 1;
    std::int64_t L = 1;
    std::int64_t j = 0;

    ScaledReal point(const BigInt& i) const;
    void validate(const InfraParams& p) const;
};

/** Quantized value (x, floor(f N)). */
struct QValue {
    Element x;
    std::int64_t v = 0;
    friend auto operator<=>(const QValue&, const QValue&) = default;
};

struct QValueHash {
    std::size_t operator()(const QValue& q) const noexcept {
        return ElementHash{}(q.x) ^ (static_cast<std::size_t>(q.v) * 0x9E3779B97F4A7C15ULL);
    }
};

/** Diagnostics of one h-tilde evaluation. */
struct HTildeStats {
    BigInt a;
    int landing_steps = 0;
    std::int64_t default_budget = 0;
    std::int64_t budget = 0;
    /** The landing needed more than k_bar baby steps. */
    bool beyond_kbar = false;
};

class CircleGroup {
public:
    CircleGroup(const Infrastructure& infra, unsigned m);

    const Infrastructure& infra() const { return *infra_; }
    unsigned m() const { return m_; }
    /** 4 k_bar ceil(2 d_max / d_k_bar). */
    std::int64_t default_step_budget() const { return default_budget_; }

    FRep identity() const { return {infra_->origin(), ScaledReal(), 0}; }

    /** Baby-step (x, f) into 0 <= f < delta(x); throws StepBudgetExceeded. */
    FRep reduce(const Element& x, const ScaledReal& f, std::int64_t max_steps = 0, double err_units = 0,
                int* steps = nullptr) const;
    FRep add(const FRep& p, const FRep& q) const;
    /** Right-to-left double and add. */
    FRep scalar_mul(const BigInt& a, const FRep& p) const;
    /** Same, reusing a per-base table of doublings. */
    FRep scalar_mul_cached(const BigInt& a, const FRep& base) const;

    /** h-tilde(r) for r >= 0. */
    FRep h_tilde(const ScaledReal& r, HTildeStats* stats = nullptr) const;
    /** Negative r is shifted by a multiple of the supplied circumference estimate. */
    FRep h_tilde_signed(const ScaledReal& r, const std::optional<ScaledReal>& circumference) const;
    /** g-tilde(a, r) = a (x, 0) + h-tilde(r). */
    FRep g_tilde(const BigInt& a, const ScaledReal& r, const Element& x) const;

    QValue quantize_hN(const BigInt& i, const ShiftedGrid& grid) const;
    QValue quantize_gN(const BigInt& a, const BigInt& b, const Element& x, const ShiftedGrid& grid) const;

    /** Largest landing walk observed so far (open question diagnostics). */
    int max_landing_steps() const;
    std::int64_t landings_beyond_kbar() const;

private:
    const Infrastructure* infra_;
    unsigned m_;
    std::int64_t default_budget_;
    Element x_kbar_;
    ScaledReal d_kbar_tilde_;  // clamped below by d_k_bar
    double d_kbar_err_units_;
    mutable std::mutex mu_;
    mutable std::map<Element, std::vector<FRep>> tables_;
    mutable int max_landing_ = 0;
    mutable std::int64_t beyond_kbar_ = 0;
};

/** Exact h on an oracle backend: the element at or below r mod R. */
FRep h_exact_on_oracle(const ExactInfrastructure& infra, const ScaledReal& r);
/** Exact g on an oracle backend. */
FRep g_exact_on_oracle(const ExactInfrastructure& infra, const BigInt& a, const ScaledReal& r, const Element& x);
/** Absolute distance d(x) + f reduced mod R. */
ScaledReal absolute_distance(const ExactInfrastructure& infra, const FRep& p);

/** L = N ceil(2 k_bar / (1 - p_h) * ceil(q / (N d_k_bar))) and a uniform j. */
ShiftedGrid pick_shift_circ(std::int64_t N, std::int64_t q, const InfraParams& p, double p_h, Rng& rng);
std::int64_t offset_L_circ(std::int64_t N, std::int64_t q, const InfraParams& p, double p_h);
/** L = ceil(2 A k_bar / (1 - p_g) * ceil(R_hat / d_k_bar)) N and a uniform j. */
ShiftedGrid pick_shift_dlog(std::int64_t N, std::int64_t A, const ScaledReal& R_hat, const InfraParams& p, double p_g,
                            Rng& rng);
std::int64_t offset_L_dlog(std::int64_t N, std::int64_t A, const ScaledReal& R_hat, const InfraParams& p, double p_g);

/**
 * Keeps one shift for a whole batch of state preparations and draws a new
 * one only after a run of consecutive failures.
 */
class ShiftPolicy {
public:
    ShiftPolicy(ShiftedGrid initial, std::int64_t switch_after) : grid_(initial), switch_after_(switch_after) {}

    const ShiftedGrid& grid() const { return grid_; }
    /** Returns true when the shift was replaced. */
    bool record(bool success, Rng& rng);
    std::int64_t switches() const { return switches_; }

private:
    ShiftedGrid grid_;
    std::int64_t switch_after_;
    std::int64_t failures_ = 0;
    std::int64_t switches_ = 0;
};

}  // namespace infra

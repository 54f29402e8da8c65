#pragma once

#include "infra/fixedpoint.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace infra {

/** Opaque element encoding; each backend decides what a and b mean. */
struct Element {
    std::int64_t a = 0;
    std::int64_t b = 0;
    friend auto operator<=>(const Element&, const Element&) = default;
};

struct ElementHash {
    std::size_t operator()(const Element& e) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(e.a) * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(e.b) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

class MalformedElement : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/** Witness constants for the access-model assumptions. */
struct InfraParams {
    ScaledReal d_min_lower;
    ScaledReal d_max_upper;
    int k_bar = 1;
    ScaledReal d_k_bar;
    ScaledReal R_upper;

    void validate() const;
};

/**
 * The (X, d) access model: baby step, giant step and approximate relative
 * distances. Absolute distances and the circumference are not exposed.
 */
class Infrastructure {
public:
    virtual ~Infrastructure() = default;

    virtual std::string kind() const = 0;
    virtual Element origin() const = 0;
    virtual bool is_valid(const Element& x) const = 0;

    virtual Element bs(const Element& x) const = 0;
    virtual Element bs_inv(const Element& x) const = 0;
    virtual Element gs(const Element& x, const Element& y) const = 0;

    /** Within 2^-m of the true gap, deterministic in (x, m). */
    virtual ScaledReal delta_bs_approx(const Element& x, unsigned m) const = 0;
    virtual ScaledReal delta_gs_approx(const Element& x, const Element& y, unsigned m) const = 0;

    /** gs(x, y) together with its correction term. */
    virtual std::pair<Element, ScaledReal> gs_with_delta(const Element& x, const Element& y, unsigned m) const {
        return {gs(x, y), delta_gs_approx(x, y, m)};
    }

    /** True when every delta is exact at every precision. */
    virtual bool exact_deltas() const { return false; }

    virtual std::string format(const Element& x) const = 0;
    virtual Element parse_element(std::string_view text) const = 0;

    const InfraParams& params() const { return params_; }

protected:
    void check(const Element& x) const {
        if (!is_valid(x)) throw MalformedElement(kind() + ": malformed element " + format(x));
    }
    InfraParams params_;
};

/**
 * Backends whose distances are known exactly. Only verification code should
 * use this surface; algorithm modules take the plain interface.
 */
class ExactInfrastructure : public Infrastructure {
public:
    virtual ScaledReal oracle_distance(const Element& x) const = 0;
    virtual ScaledReal oracle_circumference() const = 0;
    /** Elements in increasing distance order; index 0 is the origin. */
    virtual std::size_t size() const = 0;
    virtual Element element_at(std::size_t i) const = 0;
    virtual std::size_t index_of(const Element& x) const = 0;
    /** Gap after the i-th element, exactly. */
    virtual ScaledReal oracle_gap(std::size_t i) const = 0;
};

/** Throws std::logic_error on backends without exact distances. */
ScaledReal oracle_distance(const Infrastructure& infra, const Element& x);
const ExactInfrastructure& as_exact(const Infrastructure& infra);

/** Z/n with generator g: d(g^k) = k, every gap 1, giant step correction 0. */
class CyclicInfra final : public ExactInfrastructure {
public:
    explicit CyclicInfra(std::int64_t order);

    std::string kind() const override { return "cyclic"; }
    Element origin() const override { return {0, 0}; }
    bool is_valid(const Element& x) const override { return x.b == 0 && x.a >= 0 && x.a < n_; }
    Element bs(const Element& x) const override;
    Element bs_inv(const Element& x) const override;
    Element gs(const Element& x, const Element& y) const override;
    ScaledReal delta_bs_approx(const Element& x, unsigned m) const override;
    ScaledReal delta_gs_approx(const Element& x, const Element& y, unsigned m) const override;
    bool exact_deltas() const override { return true; }
    std::string format(const Element& x) const override;
    Element parse_element(std::string_view text) const override;

    ScaledReal oracle_distance(const Element& x) const override;
    ScaledReal oracle_circumference() const override { return ScaledReal(big(n_)); }
    std::size_t size() const override { return static_cast<std::size_t>(n_); }
    Element element_at(std::size_t i) const override { return {static_cast<std::int64_t>(i), 0}; }
    std::size_t index_of(const Element& x) const override;
    ScaledReal oracle_gap(std::size_t) const override { return ScaledReal(1); }

    std::int64_t order() const { return n_; }

private:
    std::int64_t n_;
};

/** Optional overrides of the witness constants for synthetic backends. */
struct ParamOverrides {
    std::optional<ScaledReal> d_min_lower, d_max_upper, d_k_bar, R_upper;
    std::optional<int> k_bar;
};

/** Synthetic infrastructure given by its list of rational gaps. */
class SyntheticInfra final : public ExactInfrastructure {
public:
    explicit SyntheticInfra(std::vector<ScaledReal> gaps, const ParamOverrides& overrides = {});

    std::string kind() const override { return "synthetic"; }
    Element origin() const override { return {0, 0}; }
    bool is_valid(const Element& x) const override {
        return x.b == 0 && x.a >= 0 && static_cast<std::size_t>(x.a) < gaps_.size();
    }
    Element bs(const Element& x) const override;
    Element bs_inv(const Element& x) const override;
    Element gs(const Element& x, const Element& y) const override;
    ScaledReal delta_bs_approx(const Element& x, unsigned m) const override;
    ScaledReal delta_gs_approx(const Element& x, const Element& y, unsigned m) const override;
    std::pair<Element, ScaledReal> gs_with_delta(const Element& x, const Element& y, unsigned m) const override;
    bool exact_deltas() const override { return true; }
    std::string format(const Element& x) const override;
    Element parse_element(std::string_view text) const override;

    ScaledReal oracle_distance(const Element& x) const override;
    ScaledReal oracle_circumference() const override { return R_; }
    std::size_t size() const override { return gaps_.size(); }
    Element element_at(std::size_t i) const override { return {static_cast<std::int64_t>(i), 0}; }
    std::size_t index_of(const Element& x) const override;
    ScaledReal oracle_gap(std::size_t i) const override { return gaps_.at(i); }

    const std::vector<ScaledReal>& gaps() const { return gaps_; }

private:
    std::vector<ScaledReal> gaps_;
    std::vector<ScaledReal> dist_;
    ScaledReal R_;
};

/**
 * Wraps an exact backend and returns deltas perturbed by a deterministic
 * amount strictly inside (-2^-m, 2^-m). Used to exercise error budgets.
 */
class PerturbedInfra final : public ExactInfrastructure {
public:
    PerturbedInfra(std::shared_ptr<const ExactInfrastructure> base, std::uint64_t salt);

    std::string kind() const override { return "perturbed-" + base_->kind(); }
    Element origin() const override { return base_->origin(); }
    bool is_valid(const Element& x) const override { return base_->is_valid(x); }
    Element bs(const Element& x) const override { return base_->bs(x); }
    Element bs_inv(const Element& x) const override { return base_->bs_inv(x); }
    Element gs(const Element& x, const Element& y) const override { return base_->gs(x, y); }
    ScaledReal delta_bs_approx(const Element& x, unsigned m) const override;
    ScaledReal delta_gs_approx(const Element& x, const Element& y, unsigned m) const override;
    std::string format(const Element& x) const override { return base_->format(x); }
    Element parse_element(std::string_view text) const override { return base_->parse_element(text); }

    ScaledReal oracle_distance(const Element& x) const override { return base_->oracle_distance(x); }
    ScaledReal oracle_circumference() const override { return base_->oracle_circumference(); }
    std::size_t size() const override { return base_->size(); }
    Element element_at(std::size_t i) const override { return base_->element_at(i); }
    std::size_t index_of(const Element& x) const override { return base_->index_of(x); }
    ScaledReal oracle_gap(std::size_t i) const override { return base_->oracle_gap(i); }

private:
    ScaledReal noise(std::uint64_t key, unsigned m) const;

    std::shared_ptr<const ExactInfrastructure> base_;
    std::uint64_t salt_;
};

/** Outcome of exhaustively checking the witness constants on an exact backend. */
struct CertificationReport {
    bool ok = true;
    std::vector<std::string> violations;
    ScaledReal min_gap, max_gap, min_kbar_span;
};

CertificationReport certify_assumptions(const ExactInfrastructure& infra);

}  // namespace infra

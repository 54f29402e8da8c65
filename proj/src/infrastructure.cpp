#include "infra/infrastructure.hpp"
#include "infra/rng.hpp"

#include <algorithm>
#include <charconv>

namespace infra {

void InfraParams::validate() const {
    if (d_min_lower.sign() <= 0) throw std::invalid_argument("InfraParams: d_min_lower must be positive");
    if (d_max_upper < d_min_lower) throw std::invalid_argument("InfraParams: d_max_upper < d_min_lower");
    if (d_k_bar.sign() <= 0) throw std::invalid_argument("InfraParams: d_k_bar must be positive");
    if (k_bar < 1) throw std::invalid_argument("InfraParams: k_bar must be >= 1");
    if (R_upper.sign() <= 0) throw std::invalid_argument("InfraParams: R_upper must be positive");
}

const ExactInfrastructure& as_exact(const Infrastructure& infra) {
    auto* e = dynamic_cast<const ExactInfrastructure*>(&infra);
    if (e == nullptr) throw std::logic_error("backend '" + infra.kind() + "' has no exact distance oracle");
    return *e;
}

ScaledReal oracle_distance(const Infrastructure& infra, const Element& x) { return as_exact(infra).oracle_distance(x); }

namespace {

std::int64_t parse_index(std::string_view text, std::string_view prefix) {
    if (text.substr(0, prefix.size()) == prefix) text.remove_prefix(prefix.size());
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw MalformedElement("cannot parse element '" + std::string(text) + "'");
    return v;
}

}  // namespace

// ---- cyclic ---------------------------------------------------------------

CyclicInfra::CyclicInfra(std::int64_t order) : n_(order) {
    if (order < 1) throw std::invalid_argument("CyclicInfra: order must be >= 1");
    params_.d_min_lower = 1;
    params_.d_max_upper = 1;
    params_.k_bar = 1;
    params_.d_k_bar = 1;
    params_.R_upper = ScaledReal(big(n_));
    params_.validate();
}

Element CyclicInfra::bs(const Element& x) const {
    check(x);
    return {(x.a + 1) % n_, 0};
}

Element CyclicInfra::bs_inv(const Element& x) const {
    check(x);
    return {(x.a + n_ - 1) % n_, 0};
}

Element CyclicInfra::gs(const Element& x, const Element& y) const {
    check(x);
    check(y);
    return {(x.a + y.a) % n_, 0};
}

ScaledReal CyclicInfra::delta_bs_approx(const Element& x, unsigned) const {
    check(x);
    return 1;
}

ScaledReal CyclicInfra::delta_gs_approx(const Element& x, const Element& y, unsigned) const {
    check(x);
    check(y);
    return 0;
}

std::string CyclicInfra::format(const Element& x) const { return "g^" + std::to_string(x.a); }

Element CyclicInfra::parse_element(std::string_view text) const {
    Element e{parse_index(text, "g^"), 0};
    check(e);
    return e;
}

ScaledReal CyclicInfra::oracle_distance(const Element& x) const {
    check(x);
    return ScaledReal(big(x.a));
}

std::size_t CyclicInfra::index_of(const Element& x) const {
    check(x);
    return static_cast<std::size_t>(x.a);
}

// ---- synthetic ------------------------------------------------------------

SyntheticInfra::SyntheticInfra(std::vector<ScaledReal> gaps, const ParamOverrides& ov) : gaps_(std::move(gaps)) {
    if (gaps_.empty()) throw std::invalid_argument("SyntheticInfra: need at least one gap");
    ScaledReal acc;
    ScaledReal lo = gaps_.front(), hi = gaps_.front();
    dist_.reserve(gaps_.size());
    for (auto& g : gaps_) {
        if (g.sign() <= 0) throw std::invalid_argument("SyntheticInfra: gaps must be positive");
        g = g.normalized();
        dist_.push_back(acc);
        acc += g;
        lo = std::min(lo, g);
        hi = std::max(hi, g);
    }
    R_ = acc.normalized();
    params_.d_min_lower = ov.d_min_lower.value_or(lo);
    params_.d_max_upper = ov.d_max_upper.value_or(hi);
    params_.k_bar = ov.k_bar.value_or(1);
    params_.d_k_bar = ov.d_k_bar.value_or(params_.k_bar == 1 ? lo : lo * big(params_.k_bar));
    params_.R_upper = ov.R_upper.value_or(ScaledReal(ceil(R_)));
    params_.validate();
}

Element SyntheticInfra::bs(const Element& x) const {
    check(x);
    return {(x.a + 1) % static_cast<std::int64_t>(gaps_.size()), 0};
}

Element SyntheticInfra::bs_inv(const Element& x) const {
    check(x);
    auto n = static_cast<std::int64_t>(gaps_.size());
    return {(x.a + n - 1) % n, 0};
}

std::pair<Element, ScaledReal> SyntheticInfra::gs_with_delta(const Element& x, const Element& y, unsigned) const {
    check(x);
    check(y);
    ScaledReal t = dist_[static_cast<std::size_t>(x.a)] + dist_[static_cast<std::size_t>(y.a)];
    if (t >= R_) t -= R_;
    // first element whose distance is >= t; wraps to the origin past the end
    auto it = std::lower_bound(dist_.begin(), dist_.end(), t);
    if (it == dist_.end()) return {Element{0, 0}, (R_ - t).normalized()};
    return {Element{static_cast<std::int64_t>(it - dist_.begin()), 0}, (*it - t).normalized()};
}

Element SyntheticInfra::gs(const Element& x, const Element& y) const { return gs_with_delta(x, y, 0).first; }

ScaledReal SyntheticInfra::delta_bs_approx(const Element& x, unsigned) const {
    check(x);
    return gaps_[static_cast<std::size_t>(x.a)];
}

ScaledReal SyntheticInfra::delta_gs_approx(const Element& x, const Element& y, unsigned m) const {
    return gs_with_delta(x, y, m).second;
}

std::string SyntheticInfra::format(const Element& x) const { return "x" + std::to_string(x.a); }

Element SyntheticInfra::parse_element(std::string_view text) const {
    Element e{parse_index(text, "x"), 0};
    check(e);
    return e;
}

ScaledReal SyntheticInfra::oracle_distance(const Element& x) const {
    check(x);
    return dist_[static_cast<std::size_t>(x.a)];
}

std::size_t SyntheticInfra::index_of(const Element& x) const {
    check(x);
    return static_cast<std::size_t>(x.a);
}

// ---- perturbed ------------------------------------------------------------

PerturbedInfra::PerturbedInfra(std::shared_ptr<const ExactInfrastructure> base, std::uint64_t salt)
    : base_(std::move(base)), salt_(salt) {
    params_ = base_->params();
}

ScaledReal PerturbedInfra::noise(std::uint64_t key, unsigned m) const {
    constexpr unsigned kBits = 20;
    std::uint64_t u = splitmix64(key ^ splitmix64(salt_ + m)) & ((1ULL << kBits) - 1);
    // |2u - (2^20 - 1)| < 2^20, so the offset stays strictly inside (-2^-m, 2^-m)
    auto num = static_cast<std::int64_t>(2 * u) - static_cast<std::int64_t>((1ULL << kBits) - 1);
    return ScaledReal::dyadic(big(num), m + kBits);
}

ScaledReal PerturbedInfra::delta_bs_approx(const Element& x, unsigned m) const {
    ElementHash h;
    return base_->delta_bs_approx(x, m) + noise(h(x), m);
}

ScaledReal PerturbedInfra::delta_gs_approx(const Element& x, const Element& y, unsigned m) const {
    ElementHash h;
    // symmetric key keeps the giant step commutative in its correction too
    std::uint64_t kx = h(x), ky = h(y);
    std::uint64_t key = splitmix64(std::min(kx, ky)) ^ (std::max(kx, ky) * 0xD6E8FEB86659FD93ULL) ^ 0x5555;
    return base_->delta_gs_approx(x, y, m) + noise(key, m);
}

// ---- certification --------------------------------------------------------

CertificationReport certify_assumptions(const ExactInfrastructure& infra) {
    CertificationReport rep;
    const auto& p = infra.params();
    const std::size_t n = infra.size();
    auto fail = [&](std::string msg) {
        rep.ok = false;
        rep.violations.push_back(std::move(msg));
    };
    ScaledReal total;
    for (std::size_t i = 0; i < n; ++i) {
        Element x = infra.element_at(i);
        ScaledReal g = infra.oracle_gap(i);
        if (infra.bs_inv(infra.bs(x)) != x) fail("bs_inv(bs(x)) != x at index " + std::to_string(i));
        if (i == 0 || g < rep.min_gap) rep.min_gap = g;
        if (i == 0 || g > rep.max_gap) rep.max_gap = g;
        if (g < p.d_min_lower) fail("gap below d_min at index " + std::to_string(i));
        if (g > p.d_max_upper) fail("gap above d_max at index " + std::to_string(i));
        ScaledReal span;
        for (int k = 0; k < p.k_bar; ++k) span += infra.oracle_gap((i + static_cast<std::size_t>(k)) % n);
        if (i == 0 || span < rep.min_kbar_span) rep.min_kbar_span = span;
        if (span < p.d_k_bar) fail("k_bar span below d_k_bar at index " + std::to_string(i));
        total += g;
    }
    if (total != infra.oracle_circumference()) fail("gaps do not sum to the circumference");
    if (total > p.R_upper) fail("circumference exceeds R_upper");
    return rep;
}

}  // namespace infra

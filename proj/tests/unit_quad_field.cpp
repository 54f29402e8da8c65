#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "infra/quad_field.hpp"
#include "oracles.hpp"

#include <random>

using namespace infra;
using oracle::Float;

namespace {

// Period of the continued fraction of sqrt(D) by the textbook (m, d, a) recurrence.
int cf_period_sqrt(std::int64_t D) {
    const std::int64_t a0 = static_cast<std::int64_t>(std::sqrt(static_cast<double>(D)));
    std::int64_t m = 0, d = 1, a = a0;
    int n = 0;
    do {
        m = d * a - m;
        d = (D - m * m) / d;
        a = (a0 + m) / d;
        ++n;
    } while (a != 2 * a0);
    return n;
}

std::vector<ReducedForm> cycle_of(std::int64_t D) {
    std::vector<ReducedForm> out{principal_form(D)};
    for (ReducedForm f = qf_bs(out[0]); !(f == out[0]); f = qf_bs(f)) out.push_back(f);
    return out;
}

Float to_float(const ScaledReal& x) { return oracle::to_float(oracle::to_rational(x)); }

// Log of the smallest unit of Z[sqrt D], found by direct search.
Float zsqrt_unit_log(std::int64_t D, std::int64_t y_cap) {
    auto m = oracle::brute_force_pell(D, -1, y_cap);
    auto p = oracle::brute_force_pell(D, +1, y_cap);
    auto pick = m.second != 0 && (p.second == 0 || m.second < p.second) ? m : p;
    REQUIRE(pick.second != 0);
    return log(Float(pick.first) + Float(pick.second) * sqrt(Float(D)));
}

Float abs_f(const Float& x) { return x < 0 ? Float(-x) : x; }

}  // namespace

TEST_CASE("D = 13 principal cycle") {
    auto c = cycle_of(13);
    REQUIRE(c.size() == 5);
    CHECK(static_cast<int>(c.size()) == cf_period_sqrt(13));
    const std::vector<std::pair<int, int>> expect{{3, 1}, {3, 4}, {1, 3}, {2, 3}, {1, 4}};
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i].P == expect[i].first);
        CHECK(c[i].Q == expect[i].second);
        CHECK(is_reduced(c[i]));
        CHECK(qf_bs_inv(qf_bs(c[i])) == c[i]);
    }
}

TEST_CASE("cycle length matches the continued fraction period") {
    for (std::int64_t D : {2, 3, 7, 19, 31, 43, 46, 94, 151, 331, 1021}) {
        CAPTURE(D);
        CHECK(static_cast<int>(cycle_of(D).size()) == cf_period_sqrt(D));
    }
    CHECK(cycle_of(2).size() == 1);
}

TEST_CASE("baby step inverse on random reduced forms") {
    std::mt19937_64 rng(5);
    std::vector<std::int64_t> Ds{13, 61, 94, 109, 421, 1009, 9949};
    int checked = 0;
    for (std::int64_t D : Ds) {
        auto c = cycle_of(D);
        for (int i = 0; i < 150; ++i) {
            const auto& f = c[rng() % c.size()];
            REQUIRE(is_reduced(qf_bs(f)));
            REQUIRE(qf_bs_inv(qf_bs(f)) == f);
            REQUIRE(qf_bs(qf_bs_inv(f)) == f);
            ++checked;
        }
    }
    CHECK(checked >= 1000);
    CHECK_THROWS(qf_bs(ReducedForm{5, 1, 13}));
}

TEST_CASE("baby-step logarithms agree with a 100-digit oracle") {
    for (std::int64_t D : {2, 13, 61, 109, 1009}) {
        for (const auto& f : cycle_of(D)) {
            const ReducedForm g = qf_bs(f);
            const Float ref = oracle::log_surd(g.P, g.Q, D);
            for (unsigned m : {20u, 40u, 64u}) {
                Float err = abs_f(to_float(qf_delta_bs(f, m)) - ref);
                REQUIRE(err < ldexp(Float(1), -static_cast<int>(m)));
            }
        }
    }
}

TEST_CASE("refining precision stays within the contract") {
    for (const auto& f : cycle_of(61)) {
        ScaledReal lo = qf_delta_bs(f, 30), hi = qf_delta_bs(f, 60);
        CHECK(abs(lo - hi) < ScaledReal::dyadic(1, 30) + ScaledReal::dyadic(1, 60));
    }
}

TEST_CASE("cycle sum equals the log of the Z[sqrt D] unit") {
    for (std::int64_t D : {2, 3, 5, 13, 61}) {
        CAPTURE(D);
        auto c = cycle_of(D);
        ScaledReal sum;
        const unsigned m = 50;
        for (const auto& f : c) sum += qf_delta_bs(f, m);
        const Float ref = zsqrt_unit_log(D, 5000);
        CHECK(abs_f(to_float(sum) - ref) <= Float(c.size()) * ldexp(Float(1), -50));
        QuadraticInfra q(D);
        CHECK(std::abs(q.cycle_info().circumference - static_cast<double>(ref)) < 1e-9);
    }
    CHECK(std::abs(static_cast<double>(zsqrt_unit_log(2, 10)) - 0.881373587) < 1e-9);
}

TEST_CASE("giant step identity and commutativity") {
    std::mt19937_64 rng(9);
    for (std::int64_t D : {13, 94, 1009, 9949}) {
        auto c = cycle_of(D);
        const ReducedForm id = principal_form(D);
        for (const auto& g : c) {
            GiantStep s = qf_gs(id, g);
            CHECK(s.form == g);
            CHECK(s.relative.cmp_one(D) == 0);
        }
        for (int i = 0; i < 250; ++i) {
            const auto& f = c[rng() % c.size()];
            const auto& g = c[rng() % c.size()];
            GiantStep a = qf_gs(f, g), b = qf_gs(g, f);
            REQUIRE(a.form == b.form);
            REQUIRE(is_reduced(a.form));
            REQUIRE(a.relative.cmp_one(D) >= 0);
        }
    }
}

TEST_CASE("giant step correction matches oracle distances") {
    for (std::int64_t D : {13, 61, 94}) {
        CAPTURE(D);
        auto c = cycle_of(D);
        std::vector<Float> dist{Float(0)};
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            const ReducedForm n = qf_bs(c[i]);
            dist.push_back(dist.back() + oracle::log_surd(n.P, n.Q, D));
        }
        const Float R = zsqrt_unit_log(D, 300000);
        QuadraticInfra q(D);
        double dmax = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const ReducedForm n = qf_bs(c[i]);
            dmax = std::max(dmax, static_cast<double>(oracle::log_surd(n.P, n.Q, D)));
        }
        for (std::size_t i = 0; i < c.size(); i += 1 + c.size() / 7) {
            for (std::size_t j = 0; j < c.size(); j += 1 + c.size() / 5) {
                const Element x = q.encode(c[i]), y = q.encode(c[j]);
                auto [z, delta] = q.gs_with_delta(x, y, 60);
                std::size_t k = 0;
                while (!(q.encode(c[k]) == z)) ++k;
                Float lhs = dist[i] + dist[j] + to_float(delta) - dist[k];
                Float turns = lhs / R;
                Float resid = abs_f(turns - round(turns)) * R;
                CHECK(resid < Float(1e-15));
                // the result sits at or past d(x) + d(y), by at most d_max
                Float over = dist[k] - dist[i] - dist[j];
                over -= floor(over / R) * R;
                CHECK((over <= Float(dmax) + Float(1e-12) || R - over < Float(1e-12)));
                CHECK(z == q.gs(y, x));
            }
        }
    }
}

TEST_CASE("Pell solutions against direct search") {
    PellSolution s2 = pell_solution(2, ScaledReal::parse("0.8814"));
    CHECK(s2.x == 1);
    CHECK(s2.y == 1);
    CHECK(s2.norm == -1);

    auto bf13 = oracle::brute_force_pell(13, -1, 10000);
    PellSolution s13 = pell_solution(13, ScaledReal::parse("3.5843"));
    CHECK(oracle::to_cpp_int(s13.x) == bf13.first);
    CHECK(oracle::to_cpp_int(s13.y) == bf13.second);
    CHECK(s13.norm == -1);
    PellSolution p13 = pell_plus_one(s13, 13);
    auto bfp = oracle::brute_force_pell(13, +1, 10000);
    CHECK(oracle::to_cpp_int(p13.x) == bfp.first);
    CHECK(oracle::to_cpp_int(p13.y) == bfp.second);
    CHECK(p13.norm == 1);

    auto bf61 = oracle::brute_force_pell(61, -1, 10000);
    REQUIRE(bf61.second != 0);
    const Float ln61 = log(Float(bf61.first) + Float(bf61.second) * sqrt(Float(61)));
    PellSolution s61 = pell_solution(61, ScaledReal::from_double(static_cast<double>(ln61)));
    CHECK(oracle::to_cpp_int(s61.x) == bf61.first);
    CHECK(oracle::to_cpp_int(s61.y) == bf61.second);
    PellSolution p61 = pell_plus_one(s61, 61);
    CHECK(p61.x * p61.x - 61 * p61.y * p61.y == 1);
    CHECK(oracle::to_cpp_int(p61.x) == 2 * bf61.first * bf61.first + 1);

    CHECK_THROWS(pell_solution(13, ScaledReal(1)));
    CHECK_THROWS(pell_solution(16, ScaledReal(1)));
}

TEST_CASE("field regulators against the maximal-order oracle") {
    for (std::int64_t D : {2, 3, 5, 13, 21, 61, 94, 109, 229}) {
        CAPTURE(D);
        QuadraticInfra q(D);
        PellSolution s = pell_solution(D, ScaledReal::from_double(q.cycle_info().circumference));
        FieldRegulator fr = field_regulator(D, s);
        oracle::Unit u = oracle::maximal_order_unit(D);
        const Float ref = log((Float(u.a) + Float(u.b) * sqrt(Float(D))) / u.den);
        CHECK(std::abs(fr.value - static_cast<double>(ref)) < 1e-9);
    }
    QuadraticInfra q13(13);
    FieldRegulator fr13 = field_regulator(13, pell_solution(13, ScaledReal::parse("3.5843")));
    CHECK(fr13.index == 3);
    CHECK(std::abs(fr13.value - 1.194763217) < 1e-8);
}

TEST_CASE("log_quadratic accuracy") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const std::int64_t D = 2 + static_cast<std::int64_t>(rng() % 5000);
        if (is_square(D)) continue;
        QuadNumber x{BigInt(static_cast<long>(1 + rng() % 10000)), BigInt(static_cast<long>(rng() % 100)),
                     BigInt(static_cast<long>(1 + rng() % 50))};
        const Float ref =
            log((Float(oracle::to_cpp_int(x.u)) + Float(oracle::to_cpp_int(x.v)) * sqrt(Float(D))) /
                Float(oracle::to_cpp_int(x.w)));
        REQUIRE(abs_f(to_float(log_quadratic(x, D, 48)) - ref) < ldexp(Float(1), -48));
    }
}

TEST_CASE("quadratic backend access model") {
    QuadraticInfra q(13);
    const Element o = q.origin();
    CHECK(q.format(o) == "(3,1)");
    CHECK(q.parse_element("(3,4)") == q.bs(o));
    CHECK_THROWS_AS(q.parse_element("(5,1)"), MalformedElement);
    const auto& p = q.params();
    CHECK(p.d_min_lower > ScaledReal());
    CHECK(p.R_upper >= ScaledReal::from_double(q.cycle_info().circumference));
    Element x = o;
    for (int i = 0; i < 5; ++i) {
        CHECK(q.bs_inv(q.bs(x)) == x);
        ScaledReal d = q.delta_bs_approx(x, 40);
        CHECK(d >= p.d_min_lower);
        CHECK(d <= p.d_max_upper);
        x = q.bs(x);
    }
    CHECK(x == o);
    CHECK_FALSE(q.exact_deltas());
    CHECK_THROWS(QuadraticInfra(49));
}

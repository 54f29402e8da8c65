#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "infra/analysis.hpp"
#include "infra/qsampler.hpp"

#include <cmath>
#include <complex>
#include <numeric>
#include <set>

using namespace infra;

namespace {

using cld = std::complex<long double>;
constexpr long double kTwoPi = 6.283185307179586476925286766559L;

// Direct O(q p) evaluation of |sum_j omega_q^{l idx_j}|^2 / (q p).
std::vector<long double> naive_1d(const std::vector<std::int64_t>& support, std::int64_t q) {
    std::vector<long double> out(static_cast<std::size_t>(q));
    for (std::int64_t l = 0; l < q; ++l) {
        cld acc = 0;
        for (std::int64_t s : support) {
            const long double ph = kTwoPi * static_cast<long double>((l * s) % q) / static_cast<long double>(q);
            acc += cld(std::cos(ph), std::sin(ph));
        }
        out[static_cast<std::size_t>(l)] = std::norm(acc) / static_cast<long double>(q * support.size());
    }
    return out;
}

std::vector<long double> naive_2d(const std::vector<std::pair<std::int64_t, std::int64_t>>& fiber, std::int64_t A,
                                  std::int64_t B, std::int64_t M) {
    std::vector<long double> out(static_cast<std::size_t>(A * B));
    for (std::int64_t h = 0; h < A; ++h)
        for (std::int64_t k = 0; k < B; ++k) {
            cld acc = 0;
            for (auto [a, b] : fiber) {
                const std::int64_t e = (a * h + M * b * k) % A;
                const long double ph = kTwoPi * static_cast<long double>(e) / static_cast<long double>(A);
                acc += cld(std::cos(ph), std::sin(ph));
            }
            out[static_cast<std::size_t>(h * B + k)] =
                std::norm(acc) / (static_cast<long double>(A * B) * static_cast<long double>(fiber.size()));
        }
    return out;
}

std::vector<std::int64_t> irrational_support(double k, double S, std::int64_t q) {
    std::vector<std::int64_t> s;
    for (std::int64_t t = 0;; ++t) {
        const auto v = static_cast<std::int64_t>(std::floor(k + t * S + 0.5));
        if (v >= q) break;
        s.push_back(v);
    }
    return s;
}

}  // namespace

TEST_CASE("1-D distribution matches a direct transform for arbitrary q") {
    Rng rng(3);
    for (std::int64_t q : {64, 97, 100, 243, 1000, 1024, 2310}) {
        for (int rep = 0; rep < 3; ++rep) {
            std::set<std::int64_t> sup;
            const auto p = 1 + uniform_below(rng, std::min<std::int64_t>(q, 40));
            while (static_cast<std::int64_t>(sup.size()) < p) sup.insert(uniform_below(rng, q));
            std::vector<std::int64_t> s(sup.begin(), sup.end());
            auto fast = fourier_distribution_1d(s, q);
            auto ref = naive_1d(s, q);
            REQUIRE(fast.size() == static_cast<std::size_t>(q));
            double total = std::accumulate(fast.begin(), fast.end(), 0.0);
            CHECK(std::abs(total - 1.0) < 1e-9);
            for (std::size_t l = 0; l < fast.size(); ++l) {
                if (ref[l] < 1e-15) continue;
                REQUIRE(std::abs(fast[l] - static_cast<double>(ref[l])) <= 1e-12 * std::max(1.0L, ref[l]) + 1e-15);
            }
        }
    }
}

TEST_CASE("exact period concentrates on multiples of q/S") {
    const std::int64_t q = 144, S = 12;
    for (std::int64_t k = 0; k < S; k += 5) {
        std::vector<std::int64_t> s;
        for (std::int64_t v = k; v < q; v += S) s.push_back(v);
        auto d = fourier_distribution_1d(s, q);
        for (std::int64_t l = 0; l < q; ++l) {
            if (l % (q / S) == 0)
                CHECK(d[static_cast<std::size_t>(l)] == doctest::Approx(1.0 / S).epsilon(1e-12));
            else
                CHECK(d[static_cast<std::size_t>(l)] == 0.0);
        }
    }
}

TEST_CASE("peak mass bound for an irrational period") {
    const double S = 70.37;
    const std::int64_t q = 8192;
    const double floor_bound = (1.0 / S - 2.0 / q) * std::pow(sinc(0.5 + 0.5 / S) - 2 * std::sin(M_PI / 32), 2);
    for (double k : {0.0, 13.4, 55.9}) {
        auto s = irrational_support(k, S, q);
        auto d = fourier_distribution_1d(s, q);
        for (int m = 1; m < static_cast<int>(S / 32); ++m) {
            const auto l = static_cast<std::size_t>(std::floor(m * q / S + 0.5));
            CHECK(d[l] >= floor_bound);
        }
    }
}

TEST_CASE("clamping and inverse-CDF sampling") {
    std::vector<double> p{0.5, 1e-17, 0.25, 0.25};
    clamp_and_normalize(p);
    CHECK(p[1] == 0.0);
    CHECK(p[0] == doctest::Approx(0.5));
    Rng rng(1);
    std::vector<int> hits(4);
    for (int i = 0; i < 40000; ++i) ++hits[static_cast<std::size_t>(sample_index(p, rng))];
    CHECK(hits[1] == 0);
    CHECK(std::abs(hits[0] / 40000.0 - 0.5) < 0.02);
}

TEST_CASE("cyclic fibers are exactly periodic") {
    CyclicInfra c(12);
    CircleGroup G(c, 16);
    auto t = build_fibers_1d(G, 144, ShiftedGrid{1, 1, 0});
    CHECK(t.fibers.size() == 12);
    std::vector<bool> seen(144);
    for (const auto& f : t.fibers) {
        CHECK(f.size() == 12);
        for (auto i : f) {
            CHECK_FALSE(seen[static_cast<std::size_t>(i)]);
            seen[static_cast<std::size_t>(i)] = true;
        }
        CHECK(is_truly_periodic(f, ScaledReal(12), 144));
    }
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        auto st = measure_second_register(t, rng);
        CHECK(is_truly_periodic(st.support, ScaledReal(12), 144));
    }
}

TEST_CASE("synthetic fibers at N = 4 and q = 128") {
    SyntheticInfra s({ScaledReal::parse("3/5"), ScaledReal::parse("11/10"), ScaledReal::parse("4/5")});
    const std::int64_t N = 4, q = 128;
    const std::int64_t L = offset_L_circ(N, q, s.params(), 0.5);
    CircleGroup G(s, choose_precision(ScaledReal(q / N + 1), L, s.params()).m);
    auto t = build_fibers_1d(G, q, ShiftedGrid{N, L, 1});
    CHECK(t.fibers.size() <= 10 + 1 + 3);
    std::int64_t total = 0;
    for (const auto& f : t.fibers) {
        CHECK(f.size() >= 11);
        CHECK(f.size() <= 13);
        total += static_cast<std::int64_t>(f.size());
        // good fibers have spacings floor(S) or ceil(S)
        for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] - f[i - 1] == 10);
    }
    CHECK(total == q);
}

TEST_CASE("fiber sampling frequency is proportional to size") {
    FiberTable t = build_fibers(10, [](std::int64_t i) { return QValue{{i < 7 ? 0 : 1, 0}, 0}; });
    REQUIRE(t.fibers.size() == 2);
    Rng rng(2);
    int big = 0;
    for (int i = 0; i < 20000; ++i) big += measure_second_register(t, rng).support.size() == 7;
    CHECK(std::abs(big / 20000.0 - 0.7) < 0.02);
}

TEST_CASE("truly periodic check") {
    CHECK(is_truly_periodic({0, 8, 15, 23}, ScaledReal::parse("7.5"), 32));
    CHECK_FALSE(is_truly_periodic({0, 8, 17, 23}, ScaledReal::parse("7.5"), 32));
    CHECK_FALSE(is_truly_periodic({0, 8}, ScaledReal::parse("7.5"), 64));
}

TEST_CASE("2-D distribution matches a direct transform") {
    Rng rng(4);
    const std::int64_t M = 3, B = 5, A = M * B;
    for (int rep = 0; rep < 6; ++rep) {
        std::vector<std::pair<std::int64_t, std::int64_t>> fiber;
        for (std::int64_t a = 0; a < A; ++a)
            if (uniform_below(rng, 2)) fiber.push_back({a, uniform_below(rng, B - 1)});
        if (rep == 5) fiber.push_back({fiber.front().first, (fiber.front().second + 1) % (B - 1)});
        if (fiber.empty()) continue;
        auto fast = fourier_distribution_2d(fiber, A, B, M);
        auto ref = naive_2d(fiber, A, B, M);
        double tot = 0;
        for (std::size_t i = 0; i < fast.size(); ++i) {
            tot += fast[i];
            if (ref[i] > 1e-15) REQUIRE(std::abs(fast[i] - static_cast<double>(ref[i])) < 1e-12);
        }
        CHECK(std::abs(tot - 1) < 1e-9);
        if (rep == 5) continue;
        for (std::int64_t k = 0; k < B; ++k) {
            double marg = 0;
            for (std::int64_t h = 0; h < A; ++h) marg += fast[static_cast<std::size_t>(h * B + k)];
            CHECK(marg == doctest::Approx(1.0 / B).epsilon(1e-9));
            auto cond = fourier_conditional_h(fiber, A, B, k);
            for (std::int64_t h = 0; h < A; ++h)
                CHECK(cond[static_cast<std::size_t>(h)] ==
                      doctest::Approx(fast[static_cast<std::size_t>(h * B + k)] / marg).epsilon(1e-9));
        }
    }
}

TEST_CASE("cyclic 2-D outcomes satisfy the exact lattice relation") {
    // x = g^5 in Z/12, N = 1: fiber of g_N(a, b) = 5a + b mod 12 at value 0.
    const std::int64_t M = 25, B = 12, A = M * B, dx = 5;
    std::vector<std::pair<std::int64_t, std::int64_t>> fiber;
    for (std::int64_t a = 0; a < A; ++a) {
        const std::int64_t b = ((-dx * a) % B + B) % B;
        if (b <= B - 2) fiber.push_back({a, b});
    }
    auto d = fourier_distribution_2d(fiber, A, B, M);
    double good = 0;
    for (std::int64_t h = 0; h < A; ++h)
        for (std::int64_t k = 0; k < B; ++k) {
            const double p = d[static_cast<std::size_t>(h * B + k)];
            if (((h - k * dx * M) % A + A) % A == 0) good += p;
        }
    CHECK(good > 0.5);
}

TEST_CASE("2-D sampling is reproducible and records its probability") {
    std::vector<std::pair<std::int64_t, std::int64_t>> fiber{{0, 1}, {2, 0}, {5, 3}, {7, 2}};
    const std::int64_t M = 2, B = 5, A = 10;
    auto full = fourier_distribution_2d(fiber, A, B, M);
    for (std::uint64_t seed = 1; seed < 30; ++seed) {
        Rng r1(seed), r2(seed);
        auto s1 = fourier_sample_2d(fiber, A, B, M, r1, kDefaultCellCap, seed);
        auto s2 = fourier_sample_2d(fiber, A, B, M, r2, kDefaultCellCap, seed);
        CHECK(s1.h == s2.h);
        CHECK(s1.k == s2.k);
        CHECK(s1.lineage == seed);
        CHECK(s1.probability == doctest::Approx(full[static_cast<std::size_t>(s1.h * B + s1.k)]).epsilon(1e-12));
        CHECK(s1.probability > 0);
    }
}

TEST_CASE("transform cap") {
    std::vector<std::pair<std::int64_t, std::int64_t>> fiber{{0, 0}};
    CHECK_THROWS_AS(fourier_distribution_2d(fiber, 4096, 4096, 1, 1 << 20), TransformTooLarge);
    CHECK_THROWS(fourier_distribution_2d(fiber, 10, 4, 2));
}

TEST_CASE("cached 1-D sampler") {
    PseudoPeriodicState st;
    st.q = 64;
    st.fiber_id = 3;
    st.support = {1, 9, 17, 25, 33};
    FourierSampler1D smp;
    auto d = smp.distribution(st);
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        auto s = smp.sample(st, rng, 77);
        CHECK(s.probability == doctest::Approx(d[static_cast<std::size_t>(s.h)]).epsilon(1e-12));
        CHECK(s.lineage == 77);
    }
}

// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "extremal/exactdist.hpp"
#include "extremal/gof.hpp"
#include "extremal/rng.hpp"

using namespace extremal;

namespace {
BigInt factorial(std::size_t n) {
    BigInt f = 1;
    for (std::size_t i = 2; i <= n; ++i) f *= i;
    return f;
}
} // namespace

TEST_CASE("mahonian counts, pinned") {
    CHECK(mahonian_counts(1) == std::vector<BigInt>{1});
    CHECK(mahonian_counts(3) == std::vector<BigInt>({1, 2, 2, 1}));
    const auto m4 = mahonian_counts(4);
    CHECK(m4 == std::vector<BigInt>({1, 3, 5, 6, 5, 3, 1}));
    CHECK(std::accumulate(m4.begin(), m4.end(), BigInt(0)) == 24);
}

TEST_CASE("mahonian counts sum to n! and are symmetric") {
    for (std::size_t n : {5, 10, 21, 40, 60}) {
        const auto counts = mahonian_counts(n);
        REQUIRE(counts.size() == n * (n - 1) / 2 + 1);
        BigInt sum = 0;
        for (const auto& c : counts) sum += c;
        CHECK(sum == factorial(n));
        for (std::size_t k = 0; k < counts.size(); ++k) {
            REQUIRE(counts[k] == counts[counts.size() - 1 - k]);
        }
    }
    CHECK_THROWS_AS(mahonian_counts(61), std::invalid_argument);
    // float mode covers larger n
    const auto mp = mahonian_probs(80);
    CHECK(mp.probs.size() == 80 * 79 / 2 + 1);
    const double total = std::accumulate(mp.probs.begin(), mp.probs.end(), 0.0);
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("kendall pmf at n = 3") {
    const auto pmf = kendall_pmf(3);
    REQUIRE(pmf.support.size() == 4);
    CHECK(pmf.support_exact[0] == Rational(-1));
    CHECK(pmf.support_exact[1] == Rational(-1, 3));
    CHECK(pmf.support_exact[2] == Rational(1, 3));
    CHECK(pmf.support_exact[3] == Rational(1));
    CHECK(pmf.counts == std::vector<BigInt>({1, 2, 2, 1}));
    CHECK_THAT(pmf.probs[0], Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-15));
    CHECK_THAT(pmf.probs[1], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("kendall pmf matches direct permutation enumeration for n = 2..8") {
    for (std::size_t n = 2; n <= 8; ++n) {
        const auto pmf = kendall_pmf(n);
        std::vector<std::int32_t> perm(n);
        std::iota(perm.begin(), perm.end(), 1);
        std::vector<BigInt> counts(n * (n - 1) / 2 + 1, 0);
        do {
            std::size_t inv = 0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (perm[i] > perm[j]) ++inv;
                }
            }
            counts[inv] += 1;
        } while (std::next_permutation(perm.begin(), perm.end()));
        // pmf support ascends in tau, i.e. descends in inversion count
        REQUIRE(pmf.counts.size() == counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k) {
            REQUIRE(pmf.counts[k] == counts[counts.size() - 1 - k]);
        }
    }
}

TEST_CASE("kendall pmf moments are exact") {
    for (std::size_t n = 2; n <= 30; ++n) {
        const auto pmf = kendall_pmf(n);
        CHECK(pmf.mean_exact() == 0);
        CHECK(pmf.variance_exact() == tau_variance_exact(n));
    }
}

TEST_CASE("inversion mgf") {
    SECTION("value 1 at t = 0") {
        for (std::size_t n : {1, 5, 20, 60}) CHECK(inversion_mgf(n, 0.0) == 1.0);
    }
    SECTION("matches pmf-side evaluation") {
        const auto counts = mahonian_counts(3);
        double pmf_side = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            pmf_side += static_cast<double>(counts[k]) * std::exp(0.1 * static_cast<double>(k));
        }
        pmf_side /= 6.0;
        CHECK_THAT(inversion_mgf(3, 0.1), Catch::Matchers::WithinAbs(pmf_side, 1e-12));
    }
    SECTION("pmf/mgf agreement at random t, n <= 12") {
        RandomStream rng(55);
        for (std::size_t n = 2; n <= 12; ++n) {
            const auto counts = mahonian_counts(n);
            const double fact = static_cast<double>(factorial(n));
            for (int k = 0; k < 20; ++k) {
                const double t = rng.uniform(-0.2, 0.2);
                double pmf_side = 0.0;
                for (std::size_t i = 0; i < counts.size(); ++i) {
                    pmf_side +=
                        static_cast<double>(counts[i]) * std::exp(t * static_cast<double>(i));
                }
                pmf_side /= fact;
                REQUIRE_THAT(inversion_mgf(n, t),
                             Catch::Matchers::WithinRel(pmf_side, 1e-10));
            }
        }
    }
    SECTION("derivative at zero is the mean inversion count") {
        const double h = 1e-5;
        for (std::size_t n : {4, 9, 16}) {
            const double deriv = (inversion_mgf(n, h) - inversion_mgf(n, -h)) / (2.0 * h);
            const double mean = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 4.0;
            CHECK_THAT(deriv, Catch::Matchers::WithinRel(mean, 1e-4));
        }
    }
    SECTION("overflow is reported with a hint") {
        CHECK_THROWS_AS(inversion_mgf(60, 50.0), std::overflow_error);
        CHECK_THROWS_WITH(inversion_mgf(60, 50.0),
                          Catch::Matchers::ContainsSubstring("safe range"));
    }
}

TEST_CASE("exact spearman pmf") {
    const auto pmf = exact_rho_pmf(3);
    REQUIRE(pmf.support.size() == 4);
    CHECK(pmf.support_exact[0] == Rational(-1));
    CHECK(pmf.support_exact[1] == Rational(-1, 2));
    CHECK(pmf.support_exact[2] == Rational(1, 2));
    CHECK(pmf.support_exact[3] == Rational(1));
    CHECK(pmf.counts == std::vector<BigInt>({1, 2, 2, 1}));
    CHECK(pmf.variance_exact() == Rational(1, 2));
    for (std::size_t n = 2; n <= 8; ++n) CHECK(exact_rho_pmf(n).mean_exact() == 0);
    CHECK(exact_rho_pmf(8).variance_exact() == rho_variance_exact(8));
    CHECK_THROWS_AS(exact_rho_pmf(9), std::invalid_argument);
}

TEST_CASE("sampled kendall tau is consistent with the exact pmf") {
    const std::size_t n = 5, draws = 1000000;
    const auto pmf = kendall_pmf(n);
    std::vector<std::int64_t> hits(pmf.support.size(), 0);
    RandomStream rng(2718);
    std::vector<std::int32_t> perm(n);
    for (std::size_t d = 0; d < draws; ++d) {
        std::iota(perm.begin(), perm.end(), 1);
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = rng.next_u64() % (i + 1);
            std::swap(perm[i], perm[j]);
        }
        std::size_t inv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (perm[i] > perm[j]) ++inv;
            }
        }
        // ascending support indexes descending inversion count
        hits[pmf.support.size() - 1 - inv] += 1;
    }
    double chi2 = 0.0;
    for (std::size_t k = 0; k < hits.size(); ++k) {
        const double expected = pmf.probs[k] * static_cast<double>(draws);
        REQUIRE(expected >= 5.0);
        chi2 += (static_cast<double>(hits[k]) - expected) * (static_cast<double>(hits[k]) - expected) /
                expected;
    }
    const double p = special::chi_square_sf(chi2, static_cast<double>(hits.size() - 1));
    CHECK(p > 0.001);
}

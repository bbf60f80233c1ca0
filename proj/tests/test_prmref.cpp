// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "extremal/prmref.hpp"

using namespace extremal;

namespace {
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const std::size_t R = sample.size();
    double d = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::max((i + 1.0) / R - f, f - static_cast<double>(i) / R));
    }
    return d;
}
} // namespace

TEST_CASE("gamma points are strictly increasing with the right means") {
    for (std::uint64_t seed : {1ULL, 2ULL, 42ULL}) {
        const auto g = sample_gamma(10, seed);
        REQUIRE(g.gammas.size() == 10);
        REQUIRE(g.gammas[0] > 0.0);
        for (std::size_t i = 1; i < g.gammas.size(); ++i) {
            REQUIRE(g.gammas[i] > g.gammas[i - 1]);
        }
    }
    double m1 = 0.0, m3 = 0.0;
    const std::size_t R = 100000;
    for (std::size_t seed = 0; seed < R; ++seed) {
        const auto g = sample_gamma(3, seed);
        m1 += g.gammas[0];
        m3 += g.gammas[2];
    }
    CHECK_THAT(m1 / R, Catch::Matchers::WithinAbs(1.0, 0.02));
    CHECK_THAT(m3 / R, Catch::Matchers::WithinAbs(3.0, 0.04));
    CHECK_THROWS_AS(sample_gamma(0, 1), std::invalid_argument);
}

TEST_CASE("prm transforms, pinned") {
    GammaPoints g{{1.0, std::exp(1.0)}};
    const auto gum = prm_transform(g, LimitFamily::gumbel());
    CHECK_THAT(gum[0], Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(gum[1], Catch::Matchers::WithinAbs(-1.0, 1e-15));

    GammaPoints f{{0.5, 2.0}};
    const auto fre = prm_transform(f, LimitFamily::frechet(1.0));
    CHECK(fre == std::vector<double>{2.0, 0.5});

    GammaPoints w{{4.0}};
    const auto wei = prm_transform(w, LimitFamily::weibull(2.0));
    CHECK(wei == std::vector<double>{-2.0});

    // transforms are strictly decreasing
    const auto many = sample_gamma(50, 7);
    for (const auto fam :
         {LimitFamily::gumbel(), LimitFamily::frechet(1.7), LimitFamily::weibull(0.8)}) {
        const auto pts = prm_transform(many, fam);
        for (std::size_t i = 1; i < pts.size(); ++i) REQUIRE(pts[i] < pts[i - 1]);
    }
}

TEST_CASE("mean measure, pinned") {
    CHECK_THAT(mean_measure(LimitFamily::gumbel(), 0.0, 1e308),
               Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(mean_measure(LimitFamily::frechet(2.0), 1.0, 2.0),
               Catch::Matchers::WithinAbs(0.75, 1e-15));
    CHECK_THAT(mean_measure(LimitFamily::weibull(1.0), -3.0, -1.0),
               Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THROWS_AS(mean_measure(LimitFamily::gumbel(), 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mean_measure(LimitFamily::frechet(1.0), -1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(mean_measure(LimitFamily::weibull(1.0), -1.0, 2.0), std::invalid_argument);
}

TEST_CASE("limit cdf and order statistic cdfs") {
    const auto gum = LimitFamily::gumbel();
    CHECK_THAT(limit_cdf(gum, 0.0), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-15));
    CHECK_THAT(orderstat_k_cdf(gum, 1, 0.0), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-15));
    CHECK_THAT(orderstat_k_cdf(gum, 2, 0.0),
               Catch::Matchers::WithinAbs(2.0 * std::exp(-1.0), 1e-15));
    CHECK_THROWS_AS(orderstat_k_cdf(gum, 0, 0.0), std::invalid_argument);

    // nondecreasing in k at fixed x; valid cdf over a grid
    for (const auto fam :
         {LimitFamily::gumbel(), LimitFamily::frechet(1.3), LimitFamily::weibull(2.2)}) {
        for (double x : {-2.5, -1.0, -0.25, 0.3, 1.5, 4.0}) {
            double prev = 0.0;
            for (std::size_t k = 1; k <= 5; ++k) {
                const double c = orderstat_k_cdf(fam, k, x);
                REQUIRE(c >= prev);
                prev = c;
            }
        }
        double prev = -1.0;
        for (double x = -10.0; x <= 30.0; x += 0.05) {
            const double c = limit_cdf(fam, x);
            REQUIRE(c >= prev);
            REQUIRE((c >= 0.0 && c <= 1.0));
            prev = c;
        }
        CHECK(limit_cdf(fam, -1e300) == 0.0);
        CHECK_THAT(limit_cdf(fam, 1e300), Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("record time limit laws, pinned") {
    CHECK(record_last_cdf(1.0) == 1.0);
    CHECK(record_gap_cdf(1.0) == 1.0);
    CHECK_THAT(record_gap_cdf(0.5), Catch::Matchers::WithinAbs(0.5 * (1.0 + std::log(2.0)), 1e-12));
    CHECK_THAT(record_joint_cdf(0.8, 0.4),
               Catch::Matchers::WithinAbs(0.4 + 0.4 * std::log(2.0), 1e-12));
    // x <= y branch reduces to the marginal
    CHECK(record_joint_cdf(0.3, 0.7) == 0.3);
    CHECK_THROWS_AS(record_last_cdf(0.0), std::invalid_argument);
    CHECK_THROWS_AS(record_gap_cdf(1.5), std::invalid_argument);
    CHECK_THROWS_AS(record_joint_cdf(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("gap density integrates to one") {
    // integral of -log(x) over (0,1], via x = e^{-u}: integral of u e^{-u} on [0,inf)
    const std::size_t panels = 200000;
    const double hi = 45.0;
    const double h = hi / static_cast<double>(panels);
    auto f = [](double u) { return u * std::exp(-u); };
    double acc = f(0.0) + f(hi);
    for (std::size_t k = 1; k < panels; ++k) {
        acc += (k % 2 == 1 ? 4.0 : 2.0) * f(static_cast<double>(k) * h);
    }
    acc *= h / 3.0;
    CHECK_THAT(acc, Catch::Matchers::WithinAbs(1.0, 1e-8));
}

TEST_CASE("order statistic cdfs are self-consistent with sampled points") {
    const std::size_t R = 100000;
    for (const auto fam :
         {LimitFamily::gumbel(), LimitFamily::frechet(1.7), LimitFamily::weibull(2.0)}) {
        for (std::size_t k : {1, 2, 3}) {
            std::vector<double> kth(R);
            for (std::size_t seed = 0; seed < R; ++seed) {
                const auto g = sample_gamma(k, 1000000 + seed);
                kth[seed] = fam.transform_gamma(g.gammas[k - 1]);
            }
            const double d =
                ks_distance(kth, [&](double x) { return orderstat_k_cdf(fam, k, x); });
            INFO(fam.name() << " k=" << k);
            CHECK(d <= 0.01);
        }
    }
}

TEST_CASE("simulated record-time pairs follow the gap and joint laws") {
    const std::size_t R = 200000;
    std::vector<double> gaps(R), lasts(R);
    RandomStream rng(31337);
    for (std::size_t i = 0; i < R; ++i) {
        const auto draw = sample_record_limit(rng);
        gaps[i] = draw.last - draw.second_last;
        lasts[i] = draw.last;
    }
    CHECK(ks_distance(lasts, [](double x) {
              return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : record_last_cdf(x));
          }) <= 0.01);
    CHECK(ks_distance(gaps, [](double x) {
              return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : record_gap_cdf(x));
          }) <= 0.01);
}

TEST_CASE("mu inverse matches mu") {
    for (const auto fam :
         {LimitFamily::gumbel(), LimitFamily::frechet(0.9), LimitFamily::weibull(1.4)}) {
        for (double m : {0.1, 0.5, 1.0, 3.0}) {
            CHECK_THAT(fam.mu(fam.mu_inverse(m)), Catch::Matchers::WithinRel(m, 1e-12));
        }
    }
}

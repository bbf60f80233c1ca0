// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "extremal/rng.hpp"

namespace extremal {

namespace special {

// Regularized lower incomplete gamma P(a, x), by series for x < a+1 and by
// continued fraction otherwise.
inline double gammp(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammp: bad arguments");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    // Lentz continued fraction for Q(a,x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    const double q = std::exp(-x + a * std::log(x) - gln) * h;
    return 1.0 - q;
}

inline double chi_square_sf(double x, double df) { return 1.0 - gammp(df / 2.0, x / 2.0); }

// Survival function of the asymptotic Kolmogorov distribution,
//   Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
// truncated when a term drops below 1e-10; the dual theta series is used for
// small lambda where the alternating form converges slowly.
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.4) {
        // 1 - sqrt(2 pi)/lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
        const double f = 3.14159265358979323846 * 3.14159265358979323846 /
                         (8.0 * lambda * lambda);
        double sum = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double term = std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * f);
            sum += term;
            if (term < 1e-10) break;
        }
        return 1.0 - std::sqrt(2.0 * 3.14159265358979323846) / lambda * sum;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) *
                                     lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-10) break;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

} // namespace special

// Sorted sample with its size; the shared input shape of the tests below.
struct EcdfSummary {
    std::vector<double> sorted;
    std::size_t size() const noexcept { return sorted.size(); }

    static EcdfSummary from(std::vector<double> sample) {
        for (double v : sample) {
            if (std::isnan(v)) {
                throw std::invalid_argument("EcdfSummary: sample contains NaN");
            }
        }
        std::sort(sample.begin(), sample.end());
        return {std::move(sample)};
    }

    double operator()(double x) const {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
        return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }
};

struct TestReport {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t R = 0;
    std::string method;
    double alpha = 0.001;
    bool pass = true;
    std::map<std::string, double> extras;

    std::string to_kv() const {
        std::ostringstream os;
        os.precision(17);
        os << "method=" << method << "\n"
           << "statistic=" << statistic << "\n"
           << "p_value=" << p_value << "\n"
           << "R=" << R << "\n"
           << "alpha=" << alpha << "\n"
           << "pass=" << (pass ? 1 : 0) << "\n";
        for (const auto& [k, v] : extras) os << k << "=" << v << "\n";
        return os.str();
    }
};

// One-sample Kolmogorov-Smirnov test against a fully specified cdf. The
// p-value comes from the asymptotic Kolmogorov distribution, which is valid
// here precisely because no parameter was estimated from the sample.
inline TestReport ks_test(const std::vector<double>& sample,
                          const std::function<double(double)>& cdf, double alpha = 0.001) {
    if (sample.size() < 10) {
        throw std::invalid_argument("ks_test: need at least 10 observations, got " +
                                    std::to_string(sample.size()));
    }
    const EcdfSummary ecdf = EcdfSummary::from(sample);
    const std::size_t R = ecdf.size();
    double d = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        const double f = cdf(ecdf.sorted[i]);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(R) - f;
        const double lo = f - static_cast<double>(i) / static_cast<double>(R);
        d = std::max(d, std::max(hi, lo));
    }
    TestReport rep;
    rep.method = "ks_one_sample";
    rep.statistic = d;
    rep.R = R;
    rep.alpha = alpha;
    rep.p_value = special::kolmogorov_sf(std::sqrt(static_cast<double>(R)) * d);
    rep.pass = rep.p_value >= alpha;
    return rep;
}

// Chi-square goodness of fit of integer counts against Poisson(lambda) over
// the bins {0, 1, 2, >=3}, merged from the right until every expected count
// is at least 5. The dispersion index (variance/mean) is reported alongside.
inline TestReport poisson_count_test(const std::vector<std::int64_t>& counts, double lambda,
                                     double alpha = 0.001) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_count_test: lambda must be > 0");
    if (counts.size() < 200) {
        throw std::invalid_argument("poisson_count_test: need at least 200 counts, got " +
                                    std::to_string(counts.size()));
    }
    const std::size_t R = counts.size();
    std::vector<double> obs(4, 0.0);
    double mean = 0.0;
    for (auto c : counts) {
        if (c < 0) throw std::invalid_argument("poisson_count_test: negative count");
        obs[static_cast<std::size_t>(std::min<std::int64_t>(c, 3))] += 1.0;
        mean += static_cast<double>(c);
    }
    mean /= static_cast<double>(R);
    double var = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - mean;
        var += d * d;
    }
    var /= static_cast<double>(R);

    const double e0 = std::exp(-lambda);
    std::vector<double> expct = {e0 * static_cast<double>(R), e0 * lambda * static_cast<double>(R),
                                 e0 * lambda * lambda / 2.0 * static_cast<double>(R), 0.0};
    expct[3] = static_cast<double>(R) - expct[0] - expct[1] - expct[2];

    // merge bins from the right until all expected counts are >= 5
    while (expct.size() > 1) {
        std::size_t small = expct.size();
        for (std::size_t b = 0; b < expct.size(); ++b) {
            if (expct[b] < 5.0) {
                small = b;
                break;
            }
        }
        if (small == expct.size()) break;
        const std::size_t into = (small + 1 < expct.size()) ? small + 1 : small - 1;
        expct[into] += expct[small];
        obs[into] += obs[small];
        expct.erase(expct.begin() + static_cast<std::ptrdiff_t>(small));
        obs.erase(obs.begin() + static_cast<std::ptrdiff_t>(small));
    }

    double chi2 = 0.0;
    for (std::size_t b = 0; b < expct.size(); ++b) {
        const double d = obs[b] - expct[b];
        chi2 += d * d / expct[b];
    }
    TestReport rep;
    rep.method = "poisson_chi_square";
    rep.statistic = chi2;
    rep.R = R;
    rep.alpha = alpha;
    const double df = static_cast<double>(expct.size()) - 1.0;
    rep.p_value = df > 0.0 ? special::chi_square_sf(chi2, df) : 1.0;
    rep.pass = rep.p_value >= alpha;
    rep.extras["dispersion_index"] = mean > 0.0 ? var / mean : 0.0;
    rep.extras["mean_count"] = mean;
    rep.extras["df"] = df;
    return rep;
}

// Monte Carlo estimators of the limit conditions: the expected-count side
// scales a fresh-tuple exceedance fraction by C(p,m); the anti-clustering
// side scales a joint exceedance fraction of overlapping tuples by p^(2m-l).
// Each replication draws its own substream, so estimates are deterministic
// given seeds.

struct ConditionEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    double fraction = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t reps = 0;
};

// draw_value(rng) must return one transformed kernel value from m fresh vectors.
template <typename DrawValue>
ConditionEstimate estimate_A1(double c_p_m, DrawValue&& draw_value, double x, std::uint64_t reps,
                              std::uint64_t seed) {
    if (reps < 100) throw std::invalid_argument("estimate_A1: need reps >= 100");
    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        RandomStream rng = RandomStream::substream(seed, {0xA1, r});
        if (draw_value(rng) > x) ++hits;
    }
    const double f = static_cast<double>(hits) / static_cast<double>(reps);
    ConditionEstimate est;
    est.fraction = f;
    est.hits = hits;
    est.reps = reps;
    est.estimate = c_p_m * f;
    est.std_error = c_p_m * std::sqrt(f * (1.0 - f) / static_cast<double>(reps));
    return est;
}

struct A2Estimate {
    double scaled_joint = 0.0;     // p^(2m-l) * joint fraction
    double joint_fraction = 0.0;
    double marginal_fraction = 0.0;
    double independence_ratio = 0.0; // joint / marginal^2
    std::uint64_t joint_hits = 0;
    std::uint64_t marginal_hits = 0;
    std::uint64_t reps = 0;
};

// draw_pair(rng) must return the transformed values of two overlapping
// tuples built from 2m-l fresh vectors (sharing l of them). The marginal
// fraction pools both tuples of each draw.
template <typename DrawPair>
A2Estimate estimate_A2(double p, std::size_t m, std::size_t l, DrawPair&& draw_pair, double x,
                       std::uint64_t reps, std::uint64_t seed) {
    if (reps < 100) throw std::invalid_argument("estimate_A2: need reps >= 100");
    if (l < 1 || l >= m) throw std::invalid_argument("estimate_A2: need 1 <= l < m");
    std::uint64_t joint = 0, marg = 0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        RandomStream rng = RandomStream::substream(seed, {0xA2, r});
        const auto [v1, v2] = draw_pair(rng);
        const bool e1 = v1 > x, e2 = v2 > x;
        joint += (e1 && e2) ? 1 : 0;
        marg += (e1 ? 1 : 0) + (e2 ? 1 : 0);
    }
    A2Estimate est;
    est.reps = reps;
    est.joint_hits = joint;
    est.marginal_hits = marg;
    est.joint_fraction = static_cast<double>(joint) / static_cast<double>(reps);
    est.marginal_fraction = static_cast<double>(marg) / (2.0 * static_cast<double>(reps));
    est.scaled_joint = std::pow(p, static_cast<double>(2 * m - l)) * est.joint_fraction;
    est.independence_ratio =
        est.marginal_fraction > 0.0
            ? est.joint_fraction / (est.marginal_fraction * est.marginal_fraction)
            : 0.0;
    return est;
}

} // namespace extremal

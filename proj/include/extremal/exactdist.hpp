// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "extremal/kernels.hpp"
#include "extremal/scaling.hpp"

namespace extremal {

using BigInt = boost::multiprecision::cpp_int;

// Finite discrete distribution with ascending support. In exact mode the
// integer counts are kept alongside (they sum to n! for the permutation
// statistics) and the support values carry exact rational forms, so tests
// can avoid float-equality hazards.
struct ExactPmf {
    enum class Arithmetic { exact_integer_counts, normalized_float };

    std::vector<double> support;    // ascending
    std::vector<double> probs;      // positive, sums to 1
    std::vector<BigInt> counts;     // exact mode only
    std::vector<Rational> support_exact; // exact mode only
    Arithmetic arithmetic = Arithmetic::exact_integer_counts;

    double mean() const {
        double m = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) m += support[k] * probs[k];
        return m;
    }
    double variance() const {
        const double m = mean();
        double v = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) {
            v += (support[k] - m) * (support[k] - m) * probs[k];
        }
        return v;
    }
    Rational mean_exact() const {
        require_exact("mean_exact");
        Rational total = 0, m = 0;
        for (const auto& c : counts) total += c;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            m += support_exact[k] * Rational(counts[k]);
        }
        return m / total;
    }
    Rational variance_exact() const {
        require_exact("variance_exact");
        const Rational m = mean_exact();
        Rational total = 0, v = 0;
        for (const auto& c : counts) total += c;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            const Rational d = support_exact[k] - m;
            v += d * d * Rational(counts[k]);
        }
        return v / total;
    }

  private:
    void require_exact(const char* what) const {
        if (arithmetic != Arithmetic::exact_integer_counts) {
            throw std::logic_error(std::string(what) + ": pmf is not in exact-count mode");
        }
    }
};

// Number of permutations of n elements with exactly k inversions, for
// k = 0..n(n-1)/2, by iterated convolution with the length-j block of ones
// (the generating function is prod_j (1 + q + ... + q^{j-1})). Exact
// big-integer arithmetic for n <= 60; beyond that a normalized floating
// convolution over probabilities is used and the mode is recorded.
inline constexpr std::size_t kMahonianExactLimit = 60;

inline std::vector<BigInt> mahonian_counts(std::size_t n) {
    if (n < 1) throw std::invalid_argument("mahonian_counts: n must be >= 1");
    if (n > kMahonianExactLimit) {
        throw std::invalid_argument("mahonian_counts: exact mode capped at n <= " +
                                    std::to_string(kMahonianExactLimit) +
                                    "; use mahonian_probs for larger n");
    }
    std::vector<BigInt> counts{1};
    for (std::size_t j = 2; j <= n; ++j) {
        std::vector<BigInt> next(counts.size() + j - 1);
        // prefix-sum convolution with (1,...,1) of length j
        BigInt window = 0;
        for (std::size_t k = 0; k < next.size(); ++k) {
            if (k < counts.size()) window += counts[k];
            if (k >= j) window -= counts[k - j];
            next[k] = window;
        }
        counts.swap(next);
    }
    return counts;
}

// Floating-point inversion-count distribution for any n; probabilities of
// uniform blocks are convolved directly. Returns probabilities and an upper
// bound on the accumulated relative rounding error.
struct MahonianProbs {
    std::vector<double> probs;
    double rel_error_bound;
};

inline MahonianProbs mahonian_probs(std::size_t n) {
    if (n < 1) throw std::invalid_argument("mahonian_probs: n must be >= 1");
    std::vector<double> probs{1.0};
    double ops = 0.0;
    for (std::size_t j = 2; j <= n; ++j) {
        std::vector<double> next(probs.size() + j - 1, 0.0);
        const double w = 1.0 / static_cast<double>(j);
        double window = 0.0;
        for (std::size_t k = 0; k < next.size(); ++k) {
            if (k < probs.size()) window += probs[k];
            if (k >= j) window -= probs[k - j];
            next[k] = window * w;
            ops += 2.0;
        }
        probs.swap(next);
    }
    return {std::move(probs), ops * std::numeric_limits<double>::epsilon()};
}

// Null distribution of Kendall's tau: support 1 - 4k/(n(n-1)) with the
// Mahonian counts as weights.
inline ExactPmf kendall_pmf(std::size_t n) {
    if (n < 2) throw std::invalid_argument("kendall_pmf: n must be >= 2");
    ExactPmf pmf;
    const std::int64_t nn = static_cast<std::int64_t>(n);
    if (n <= kMahonianExactLimit) {
        auto counts = mahonian_counts(n);
        BigInt total = 0;
        for (const auto& c : counts) total += c;
        pmf.arithmetic = ExactPmf::Arithmetic::exact_integer_counts;
        // k inversions -> tau = 1 - 4k/(n(n-1)); ascending support means k descending
        for (std::size_t k = counts.size(); k-- > 0;) {
            const Rational tau(nn * (nn - 1) - 4 * static_cast<std::int64_t>(k),
                               nn * (nn - 1));
            pmf.support_exact.push_back(tau);
            pmf.support.push_back(static_cast<double>(tau));
            pmf.counts.push_back(counts[k]);
            pmf.probs.push_back(static_cast<double>(Rational(counts[k], total)));
        }
    } else {
        auto mp = mahonian_probs(n);
        pmf.arithmetic = ExactPmf::Arithmetic::normalized_float;
        for (std::size_t k = mp.probs.size(); k-- > 0;) {
            pmf.support.push_back(1.0 - 4.0 * static_cast<double>(k) /
                                            static_cast<double>(nn * (nn - 1)));
            pmf.probs.push_back(mp.probs[k]);
        }
    }
    return pmf;
}

// Moment generating function of the inversion count,
//   E e^{tI_n} = prod_{j=1}^{n} (1 - e^{jt}) / (j (1 - e^t)),
// evaluated in log space. The removable singularity at t = 0 is handled by a
// quadratic expansion below |t| < 1e-6.
inline double inversion_mgf(std::size_t n, double t) {
    if (n < 1) throw std::invalid_argument("inversion_mgf: n must be >= 1");
    const double nd = static_cast<double>(n);
    if (std::abs(t) < 1e-6) {
        // E I = n(n-1)/4, Var I = n(n-1)(2n+5)/72
        const double mu = nd * (nd - 1.0) / 4.0;
        const double var = nd * (nd - 1.0) * (2.0 * nd + 5.0) / 72.0;
        return 1.0 + t * mu + 0.5 * t * t * (var + mu * mu);
    }
    // log|1 - e^{x}|: for x > 0 this is x + log(1 - e^{-x})
    const auto log_abs_one_minus_exp = [](double x) {
        if (x > 0.0) return x + std::log1p(-std::exp(-x));
        return std::log1p(-std::exp(x));
    };
    double log_mgf = 0.0;
    const double denom = log_abs_one_minus_exp(t);
    for (std::size_t j = 1; j <= n; ++j) {
        log_mgf += log_abs_one_minus_exp(t * static_cast<double>(j)) -
                   std::log(static_cast<double>(j)) - denom;
    }
    if (log_mgf > 700.0) {
        const double tmax = 700.0 * 2.0 / (nd * (nd - 1.0) / 2.0); // crude inverse of t*K
        throw std::overflow_error("inversion_mgf: overflow at n=" + std::to_string(n) +
                                  ", t=" + std::to_string(t) + "; safe range is roughly |t| < " +
                                  std::to_string(tmax));
    }
    return std::exp(log_mgf);
}

// Exact null distribution of Spearman's rho by full enumeration of the n!
// relative-rank permutations. Factorial cost; capped at n <= 8.
inline ExactPmf exact_rho_pmf(std::size_t n) {
    if (n < 2) throw std::invalid_argument("exact_rho_pmf: n must be >= 2");
    if (n > 8) throw std::invalid_argument("exact_rho_pmf: enumeration capped at n <= 8");
    const std::int64_t nn = static_cast<std::int64_t>(n);
    // rho = (12 S - 3 n (n+1)^2) / (n (n^2-1)) with S = sum t * perm[t]
    std::map<std::int64_t, BigInt> counts_by_s;
    std::vector<std::int32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 1);
    do {
        std::int64_t s = 0;
        for (std::size_t t = 0; t < n; ++t) {
            s += static_cast<std::int64_t>(t + 1) * perm[t];
        }
        counts_by_s[s] += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));

    ExactPmf pmf;
    pmf.arithmetic = ExactPmf::Arithmetic::exact_integer_counts;
    BigInt total = 0;
    for (const auto& [s, c] : counts_by_s) total += c;
    for (const auto& [s, c] : counts_by_s) {
        const Rational rho(12 * s - 3 * nn * (nn + 1) * (nn + 1), nn * (nn * nn - 1));
        pmf.support_exact.push_back(rho);
        pmf.support.push_back(static_cast<double>(rho));
        pmf.counts.push_back(c);
        pmf.probs.push_back(static_cast<double>(Rational(c, total)));
    }
    return pmf;
}

} // namespace extremal

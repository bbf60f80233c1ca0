// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "extremal/matrix.hpp"

namespace extremal {

using RankVector = std::vector<std::int32_t>;    // permutation of 1..n
using RelativeRanks = std::vector<std::int32_t>; // permutation of 1..n

// Q_t = #{s : row_s <= row_t}. Ties are a hard error: the null distributions
// assume continuous data, and silently midranking would invalidate them.
inline RankVector ranks(std::span<const double> row) {
    const std::size_t n = row.size();
    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::int32_t a, std::int32_t b) { return row[a] < row[b]; });
    for (std::size_t r = 0; r + 1 < n; ++r) {
        if (row[order[r]] == row[order[r + 1]]) {
            throw std::invalid_argument("ranks: tied values at positions " +
                                        std::to_string(order[r]) + " and " +
                                        std::to_string(order[r + 1]) + " (value " +
                                        std::to_string(row[order[r]]) + ")");
        }
    }
    RankVector q(n);
    for (std::size_t r = 0; r < n; ++r) q[order[r]] = static_cast<std::int32_t>(r + 1);
    return q;
}

// R^(t) = Q_j at the sample position where Q_i equals t.
inline RelativeRanks relative_ranks(const RankVector& qi, const RankVector& qj) {
    if (qi.size() != qj.size()) {
        throw std::invalid_argument("relative_ranks: length mismatch (" +
                                    std::to_string(qi.size()) + " vs " +
                                    std::to_string(qj.size()) + ")");
    }
    const std::size_t n = qi.size();
    RelativeRanks r(n);
    for (std::size_t s = 0; s < n; ++s) r[qi[s] - 1] = qj[s];
    return r;
}

struct InversionScratch {
    std::vector<std::int32_t> a, b;
};

// Inversions of a permutation by bottom-up merge counting, O(n log n).
inline std::uint64_t count_inversions(std::span<const std::int32_t> perm, InversionScratch& s) {
    const std::size_t n = perm.size();
    s.a.assign(perm.begin(), perm.end());
    s.b.resize(n);
    std::uint64_t inv = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (s.a[i] <= s.a[j]) {
                    s.b[k++] = s.a[i++];
                } else {
                    inv += mid - i;
                    s.b[k++] = s.a[j++];
                }
            }
            while (i < mid) s.b[k++] = s.a[i++];
            while (j < hi) s.b[k++] = s.a[j++];
            std::copy(s.b.begin() + static_cast<std::ptrdiff_t>(lo),
                      s.b.begin() + static_cast<std::ptrdiff_t>(hi),
                      s.a.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    }
    return inv;
}

inline std::uint64_t count_inversions(std::span<const std::int32_t> perm) {
    InversionScratch s;
    return count_inversions(perm, s);
}

inline int sign_of(double x) noexcept { return (x > 0) - (x < 0); }

// ---- Kendall's tau ---------------------------------------------------------

// Integer core of the fast path: inversions of the relative-rank permutation.
inline std::uint64_t kendall_inversions(const RankVector& qi, const RankVector& qj,
                                        InversionScratch& s) {
    const RelativeRanks r = relative_ranks(qi, qj);
    return count_inversions(r, s);
}

inline double kendall_from_ranks(const RankVector& qi, const RankVector& qj,
                                 InversionScratch& s) {
    const std::size_t n = qi.size();
    const double denom = static_cast<double>(n) * static_cast<double>(n - 1);
    return 1.0 - 4.0 * static_cast<double>(kendall_inversions(qi, qj, s)) / denom;
}

// tau = 1 - 4 I / (n(n-1)), with I the inversion count of the relative ranks.
inline double kendall_tau(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) throw std::invalid_argument("kendall_tau: length mismatch");
    if (xi.size() < 2) throw std::invalid_argument("kendall_tau: need n >= 2");
    InversionScratch s;
    return kendall_from_ranks(ranks(xi), ranks(xj), s);
}

// Integer core of the reference path: the sign-pair sum over all t1 < t2.
inline std::int64_t kendall_signpair_sum(std::span<const double> xi,
                                         std::span<const double> xj) {
    const std::size_t n = xi.size();
    std::int64_t total = 0;
    for (std::size_t t1 = 0; t1 < n; ++t1) {
        for (std::size_t t2 = t1 + 1; t2 < n; ++t2) {
            total += sign_of(xi[t1] - xi[t2]) * sign_of(xj[t1] - xj[t2]);
        }
    }
    return total;
}

// O(n^2) sign-pair form; agrees with kendall_tau exactly on tie-free data.
inline double kendall_tau_reference(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) throw std::invalid_argument("kendall_tau: length mismatch");
    if (xi.size() < 2) throw std::invalid_argument("kendall_tau: need n >= 2");
    const std::size_t n = xi.size();
    const double denom = static_cast<double>(n) * static_cast<double>(n - 1);
    return 2.0 * static_cast<double>(kendall_signpair_sum(xi, xj)) / denom;
}

// ---- Spearman's rho --------------------------------------------------------

// rho = (12 * sum Q_i Q_j - 3 n (n+1)^2) / (n (n^2 - 1)), the centered-rank
// correlation in exact integer form.
inline double spearman_from_ranks(const RankVector& qi, const RankVector& qj) {
    const std::size_t n = qi.size();
    std::int64_t dot = 0;
    for (std::size_t t = 0; t < n; ++t) {
        dot += static_cast<std::int64_t>(qi[t]) * static_cast<std::int64_t>(qj[t]);
    }
    const auto nn = static_cast<std::int64_t>(n);
    const std::int64_t num = 12 * dot - 3 * nn * (nn + 1) * (nn + 1);
    const std::int64_t den = nn * (nn * nn - 1);
    return static_cast<double>(num) / static_cast<double>(den);
}

inline double spearman_rho(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) throw std::invalid_argument("spearman_rho: length mismatch");
    if (xi.size() < 2) throw std::invalid_argument("spearman_rho: need n >= 2");
    return spearman_from_ranks(ranks(xi), ranks(xj));
}

// Relative-rank form 12/(n(n^2-1)) sum_k (k - (n+1)/2)(R^(k) - (n+1)/2),
// evaluated literally; kept as a cross-check of the production path.
inline double spearman_rho_reference(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) throw std::invalid_argument("spearman_rho: length mismatch");
    if (xi.size() < 2) throw std::invalid_argument("spearman_rho: need n >= 2");
    const std::size_t n = xi.size();
    const RelativeRanks r = relative_ranks(ranks(xi), ranks(xj));
    const double q = (static_cast<double>(n) + 1.0) / 2.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += (static_cast<double>(k + 1) - q) * (static_cast<double>(r[k]) - q);
    }
    const double nd = static_cast<double>(n);
    return 12.0 * acc / (nd * (nd * nd - 1.0));
}

// ---- Major part of Spearman's rho ------------------------------------------

// Production path, rearranged from rho = ((n-2) r + 3 tau) / (n+1):
//   r = ((n+1) rho - 3 tau) / (n-2).
inline double r_major(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) throw std::invalid_argument("r_major: length mismatch");
    const std::size_t n = xi.size();
    if (n < 3) throw std::invalid_argument("r_major: need n >= 3");
    const RankVector qi = ranks(xi), qj = ranks(xj);
    InversionScratch s;
    const double rho = spearman_from_ranks(qi, qj);
    const double tau = kendall_from_ranks(qi, qj, s);
    const double nd = static_cast<double>(n);
    return ((nd + 1.0) * rho - 3.0 * tau) / (nd - 2.0);
}

// Literal triple sum 3/(n(n-1)(n-2)) sum over pairwise-distinct (t1,t2,t3)
// of sign(x_i[t1]-x_i[t2]) sign(x_j[t1]-x_j[t3]). Cubic; test oracle only.
inline double r_major_reference(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) throw std::invalid_argument("r_major: length mismatch");
    const std::size_t n = xi.size();
    if (n < 3) throw std::invalid_argument("r_major: need n >= 3");
    if (n > 40) throw std::invalid_argument("r_major_reference: cubic oracle capped at n <= 40");
    std::int64_t total = 0;
    for (std::size_t t1 = 0; t1 < n; ++t1) {
        for (std::size_t t2 = 0; t2 < n; ++t2) {
            if (t2 == t1) continue;
            const int si = sign_of(xi[t1] - xi[t2]);
            for (std::size_t t3 = 0; t3 < n; ++t3) {
                if (t3 == t1 || t3 == t2) continue;
                total += si * sign_of(xj[t1] - xj[t3]);
            }
        }
    }
    const double nd = static_cast<double>(n);
    return 3.0 * static_cast<double>(total) / (nd * (nd - 1.0) * (nd - 2.0));
}

// ---- Simple linear rank statistics -----------------------------------------

struct LipschitzReport {
    double max_slope = 0.0;
    double bound = 0.0;
    bool within_bound = true;
};

// Score/regression pair defining V = sum_t c_nt g(R^(t)/(n+1)) with
// c_nt = f(t/(n+1))/n.
struct ScoreSpec {
    std::function<double(double)> score;      // g on (0,1)
    std::function<double(double)> regression; // f on (0,1)

    double c(std::size_t t, std::size_t n) const {
        return regression(static_cast<double>(t) / (static_cast<double>(n) + 1.0)) /
               static_cast<double>(n);
    }

    // Finite-difference slope bound over a grid; advisory, not enforced.
    static LipschitzReport check_lipschitz(const std::function<double(double)>& fn,
                                           std::size_t grid_points = 1000,
                                           double bound = 100.0) {
        LipschitzReport rep;
        rep.bound = bound;
        double prev_u = 1.0 / (static_cast<double>(grid_points) + 1.0);
        double prev_v = fn(prev_u);
        for (std::size_t k = 2; k <= grid_points; ++k) {
            const double u = static_cast<double>(k) / (static_cast<double>(grid_points) + 1.0);
            const double v = fn(u);
            rep.max_slope = std::max(rep.max_slope, std::abs(v - prev_v) / (u - prev_u));
            prev_u = u;
            prev_v = v;
        }
        rep.within_bound = rep.max_slope <= bound;
        return rep;
    }
};

namespace detail {
inline void check_regression_nondegenerate(const ScoreSpec& spec, std::size_t n) {
    double mean = 0.0;
    for (std::size_t t = 1; t <= n; ++t) mean += spec.c(t, n);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        const double d = spec.c(t, n) - mean;
        ss += d * d;
    }
    if (!(ss > 0.0)) {
        throw std::invalid_argument("simple linear rank statistic: regression constants are "
                                    "degenerate (zero variance)");
    }
}
} // namespace detail

inline double simple_linear_rank_from_ranks(const RankVector& qi, const RankVector& qj,
                                            const ScoreSpec& spec) {
    const std::size_t n = qi.size();
    const RelativeRanks r = relative_ranks(qi, qj);
    double v = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        v += spec.c(t, n) * spec.score(static_cast<double>(r[t - 1]) /
                                       (static_cast<double>(n) + 1.0));
    }
    return v;
}

inline double simple_linear_rank(std::span<const double> xi, std::span<const double> xj,
                                 const ScoreSpec& spec) {
    if (xi.size() != xj.size()) {
        throw std::invalid_argument("simple_linear_rank: length mismatch");
    }
    if (xi.size() < 2) throw std::invalid_argument("simple_linear_rank: need n >= 2");
    detail::check_regression_nondegenerate(spec, xi.size());
    return simple_linear_rank_from_ranks(ranks(xi), ranks(xj), spec);
}

struct Standardization {
    double mu;
    double sigma;
};

// Exact finite-n null mean and standard deviation:
//   E V   = gbar * sum_t c_nt,
//   Var V = 1/(n-1) * sum_t (g(t/(n+1)) - gbar)^2 * sum_s (c_ns - cbar)^2.
inline Standardization standardize_simple_linear(const ScoreSpec& spec, std::size_t n) {
    if (n < 2) throw std::invalid_argument("standardize_simple_linear: need n >= 2");
    std::vector<double> g(n), c(n);
    for (std::size_t t = 1; t <= n; ++t) {
        g[t - 1] = spec.score(static_cast<double>(t) / (static_cast<double>(n) + 1.0));
        c[t - 1] = spec.c(t, n);
    }
    const double gbar = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
    const double csum = std::accumulate(c.begin(), c.end(), 0.0);
    const double cbar = csum / static_cast<double>(n);
    double gss = 0.0, css = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        gss += (g[t] - gbar) * (g[t] - gbar);
        css += (c[t] - cbar) * (c[t] - cbar);
    }
    const double var = gss * css / (static_cast<double>(n) - 1.0);
    if (!(var > 0.0)) {
        throw std::invalid_argument("standardize_simple_linear: the statistic is degenerate "
                                    "(sigma_V = 0)");
    }
    return {gbar * csum, std::sqrt(var)};
}

// ---- Interpoint distance ---------------------------------------------------

inline double interpoint_distance(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) {
        throw std::invalid_argument("interpoint_distance: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < xi.size(); ++t) {
        const double d = xi[t] - xj[t];
        acc += d * d;
    }
    return acc;
}

// ---- Sample covariance entries ---------------------------------------------

struct CovEntryStats {
    double sigma_hat; // empirical covariance of rows i and j
    double theta_hat; // empirical variance of the centered products
    double m_stat;    // |sigma_hat - sigma_true| / sqrt(theta_hat)
    double w_stat;    // (n m^2 - 4 log p + log log p + log 8 pi) / 2
};

inline CovEntryStats cov_entries(const SampleMatrix& m, std::size_t i, std::size_t j,
                                 double sigma_true) {
    if (!(i < j) || j >= m.rows()) {
        throw std::invalid_argument("cov_entries: need i < j < p");
    }
    const std::size_t n = m.cols();
    if (n < 2) throw std::invalid_argument("cov_entries: need n >= 2");
    const auto xi = m.row(i), xj = m.row(j);
    double mi = 0.0, mj = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mi += xi[k];
        mj += xj[k];
    }
    mi /= static_cast<double>(n);
    mj /= static_cast<double>(n);
    double sig = 0.0;
    for (std::size_t k = 0; k < n; ++k) sig += (xi[k] - mi) * (xj[k] - mj);
    sig /= static_cast<double>(n);
    double theta = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = (xi[k] - mi) * (xj[k] - mj) - sig;
        theta += d * d;
    }
    theta /= static_cast<double>(n);
    if (!(theta > 0.0)) {
        throw std::domain_error("cov_entries: theta_hat <= 0 (constant products)");
    }
    const double mstat = std::abs(sig - sigma_true) / std::sqrt(theta);
    const double p = static_cast<double>(m.rows());
    const double w = 0.5 * (static_cast<double>(n) * mstat * mstat - 4.0 * std::log(p) +
                            std::log(std::log(p)) + std::log(8.0 * 3.14159265358979323846));
    return {sig, theta, mstat, w};
}

} // namespace extremal

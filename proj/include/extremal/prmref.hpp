// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "extremal/rng.hpp"

namespace extremal {

// One of the three extreme value limit families. The mean measure mu sends a
// level x to the expected number of limit points above x.
struct LimitFamily {
    enum class Kind { frechet, weibull, gumbel };

    Kind kind = Kind::gumbel;
    double alpha = 0.0;

    static LimitFamily frechet(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("frechet: alpha must be > 0");
        return {Kind::frechet, alpha};
    }
    static LimitFamily weibull(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("weibull: alpha must be > 0");
        return {Kind::weibull, alpha};
    }
    static LimitFamily gumbel() { return {Kind::gumbel, 0.0}; }

    const char* name() const {
        switch (kind) {
        case Kind::frechet: return "frechet";
        case Kind::weibull: return "weibull";
        case Kind::gumbel: return "gumbel";
        }
        return "?";
    }

    // mu(x) = expected number of points in (x, sup); with the conventions
    // mu = infinity below the support and 0 above it.
    double mu(double x) const {
        switch (kind) {
        case Kind::frechet:
            if (x <= 0.0) return std::numeric_limits<double>::infinity();
            return std::pow(x, -alpha);
        case Kind::weibull:
            if (x >= 0.0) return 0.0;
            return std::pow(-x, alpha);
        case Kind::gumbel: return std::exp(-x);
        }
        return 0.0;
    }

    bool in_support(double x) const {
        switch (kind) {
        case Kind::frechet: return x > 0.0;
        case Kind::weibull: return x < 0.0;
        case Kind::gumbel: return true;
        }
        return false;
    }

    // inverse of mu: the level below which the expected point count exceeds m
    double mu_inverse(double m) const {
        if (!(m > 0.0)) throw std::invalid_argument("mu_inverse: need m > 0");
        switch (kind) {
        case Kind::frechet: return std::pow(m, -1.0 / alpha);
        case Kind::weibull: return -std::pow(m, 1.0 / alpha);
        case Kind::gumbel: return -std::log(m);
        }
        return 0.0;
    }

    double transform_gamma(double gamma) const {
        switch (kind) {
        case Kind::frechet: return std::pow(gamma, -1.0 / alpha);
        case Kind::weibull: return -std::pow(gamma, 1.0 / alpha);
        case Kind::gumbel: return -std::log(gamma);
        }
        return 0.0;
    }
};

// Arrival points of a unit-rate homogeneous Poisson process: partial sums of
// iid standard exponentials, strictly increasing.
struct GammaPoints {
    std::vector<double> gammas;
};

inline GammaPoints sample_gamma(std::size_t k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("sample_gamma: k must be >= 1");
    GammaPoints g;
    g.gammas.resize(k);
    RandomStream rng(seed);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc += rng.exponential();
        g.gammas[i] = acc;
    }
    return g;
}

// Family transform applied pointwise; output is strictly decreasing.
inline std::vector<double> prm_transform(const GammaPoints& g, const LimitFamily& fam) {
    std::vector<double> out;
    out.reserve(g.gammas.size());
    for (double gamma : g.gammas) out.push_back(fam.transform_gamma(gamma));
    return out;
}

// mu(r) - mu(s) for r < s inside the family's support.
inline double mean_measure(const LimitFamily& fam, double r, double s) {
    if (!(r < s)) throw std::invalid_argument("mean_measure: need r < s");
    if (!fam.in_support(r) || !fam.in_support(s)) {
        throw std::invalid_argument(std::string("mean_measure: interval endpoints outside the ") +
                                    fam.name() + " support");
    }
    return fam.mu(r) - fam.mu(s);
}

// Limit law of the maximum: exp(-mu(x)), with mu(x) = infinity below the
// support (cdf 0) and 0 above it (cdf 1).
inline double limit_cdf(const LimitFamily& fam, double x) {
    const double m = fam.mu(x);
    if (std::isinf(m)) return 0.0;
    return std::exp(-m);
}

// P(k-th largest point <= x) = P(Poisson(mu(x)) <= k-1).
inline double orderstat_k_cdf(const LimitFamily& fam, std::size_t k, double x) {
    if (k < 1) throw std::invalid_argument("orderstat_k_cdf: k must be >= 1");
    const double m = fam.mu(x);
    if (std::isinf(m)) return 0.0;
    double term = std::exp(-m);
    double acc = term;
    for (std::size_t j = 1; j < k; ++j) {
        term *= m / static_cast<double>(j);
        acc += term;
    }
    return acc;
}

// Limit laws for record times on (0,1], driven by the Poisson process of
// jump times with mean measure log(b/a) on (a,b].

inline void check_unit_interval(double x, const char* what) {
    if (!(x > 0.0) || x > 1.0) {
        throw std::invalid_argument(std::string(what) + ": argument must lie in (0,1], got " +
                                    std::to_string(x));
    }
}

// P(last record time <= x) = x
inline double record_last_cdf(double x) {
    check_unit_interval(x, "record_last_cdf");
    return x;
}

// P(last <= x, second last <= y); reduces to min(x,y) when x <= y
inline double record_joint_cdf(double x, double y) {
    check_unit_interval(x, "record_joint_cdf");
    check_unit_interval(y, "record_joint_cdf");
    if (x <= y) return x;
    return y + y * std::log(x / y);
}

// P(last - second_last <= x) = x (1 - log x)
inline double record_gap_cdf(double x) {
    check_unit_interval(x, "record_gap_cdf");
    return x * (1.0 - std::log(x));
}

// Simulates the pair (last, second last) of the limiting record-time process:
// the jump-time process maps to a unit-rate Poisson process under t -> -log t,
// so the two largest jump times are (e^{-Gamma_1}, e^{-Gamma_2}).
struct RecordLimitDraw {
    double last;
    double second_last;
};

inline RecordLimitDraw sample_record_limit(RandomStream& rng) {
    const double g1 = rng.exponential();
    const double g2 = g1 + rng.exponential();
    return {std::exp(-g1), std::exp(-g2)};
}

} // namespace extremal

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "extremal/rng.hpp"

namespace extremal {

// Marginal distribution of a single data entry. All kinds except the
// smoothed Rademacher are continuous; the smoothed Rademacher adds
// continuous noise of scale epsilon to +-1 so that ranks are almost
// surely tie-free as well.
struct MarginalSpec {
    enum class Kind { standard_normal, uniform01, student_t, rademacher_smoothed };

    Kind kind = Kind::standard_normal;
    double param = 0.0; // df for student_t, epsilon for rademacher_smoothed

    static MarginalSpec standard_normal() { return {Kind::standard_normal, 0.0}; }
    static MarginalSpec uniform01() { return {Kind::uniform01, 0.0}; }
    static MarginalSpec student_t(double df) {
        if (!(df > 2.0)) {
            throw std::invalid_argument(
                "student_t marginal requires df > 2 (finite variance); got df=" +
                std::to_string(df));
        }
        return {Kind::student_t, df};
    }
    static MarginalSpec rademacher_smoothed(double eps) {
        if (!(eps > 0.0)) {
            throw std::invalid_argument("rademacher_smoothed requires epsilon > 0");
        }
        return {Kind::rademacher_smoothed, eps};
    }

    double sample(RandomStream& rng) const {
        switch (kind) {
        case Kind::standard_normal: return rng.normal();
        case Kind::uniform01: return rng.uniform01();
        case Kind::student_t: return rng.student_t(param);
        case Kind::rademacher_smoothed:
            return (rng.uniform01() < 0.5 ? -1.0 : 1.0) + param * (2.0 * rng.uniform01() - 1.0);
        }
        return 0.0; // unreachable
    }

    // zero-mean, unit-variance version; innovations of the linear models use this
    double standardized_sample(RandomStream& rng) const {
        switch (kind) {
        case Kind::standard_normal: return rng.normal();
        case Kind::uniform01:
            return (rng.uniform01() - 0.5) * 3.4641016151377543863532;  // sqrt(12)
        case Kind::student_t:
            return rng.student_t(param) * std::sqrt((param - 2.0) / param);
        case Kind::rademacher_smoothed: {
            const double v = (rng.uniform01() < 0.5 ? -1.0 : 1.0) +
                             param * (2.0 * rng.uniform01() - 1.0);
            return v / std::sqrt(1.0 + param * param / 3.0);
        }
        }
        return 0.0; // unreachable
    }

    const char* name() const {
        switch (kind) {
        case Kind::standard_normal: return "standard_normal";
        case Kind::uniform01: return "uniform01";
        case Kind::student_t: return "student_t";
        case Kind::rademacher_smoothed: return "rademacher_smoothed";
        }
        return "?";
    }
};

// p data series of length n, stored row-major: row i is the i-th series.
// Regeneration with the same (spec, p, n, seed) is bit-identical.
class SampleMatrix {
  public:
    SampleMatrix(std::size_t p, std::size_t n, std::uint64_t seed)
        : p_(p), n_(n), seed_(seed), data_(p * n) {
        if (p < 1 || n < 1) throw std::invalid_argument("SampleMatrix: dimensions must be positive");
    }

    std::size_t rows() const noexcept { return p_; }
    std::size_t cols() const noexcept { return n_; }
    std::uint64_t seed() const noexcept { return seed_; }

    double operator()(std::size_t i, std::size_t t) const noexcept { return data_[i * n_ + t]; }
    double& operator()(std::size_t i, std::size_t t) noexcept { return data_[i * n_ + t]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * n_, n_};
    }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * n_, n_}; }

    const std::vector<double>& data() const noexcept { return data_; }

  private:
    std::size_t p_, n_;
    std::uint64_t seed_;
    std::vector<double> data_;
};

// Linear model: either a coefficient filter (a_0,...,a_J) applied to a
// one-dimensional innovation stream, or a full symmetric p x p matrix A
// mapping an innovation row to a data column.
struct LinearModelSpec {
    std::vector<double> coeffs;              // filter form when non-empty
    std::vector<std::vector<double>> matrix; // matrix form when non-empty
    MarginalSpec innovation = MarginalSpec::standard_normal();

    static LinearModelSpec filter(std::vector<double> a, MarginalSpec innov) {
        if (a.empty()) throw std::invalid_argument("LinearModelSpec: empty coefficient vector");
        double ss = 0.0;
        for (double c : a) ss += c * c;
        if (!(ss > 0.0)) throw std::invalid_argument("LinearModelSpec: coefficients are all zero");
        LinearModelSpec m;
        m.coeffs = std::move(a);
        m.innovation = innov;
        return m;
    }

    static LinearModelSpec full_matrix(std::vector<std::vector<double>> a, MarginalSpec innov) {
        const std::size_t p = a.size();
        if (p == 0) throw std::invalid_argument("LinearModelSpec: empty matrix");
        for (const auto& r : a) {
            if (r.size() != p) throw std::invalid_argument("LinearModelSpec: matrix is not square");
        }
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                if (a[i][j] != a[j][i]) {
                    throw std::invalid_argument("LinearModelSpec: matrix is not symmetric");
                }
            }
        }
        LinearModelSpec m;
        m.matrix = std::move(a);
        m.innovation = innov;
        return m;
    }
};

} // namespace extremal

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "extremal/matrix.hpp"
#include "extremal/rng.hpp"

namespace extremal {

// Generators are stateless functions of (spec, dims, seed). Each row (or
// column, for the column-wise models) draws from its own derived substream,
// so results do not depend on evaluation order.

inline SampleMatrix gen_iid_matrix(const MarginalSpec& spec, std::size_t p, std::size_t n,
                                   std::uint64_t seed) {
    if (p < 2 || n < 2) throw std::invalid_argument("gen_iid_matrix: need p >= 2 and n >= 2");
    SampleMatrix m(p, n, seed);
    for (std::size_t i = 0; i < p; ++i) {
        RandomStream rng = RandomStream::substream(seed, {0x0107, i});
        auto row = m.row(i);
        for (std::size_t t = 0; t < n; ++t) row[t] = spec.sample(rng);
    }
    return m;
}

// Columns are independent copies of the stationary filtered series
//   X_i = sum_{j=0..J} a_j eps_{i-j},
// over a shared per-column innovation stream of length p+J. Entries are
// rescaled so each has unit variance. Innovations are standardized to
// mean zero and unit variance before filtering.
inline SampleMatrix gen_linear_process(const LinearModelSpec& model, std::size_t p, std::size_t n,
                                       std::uint64_t seed) {
    if (model.coeffs.empty()) {
        throw std::invalid_argument("gen_linear_process: model must be in coefficient form");
    }
    if (p < 2 || n < 2) throw std::invalid_argument("gen_linear_process: need p >= 2 and n >= 2");
    const auto& a = model.coeffs;
    const std::size_t J = a.size() - 1;
    double ss = 0.0;
    for (double c : a) ss += c * c;
    if (!(ss > 0.0)) throw std::invalid_argument("gen_linear_process: zero coefficient vector");
    const double scale = 1.0 / std::sqrt(ss);

    SampleMatrix m(p, n, seed);
    std::vector<double> eps(p + J);
    for (std::size_t c = 0; c < n; ++c) {
        RandomStream rng = RandomStream::substream(seed, {0x11F0, c});
        for (auto& e : eps) e = model.innovation.standardized_sample(rng);
        for (std::size_t i = 0; i < p; ++i) {
            double v = 0.0;
            // eps[i + J - j] holds innovation index i - j
            for (std::size_t j = 0; j <= J; ++j) v += a[j] * eps[i + J - j];
            m(i, c) = v * scale;
        }
    }
    return m;
}

// Result of row-normalizing the matrix model: the factors actually applied,
// reported rather than rejecting non-normalized input.
struct RowRescale {
    std::vector<double> factors; // multiplier applied to each row of A
    bool any_rescaled = false;
};

// Each column is an independent draw of A * eps, with eps a vector of p iid
// standardized innovations, so Cov(column) = A A^T with unit diagonal. Rows
// of A are forced to unit Euclidean norm before use; the applied rescale
// factors are returned through `rescale` when a non-null pointer is given.
inline SampleMatrix gen_matrix_model(const LinearModelSpec& model, std::size_t n,
                                     std::uint64_t seed, RowRescale* rescale = nullptr) {
    if (model.matrix.empty()) {
        throw std::invalid_argument("gen_matrix_model: model must be in matrix form");
    }
    const std::size_t p = model.matrix.size();
    if (p < 2 || n < 2) throw std::invalid_argument("gen_matrix_model: need p >= 2 and n >= 2");

    std::vector<std::vector<double>> A = model.matrix;
    RowRescale rr;
    rr.factors.assign(p, 1.0);
    for (std::size_t i = 0; i < p; ++i) {
        double norm2 = 0.0;
        for (double v : A[i]) norm2 += v * v;
        if (!(norm2 > 0.0)) {
            throw std::invalid_argument("gen_matrix_model: row " + std::to_string(i) +
                                        " of A is zero");
        }
        const double f = 1.0 / std::sqrt(norm2);
        if (std::abs(f - 1.0) > 1e-12) rr.any_rescaled = true;
        rr.factors[i] = f;
        for (double& v : A[i]) v *= f;
    }
    if (rescale) *rescale = rr;

    SampleMatrix m(p, n, seed);
    std::vector<double> eps(p);
    for (std::size_t c = 0; c < n; ++c) {
        RandomStream rng = RandomStream::substream(seed, {0xA11A, c});
        for (auto& e : eps) e = model.innovation.standardized_sample(rng);
        for (std::size_t i = 0; i < p; ++i) {
            double v = 0.0;
            for (std::size_t t = 0; t < p; ++t) v += A[i][t] * eps[t];
            m(i, c) = v;
        }
    }
    return m;
}

} // namespace extremal

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "extremal/matrix.hpp"

namespace extremal {

// Affine value transform v -> scale * (v - center).
struct AffineTransform {
    double center = 0.0;
    double scale = 1.0;
    double operator()(double v) const noexcept { return scale * (v - center); }
};

// Symmetric function of m rows of a sample matrix, with declared arity.
struct TupleKernel {
    std::size_t arity = 2;
    std::function<double(const SampleMatrix&, std::span<const std::size_t>)> eval;
};

namespace detail {
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Visits every strictly increasing m-tuple over {0,...,p-1} in lexicographic
// order. The visitor receives the 0-based index tuple.
template <typename F>
void for_each_tuple(std::size_t p, std::size_t m, F&& visit) {
    std::vector<std::size_t> idx(m);
    if (m == 0) {
        visit(std::span<const std::size_t>(idx));
        return;
    }
    if (m > p) return;
    for (std::size_t l = 0; l < m; ++l) idx[l] = l;
    for (;;) {
        visit(std::span<const std::size_t>(idx));
        // advance
        std::size_t l = m;
        while (l-- > 0) {
            if (idx[l] + (m - l) < p) {
                ++idx[l];
                for (std::size_t h = l + 1; h < m; ++h) idx[h] = idx[h - 1] + 1;
                break;
            }
            if (l == 0) return;
        }
    }
}

inline std::string tuple_to_string(std::span<const std::size_t> idx) {
    std::string s = "(";
    for (std::size_t l = 0; l < idx.size(); ++l) {
        if (l) s += ",";
        s += std::to_string(idx[l] + 1);
    }
    return s + ")";
}
} // namespace detail

// The empirical point process of transformed kernel values: one point per
// strictly increasing index tuple, with time mark i/p componentwise. Points
// are stored sorted by value so exceedance and order-statistic queries are
// logarithmic after the build.
class EmpiricalPointProcess {
  public:
    struct Point {
        double value;
        std::vector<std::uint32_t> tuple; // 1-based indices, strictly increasing
    };

    EmpiricalPointProcess(std::size_t m, std::size_t p, std::size_t n,
                          std::vector<Point> points)
        : m_(m), p_(p), n_(n), points_(std::move(points)) {
        std::sort(points_.begin(), points_.end(),
                  [](const Point& a, const Point& b) { return a.value < b.value; });
    }

    std::size_t tuple_order() const noexcept { return m_; }
    std::size_t p() const noexcept { return p_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return points_.size(); }
    const std::vector<Point>& points_by_value() const noexcept { return points_; }

    std::vector<double> time_of(const Point& pt) const {
        std::vector<double> t;
        t.reserve(pt.tuple.size());
        for (auto i : pt.tuple) t.push_back(static_cast<double>(i) / static_cast<double>(p_));
        return t;
    }

    // #{points with value > threshold}
    std::size_t count_exceedances(double threshold) const {
        auto it = std::upper_bound(points_.begin(), points_.end(), threshold,
                                   [](double t, const Point& pt) { return t < pt.value; });
        return static_cast<std::size_t>(points_.end() - it);
    }

    // k largest values, descending
    std::vector<double> top_k(std::size_t k) const {
        if (k < 1 || k > points_.size()) {
            throw std::invalid_argument("top_k: k must lie in [1, " +
                                        std::to_string(points_.size()) + "], got " +
                                        std::to_string(k));
        }
        std::vector<double> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) out.push_back(points_[points_.size() - 1 - i].value);
        return out;
    }

  private:
    std::size_t m_, p_, n_;
    std::vector<Point> points_; // ascending by value
};

inline EmpiricalPointProcess build_process(const SampleMatrix& matrix, const TupleKernel& kernel,
                                           AffineTransform transform = {}) {
    const std::size_t p = matrix.rows();
    const std::size_t m = kernel.arity;
    if (m < 1 || m > p) {
        throw std::invalid_argument("build_process: kernel arity must satisfy 1 <= m <= p");
    }
    if (transform.scale == 0.0) throw std::invalid_argument("build_process: scale must be nonzero");
    std::vector<EmpiricalPointProcess::Point> pts;
    pts.reserve(detail::binomial(p, m));
    detail::for_each_tuple(p, m, [&](std::span<const std::size_t> idx) {
        double v;
        try {
            v = kernel.eval(matrix, idx);
        } catch (const std::exception& e) {
            throw std::runtime_error("build_process: kernel failed on tuple " +
                                     detail::tuple_to_string(idx) + ": " + e.what());
        }
        EmpiricalPointProcess::Point pt;
        pt.value = transform(v);
        pt.tuple.reserve(idx.size());
        for (auto i : idx) pt.tuple.push_back(static_cast<std::uint32_t>(i + 1));
        pts.push_back(std::move(pt));
    });
    return EmpiricalPointProcess(m, p, matrix.cols(), std::move(pts));
}

// Record times of the running maximum over all tuples within the prefix
// {1..j}, for j = m..p. The first record is logged at j = m (the first index
// at which a tuple exists); afterwards a record is a strict increase. The
// incremental pass evaluates each tuple exactly once, via the tuples whose
// largest index is the new j.
struct RecordSequence {
    std::vector<std::size_t> times;  // 1-based prefix sizes, strictly increasing
    std::vector<double> values;      // running maxima at the records, strictly increasing
    std::size_t zeta() const noexcept { return times.size(); }
};

// Generic-arity record extraction; streams tuples, never materializes points.
inline RecordSequence record_times(const SampleMatrix& matrix, const TupleKernel& kernel,
                                   AffineTransform transform = {}) {
    const std::size_t p = matrix.rows();
    const std::size_t m = kernel.arity;
    if (m < 1 || m > p) {
        throw std::invalid_argument("record_times: kernel arity must satisfy 1 <= m <= p");
    }
    if (transform.scale == 0.0) throw std::invalid_argument("record_times: scale must be nonzero");
    RecordSequence rec;
    double running = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(m);
    for (std::size_t j = m; j <= p; ++j) {
        // max over tuples whose largest index is j
        double best = -std::numeric_limits<double>::infinity();
        detail::for_each_tuple(j - 1, m - 1, [&](std::span<const std::size_t> head) {
            for (std::size_t l = 0; l + 1 < m; ++l) idx[l] = head[l];
            idx[m - 1] = j - 1;
            double v;
            try {
                v = kernel.eval(matrix, idx);
            } catch (const std::exception& e) {
                throw std::runtime_error("record_times: kernel failed on tuple " +
                                         detail::tuple_to_string(idx) + ": " + e.what());
            }
            best = std::max(best, transform(v));
        });
        if (best > running) {
            running = best;
            rec.times.push_back(j);
            rec.values.push_back(best);
        }
    }
    return rec;
}

// Fast m = 2 record extraction over a caller-supplied pair value function
// (already transformed). pair_value(i, j) with 0-based i < j.
template <typename PairValue>
RecordSequence record_times_pairs(std::size_t p, PairValue&& pair_value) {
    if (p < 2) throw std::invalid_argument("record_times_pairs: need p >= 2");
    RecordSequence rec;
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < p; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < j; ++i) best = std::max(best, pair_value(i, j));
        if (best > running) {
            running = best;
            rec.times.push_back(j + 1);
            rec.values.push_back(best);
        }
    }
    return rec;
}

struct RecordGap {
    double last;        // L(zeta) / p
    double second_last; // L(zeta-1) / p
    double gap;         // (L(zeta) - L(zeta-1)) / p
};

// Normalized last/second-last record times; empty when zeta < 2 (the
// replication is then discarded by the caller and the discard recorded).
inline std::optional<RecordGap> record_gap_normalized(const RecordSequence& rec, std::size_t p) {
    if (rec.zeta() < 2) return std::nullopt;
    const double pd = static_cast<double>(p);
    const double last = static_cast<double>(rec.times[rec.times.size() - 1]);
    const double prev = static_cast<double>(rec.times[rec.times.size() - 2]);
    return RecordGap{last / pd, prev / pd, (last - prev) / pd};
}

} // namespace extremal

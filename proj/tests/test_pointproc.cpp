// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "extremal/datagen.hpp"
#include "extremal/kernels.hpp"
#include "extremal/pointproc.hpp"
#include "extremal/rng.hpp"

using namespace extremal;

namespace {

TupleKernel constant_kernel(double c) {
    return {2, [c](const SampleMatrix&, std::span<const std::size_t>) { return c; }};
}

TupleKernel kendall_kernel() {
    return {2, [](const SampleMatrix& m, std::span<const std::size_t> idx) {
                return kendall_tau(m.row(idx[0]), m.row(idx[1]));
            }};
}

TupleKernel spearman_kernel() {
    return {2, [](const SampleMatrix& m, std::span<const std::size_t> idx) {
                return spearman_rho(m.row(idx[0]), m.row(idx[1]));
            }};
}

// brute-force record oracle: recompute the full prefix maximum at every j
RecordSequence brute_force_records(const SampleMatrix& m, const TupleKernel& kernel,
                                   AffineTransform tr) {
    const std::size_t p = m.rows();
    RecordSequence rec;
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t j = kernel.arity; j <= p; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        detail::for_each_tuple(j, kernel.arity, [&](std::span<const std::size_t> idx) {
            best = std::max(best, tr(kernel.eval(m, idx)));
        });
        if (best > running) {
            running = best;
            rec.times.push_back(j);
            rec.values.push_back(best);
        }
    }
    return rec;
}

} // namespace

TEST_CASE("build_process: cardinality and time marks at p = 3") {
    SampleMatrix m(3, 2, 0);
    const auto pp = build_process(m, constant_kernel(1.0));
    REQUIRE(pp.size() == 3);
    std::vector<std::vector<double>> times;
    for (const auto& pt : pp.points_by_value()) times.push_back(pp.time_of(pt));
    std::sort(times.begin(), times.end());
    const std::vector<std::vector<double>> expected{
        {1.0 / 3.0, 2.0 / 3.0}, {1.0 / 3.0, 1.0}, {2.0 / 3.0, 1.0}};
    CHECK(times == expected);
}

TEST_CASE("build_process: constant kernel exceedances") {
    SampleMatrix m(5, 2, 0);
    const auto pp = build_process(m, constant_kernel(2.0));
    CHECK(pp.count_exceedances(1.0) == 10); // C(5,2)
    CHECK(pp.count_exceedances(3.0) == 0);
    CHECK(pp.count_exceedances(-std::numeric_limits<double>::infinity()) == 10);
    CHECK(pp.count_exceedances(std::numeric_limits<double>::infinity()) == 0);
}

TEST_CASE("build_process: kendall values are consistent with direct calls") {
    const auto m = gen_iid_matrix(MarginalSpec::standard_normal(), 4, 5, 12345);
    const auto pp = build_process(m, kendall_kernel());
    REQUIRE(pp.size() == 6);
    for (const auto& pt : pp.points_by_value()) {
        CHECK((pt.value >= -1.0 && pt.value <= 1.0));
        const double direct = kendall_tau(m.row(pt.tuple[0] - 1), m.row(pt.tuple[1] - 1));
        CHECK(pt.value == direct);
    }
}

TEST_CASE("build_process: kernel failures carry the offending tuple") {
    SampleMatrix m(4, 3, 0);
    TupleKernel bad{2, [](const SampleMatrix&, std::span<const std::size_t> idx) -> double {
                        if (idx[0] == 1 && idx[1] == 3) throw std::runtime_error("boom");
                        return 0.0;
                    }};
    CHECK_THROWS_WITH(build_process(m, bad), Catch::Matchers::ContainsSubstring("(2,4)"));
}

TEST_CASE("top_k") {
    SampleMatrix m(3, 2, 0);
    int call = 0;
    TupleKernel varying{2, [&call](const SampleMatrix&, std::span<const std::size_t>) {
                            const double vals[] = {3.0, 1.0, 2.0};
                            return vals[call++ % 3];
                        }};
    const auto pp = build_process(m, varying);
    CHECK(pp.top_k(2) == std::vector<double>{3.0, 2.0});
    CHECK(pp.top_k(3) == std::vector<double>{3.0, 2.0, 1.0});
    CHECK_THROWS_AS(pp.top_k(0), std::invalid_argument);
    CHECK_THROWS_AS(pp.top_k(4), std::invalid_argument);
    // count/order-statistic duality on a random grid
    for (double x : {-0.5, 0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5}) {
        for (std::size_t k = 1; k <= 3; ++k) {
            const bool lhs = pp.count_exceedances(x) < k;
            const bool rhs = pp.top_k(k)[k - 1] <= x;
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("count_exceedances is nonincreasing in the threshold") {
    const auto m = gen_iid_matrix(MarginalSpec::standard_normal(), 8, 6, 99);
    const auto pp = build_process(m, spearman_kernel());
    std::size_t prev = pp.count_exceedances(-2.0);
    for (double x = -1.9; x <= 2.0; x += 0.1) {
        const std::size_t cur = pp.count_exceedances(x);
        REQUIRE(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("record times: monotone fixture records at every prefix") {
    SampleMatrix m(7, 2, 0);
    TupleKernel increasing{2, [](const SampleMatrix&, std::span<const std::size_t> idx) {
                               return static_cast<double>(idx[1]);
                           }};
    const auto rec = record_times(m, increasing);
    REQUIRE(rec.zeta() == 6); // j = 2..7
    for (std::size_t k = 0; k < rec.zeta(); ++k) REQUIRE(rec.times[k] == k + 2);
}

TEST_CASE("record times: first-tuple maximum gives a single record") {
    SampleMatrix m(7, 2, 0);
    TupleKernel decreasing{2, [](const SampleMatrix&, std::span<const std::size_t> idx) {
                               return -static_cast<double>(idx[0] + idx[1]);
                           }};
    const auto rec = record_times(m, decreasing);
    REQUIRE(rec.zeta() == 1);
    CHECK(rec.times[0] == 2);
}

TEST_CASE("incremental records equal brute-force prefix maxima, m = 2") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t p = 3 + seed % 10; // up to 12
        const auto m = gen_iid_matrix(MarginalSpec::standard_normal(), p, 8, 1000 + seed);
        const auto kernel = spearman_kernel();
        const auto fast = record_times(m, kernel);
        const auto slow = brute_force_records(m, kernel, {});
        REQUIRE(fast.times == slow.times);
        REQUIRE(fast.values == slow.values);
        // and the pair-specialized path agrees as well
        const auto pairs = record_times_pairs(p, [&](std::size_t i, std::size_t j) {
            return spearman_rho(m.row(i), m.row(j));
        });
        REQUIRE(pairs.times == slow.times);
    }
}

TEST_CASE("incremental records equal brute force for m = 3") {
    TupleKernel k3{3, [](const SampleMatrix& m, std::span<const std::size_t> idx) {
                       double acc = 0.0;
                       for (std::size_t t = 0; t < m.cols(); ++t) {
                           acc += m(idx[0], t) * m(idx[1], t) * m(idx[2], t);
                       }
                       return acc;
                   }};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = gen_iid_matrix(MarginalSpec::standard_normal(), 8, 5, 2000 + seed);
        const auto fast = record_times(m, k3);
        const auto slow = brute_force_records(m, k3, {});
        REQUIRE(fast.times == slow.times);
    }
    // cardinality for m = 3
    const auto m = gen_iid_matrix(MarginalSpec::standard_normal(), 7, 4, 5);
    CHECK(build_process(m, k3).size() == 35); // C(7,3)
}

TEST_CASE("record gap normalization") {
    RecordSequence rec;
    rec.times = {2, 5, 9};
    rec.values = {0.1, 0.5, 0.9};
    const auto gap = record_gap_normalized(rec, 10);
    REQUIRE(gap.has_value());
    CHECK(gap->last == 0.9);
    CHECK(gap->second_last == 0.5);
    CHECK_THAT(gap->gap, Catch::Matchers::WithinAbs(0.4, 1e-15));

    RecordSequence single;
    single.times = {2};
    single.values = {3.0};
    CHECK_FALSE(record_gap_normalized(single, 10).has_value());
}

TEST_CASE("affine equivariance: values map, record times stay") {
    const auto m = gen_iid_matrix(MarginalSpec::standard_normal(), 9, 7, 77);
    const auto kernel = spearman_kernel();
    const AffineTransform tr{0.3, 2.5};
    const auto plain = build_process(m, kernel);
    const auto scaled = build_process(m, kernel, tr);
    const auto top_plain = plain.top_k(5);
    const auto top_scaled = scaled.top_k(5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(top_scaled[k] == tr(top_plain[k]));
    }
    const auto rec_plain = record_times(m, kernel);
    const auto rec_scaled = record_times(m, kernel, tr);
    CHECK(rec_plain.times == rec_scaled.times);
}

TEST_CASE("mean record count matches the combinatorial value") {
    // E zeta = 1 + m * (H_p - H_m) for any continuous symmetric kernel of
    // iid vectors: the argmax over tuples inside each prefix is uniform.
    const std::size_t p = 60, reps = 1500, n = 6;
    double acc = 0.0;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
        const auto m = gen_iid_matrix(MarginalSpec::standard_normal(), p, n, 50000 + rep);
        std::vector<RankVector> rk;
        rk.reserve(p);
        for (std::size_t i = 0; i < p; ++i) rk.push_back(ranks(m.row(i)));
        const auto rec = record_times_pairs(
            p, [&](std::size_t i, std::size_t j) { return spearman_from_ranks(rk[i], rk[j]); });
        acc += static_cast<double>(rec.zeta());
    }
    acc /= static_cast<double>(reps);
    double expected = 1.0;
    for (std::size_t j = 3; j <= p; ++j) expected += 2.0 / static_cast<double>(j);
    // se of the mean is about sqrt(Var(zeta)/reps) ~ 0.06 here
    CHECK_THAT(acc, Catch::Matchers::WithinAbs(expected, 0.25));
}

TEST_CASE("build preconditions") {
    SampleMatrix m(3, 2, 0);
    TupleKernel too_big{4, [](const SampleMatrix&, std::span<const std::size_t>) { return 0.0; }};
    CHECK_THROWS_AS(build_process(m, too_big), std::invalid_argument);
    CHECK_THROWS_AS(build_process(m, constant_kernel(0.0), AffineTransform{0.0, 0.0}),
                    std::invalid_argument);
}

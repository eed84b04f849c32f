#include "doctest.h"

#include <cmath>

#include "gapfill/fillers.hpp"
#include "helpers.hpp"

using namespace gapfill;
using testutil::make_series;
using testutil::miss;

namespace {

using FillFn = TimeSeries (*)(const TimeSeries&, const FillerConfig&);

const std::vector<std::pair<const char*, FillFn>> kFillers = {
    {"linear", fill_linear},       {"poly_local", fill_poly_local},
    {"poly_batch", fill_poly_batch}, {"moving_average", fill_moving_average},
    {"spline", fill_spline},       {"kalman", fill_kalman},
};

}  // namespace

TEST_CASE("fill_linear examples") {
    FillerConfig cfg;
    CHECK(fill_linear(make_series({1, miss, 3}), cfg).values == std::vector<double>{1, 2, 3});
    CHECK(fill_linear(make_series({0, miss, miss, 3}), cfg).values ==
          std::vector<double>{0, 1, 2, 3});
    CHECK(fill_linear(make_series({miss, 5, miss}), cfg).values == std::vector<double>{5, 5, 5});
}

TEST_CASE("fill_linear is translation and scale equivariant") {
    Rng rng(23);
    FillerConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        auto series = testutil::random_gapped_series(rng, 3 + rng.index(40), 0.3);
        if (series.observed_count() < 1) continue;
        const double a = rng.uniform(0.5, 3.0), b = rng.uniform(-5.0, 5.0);
        TimeSeries scaled = series;
        for (double& v : scaled.values)
            if (!is_missing(v)) v = a * v + b;

        const auto filled = fill_linear(series, cfg);
        const auto filled_scaled = fill_linear(scaled, cfg);
        for (std::size_t i = 0; i < series.size(); ++i)
            CHECK(filled_scaled.values[i] ==
                  doctest::Approx(a * filled.values[i] + b).epsilon(1e-12));
    }
}

TEST_CASE("fill_poly_local reproduces polynomials") {
    FillerConfig cfg;

    SUBCASE("line restored exactly with degree 1") {
        cfg.poly_degree = 1;
        std::vector<double> v(12);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 2.0 * static_cast<double>(i);
        v[5] = miss;
        const auto filled = fill_poly_local(make_series(v), cfg);
        CHECK(filled.values[5] == doctest::Approx(10.0).epsilon(1e-10));
    }
    SUBCASE("parabola at t=3 with degree 2, sg_window 5") {
        cfg.poly_degree = 2;
        cfg.sg_window = 5;
        std::vector<double> v(8);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i * i);
        v[3] = miss;
        const auto filled = fill_poly_local(make_series(v), cfg);
        CHECK(std::abs(filled.values[3] - 9.0) < 1e-8);
    }
    SUBCASE("constant series stays constant") {
        const auto filled = fill_poly_local(make_series({4, 4, miss, 4, 4, 4, 4, 4, 4, 4}), cfg);
        for (double v : filled.values) CHECK(v == doctest::Approx(4.0).epsilon(1e-10));
    }
}

TEST_CASE("fill_poly_batch fits one global polynomial") {
    FillerConfig cfg;

    SUBCASE("line restored exactly") {
        cfg.poly_degree = 1;
        std::vector<double> v(20);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 3.0 - 0.5 * static_cast<double>(i);
        v[4] = v[5] = v[13] = miss;
        const auto filled = fill_poly_batch(make_series(v), cfg);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(std::abs(filled.values[i] - (3.0 - 0.5 * static_cast<double>(i))) < 1e-8);
    }
    SUBCASE("[0,1,miss,9] against the hand-solved normal equations") {
        // Observed points (0,0),(1,1),(3,9); least-squares line by the 2x2
        // normal equations: slope 22/7, intercept -6/7; value at 2 is 38/7.
        cfg.poly_degree = 1;
        const auto filled = fill_poly_batch(make_series({0, 1, miss, 9}), cfg);
        CHECK(filled.values[2] == doctest::Approx(38.0 / 7.0).epsilon(1e-10));
    }
    SUBCASE("degree 0 fills with the observed mean") {
        cfg.poly_degree = 0;
        const auto filled = fill_poly_batch(make_series({1, miss, 2, 6}), cfg);
        CHECK(filled.values[1] == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("fill_moving_average examples") {
    FillerConfig cfg;
    cfg.ma_window = 1;

    SUBCASE("midpoint of the two neighbours") {
        const auto filled = fill_moving_average(make_series({1, miss, 3}), cfg);
        CHECK(filled.values[1] == doctest::Approx(2.0));
    }
    SUBCASE("constant series stays constant") {
        cfg.ma_window = 3;
        const auto filled = fill_moving_average(make_series({7, miss, miss, 7, 7}), cfg);
        for (double v : filled.values) CHECK(v == doctest::Approx(7.0));
    }
    SUBCASE("two-pass rule on [0, miss, miss, 6]") {
        // Left-to-right: i1 = mean(0, 6) = 3, i2 = mean(3, 6) = 4.5.
        // Right-to-left: i2 = mean(6, 0) = 3, i1 = mean(3, 0) = 1.5.
        // Averaged: [2.25, 3.75].
        const auto filled = fill_moving_average(make_series({0, miss, miss, 6}), cfg);
        CHECK(filled.values[1] == doctest::Approx(2.25).epsilon(1e-12));
        CHECK(filled.values[2] == doctest::Approx(3.75).epsilon(1e-12));
    }
}

TEST_CASE("fill_spline natural cubic") {
    FillerConfig cfg;

    SUBCASE("affine series restored exactly") {
        std::vector<double> v(15);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.75 * static_cast<double>(i);
        v[3] = v[4] = v[11] = miss;
        const auto filled = fill_spline(make_series(v), cfg);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(std::abs(filled.values[i] - (1.0 + 0.75 * static_cast<double>(i))) < 1e-8);
    }
    SUBCASE("three knots against the hand-solved tridiagonal system") {
        // Knots (0,0),(2,4),(4,0); natural conditions leave one unknown second
        // derivative: (h0+h1)/3 * M1 = (y2-y1)/h1 - (y1-y0)/h0 = -4, so
        // M1 = -3, and the segment value at x = 1 is 2.75.
        const auto filled = fill_spline(make_series({0, miss, 4, miss, 0}), cfg);
        CHECK(std::abs(filled.values[1] - 2.75) < 1e-8);
    }
    SUBCASE("constant series stays constant") {
        const auto filled = fill_spline(make_series({2, miss, 2, 2, miss, 2}), cfg);
        for (double v : filled.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("boundary gaps extend linearly with the edge slope") {
        const auto filled = fill_spline(make_series({miss, 1, 2, 3, miss}), cfg);
        CHECK(std::abs(filled.values[0] - 0.0) < 1e-8);
        CHECK(std::abs(filled.values[4] - 4.0) < 1e-8);
    }
}

TEST_CASE("fill_kalman local level smoother") {
    FillerConfig cfg;

    SUBCASE("constant series is a fixed point") {
        const auto filled = fill_kalman(make_series({5, 5, miss, 5, 5}), cfg);
        CHECK(std::abs(filled.values[2] - 5.0) < 1e-8);
    }
    SUBCASE("single observation then all-missing continues that observation") {
        const auto filled = fill_kalman(make_series({3.5, miss, miss, miss}), cfg);
        for (double v : filled.values) CHECK(v == doctest::Approx(3.5).epsilon(1e-12));
    }
    SUBCASE("three-step hand recursion on [0, miss, 2]") {
        // Independent scalar recursion with the same initialization
        // (level = first observation, variance = r).
        const double q = 1e-2, r = 1e-4;
        const double m0 = 0.0, p0 = r;
        const double m1_pred = m0, p1_pred = p0 + q;
        const double m1 = m1_pred, p1 = p1_pred;  // missing: prediction only
        const double m2_pred = m1, p2_pred = p1 + q;
        const double gain = p2_pred / (p2_pred + r);
        const double m2 = m2_pred + gain * (2.0 - m2_pred);
        // RTS: s2 = m2; s1 = m1 + p1/p2_pred * (s2 - m2_pred).
        const double s1 = m1 + (p1 / p2_pred) * (m2 - m2_pred);

        cfg.kalman_process_var = q;
        cfg.kalman_obs_var = r;
        const auto filled = fill_kalman(make_series({0, miss, 2}), cfg);
        CHECK(std::abs(filled.values[1] - s1) < 1e-8);
        CHECK(s1 == doctest::Approx(1.0).epsilon(1e-2));  // obs_var -> 0 limit is exactly 1
    }
}

TEST_CASE("all fillers: total, preserving, deterministic") {
    Rng rng(29);
    FillerConfig cfg;
    for (int trial = 0; trial < 60; ++trial) {
        auto series = testutil::random_gapped_series(rng, 12 + rng.index(60), 0.25);
        if (series.observed_count() < 4) continue;
        for (const auto& [name, fn] : kFillers) {
            CAPTURE(name);
            const auto a = fn(series, cfg);
            const auto b = fn(series, cfg);
            REQUIRE(a.size() == series.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                REQUIRE(!is_missing(a.values[i]));
                REQUIRE(std::isfinite(a.values[i]));
                REQUIRE(a.values[i] == b.values[i]);  // deterministic
                if (!is_missing(series.values[i])) REQUIRE(a.values[i] == series.values[i]);
            }
        }
    }
}

TEST_CASE("fillers reject series with too few observations") {
    FillerConfig cfg;
    const auto one_obs = make_series({miss, 1.0, miss});
    CHECK_THROWS_WITH_AS(fill_poly_local(one_obs, cfg), "insufficient data", std::runtime_error);
    CHECK_THROWS_WITH_AS(fill_poly_batch(one_obs, cfg), "insufficient data", std::runtime_error);
    CHECK_THROWS_WITH_AS(fill_moving_average(one_obs, cfg), "insufficient data",
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(fill_spline(make_series({1.0, miss, 2.0}), cfg), "insufficient data",
                         std::runtime_error);
    const auto none = make_series({miss, miss});
    CHECK_THROWS_AS(fill_linear(none, cfg), std::runtime_error);
    CHECK_THROWS_AS(fill_kalman(none, cfg), std::runtime_error);
}

TEST_CASE("filler config validation") {
    FillerConfig cfg;
    cfg.sg_window = 2;  // even and not > degree
    CHECK_THROWS_AS(fill_poly_local(make_series({1, miss, 3}), cfg), std::invalid_argument);
    cfg = {};
    cfg.kalman_obs_var = 0.0;
    CHECK_THROWS_AS(fill_kalman(make_series({1, miss, 3}), cfg), std::invalid_argument);
}

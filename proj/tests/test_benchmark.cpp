#include "doctest.h"

#include <cmath>

#include "gapfill/benchmark.hpp"
#include "gapfill/synthgen.hpp"
#include "helpers.hpp"

using namespace gapfill;
using testutil::make_series;
using testutil::miss;

TEST_CASE("mae and mape") {
    SUBCASE("perfect predictions score zero") {
        const std::vector<double> v = {1.0, -2.0, 3.5};
        CHECK(mae(v, v) == 0.0);
        CHECK(mape(v, v).value == 0.0);
    }
    SUBCASE("single point arithmetic") {
        CHECK(mae(std::vector<double>{2.0}, std::vector<double>{1.0}) == 1.0);
        CHECK(mape(std::vector<double>{2.0}, std::vector<double>{1.0}).value ==
              doctest::Approx(50.0));
    }
    SUBCASE("two point arithmetic") {
        const std::vector<double> a = {1.0, 3.0}, p = {2.0, 3.0};
        CHECK(mae(a, p) == doctest::Approx(0.5));
        CHECK(mape(a, p).value == doctest::Approx(50.0));
    }
    SUBCASE("near-zero actuals are excluded and counted") {
        const std::vector<double> a = {0.0, 2.0}, p = {5.0, 1.0};
        const auto m = mape(a, p);
        CHECK(m.value == doctest::Approx(50.0));
        CHECK(m.excluded == 1);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
        CHECK_THROWS_AS(mae(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(mape(std::vector<double>{0.0}, std::vector<double>{1.0}),
                        std::runtime_error);
    }
    SUBCASE("mae is translation invariant") {
        Rng rng(7);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 1 + rng.index(20);
            std::vector<double> a(n), p(n), a2(n), p2(n);
            const double c = rng.uniform(-10.0, 10.0);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = rng.normal(0, 3);
                p[i] = rng.normal(0, 3);
                a2[i] = a[i] + c;
                p2[i] = p[i] + c;
            }
            CHECK(mae(a, p) == doctest::Approx(mae(a2, p2)).epsilon(1e-12));
        }
    }
}

TEST_CASE("score_restoration") {
    const auto clean = testutil::sine_series(80, 0.3);
    Mask mask(80, 0);
    for (std::size_t i = 30; i < 40; ++i) mask[i] = 1;

    SUBCASE("an oracle that copies the clean series scores zero") {
        const auto score = score_restoration(clean, clean, mask);
        CHECK(score.mae == 0.0);
    }
    SUBCASE("only masked indices are scored") {
        TimeSeries filled = clean;
        for (std::size_t i = 30; i < 40; ++i) filled.values[i] += 0.25;
        const auto base = score_restoration(clean, filled, mask);

        TimeSeries noisy_outside = filled;
        for (std::size_t i = 0; i < 20; ++i) noisy_outside.values[i] += 42.0;
        const auto perturbed = score_restoration(clean, noisy_outside, mask);
        CHECK(base.mae == perturbed.mae);
        CHECK(base.mape == perturbed.mape);
        CHECK(base.mae == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("run_restoration_benchmark") {
    SyntheticSpec synth;
    synth.n = 900;
    synth.break_point = 450;
    synth.rng_seed = 2;
    const auto clean = generate(synth);

    GapSpec gaps;
    gaps.protected_margin = 40;
    gaps.rng_seed = 2;
    const auto gapped = inject_gaps(clean, gaps);

    MethodOptions options;
    options.policy.w = 25;

    SUBCASE("rows are sorted by MAE and all finite") {
        const std::vector<Method> methods = {Method::linear, Method::moving_average,
                                             Method::spline, Method::ridge_bidir};
        const auto rows = run_restoration_benchmark(clean, gapped.series, gapped.mask, methods,
                                                    options);
        REQUIRE(rows.size() == methods.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            CHECK(rows[r].status == "ok");
            CHECK(std::isfinite(rows[r].mae));
            if (r > 0) CHECK(rows[r].mae >= rows[r - 1].mae);
        }
    }
    SUBCASE("a method failure becomes a failed row, not an abort") {
        // Two observed samples support linear interpolation but not a spline.
        const auto tiny_clean = make_series({1.0, 2.0, 3.0, 4.0});
        const auto tiny_gapped = make_series({1.0, miss, miss, 4.0});
        const Mask mask = {0, 1, 1, 0};
        const auto rows = run_restoration_benchmark(
            tiny_clean, tiny_gapped, mask, {Method::linear, Method::spline}, options);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].method == "linear");
        CHECK(rows[0].status == "ok");
        CHECK(rows[1].method == "spline");
        CHECK(rows[1].status.find("failed") == 0);
    }
}

TEST_CASE("forecast impact") {
    SyntheticSpec synth;
    synth.n = 1200;
    synth.break_point = 600;
    synth.rng_seed = 4;
    const auto clean = generate(synth);

    SUBCASE("the original series deviates from itself by exactly zero") {
        const auto rows = run_forecast_impact(clean, {{"original", clean}}, 100);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].deviation == 0.0);
        CHECK(std::isfinite(rows[0].forecast_mape));
    }
    SUBCASE("tail must stay below half the series") {
        CHECK_THROWS_AS(run_forecast_impact(clean, {{"original", clean}}, 600),
                        std::invalid_argument);
        CHECK_THROWS_AS(run_forecast_impact(clean, {{"original", clean}}, 0),
                        std::invalid_argument);
    }
    SUBCASE("default tail scales below n = 2000") {
        CHECK(default_tail(6276) == 400);
        CHECK(default_tail(2000) == 400);
        CHECK(default_tail(1000) == 64);
    }
}

TEST_CASE("full benchmark report") {
    SyntheticSpec synth;
    synth.n = 800;
    synth.break_point = 400;
    synth.rng_seed = 6;
    const auto clean = generate(synth);

    GapSpec gaps;
    gaps.protected_margin = 40;
    gaps.rng_seed = 6;
    const auto gapped = inject_gaps(clean, gaps);

    MethodOptions options;
    options.policy.w = 20;
    const std::vector<Method> methods = {Method::linear, Method::kalman};
    const auto report = run_full_benchmark(clean, gapped.series, gapped.mask, methods, options);

    REQUIRE(report.rows.size() == methods.size() + 1);
    CHECK(report.rows[0].method == "original");
    CHECK(report.rows[0].deviation == 0.0);

    const std::string csv = report.to_csv();
    CHECK(csv.find("method,mae,mape,forecast_mape,deviation,status") == 0);
    CHECK(csv.find("original,") != std::string::npos);
    CHECK(csv.find("linear,") != std::string::npos);

    const auto j = report.to_json();
    CHECK(j.contains("metadata"));
    CHECK(j.at("rows").size() == report.rows.size());

    const std::string plot =
        plot_data_csv(clean, gapped.mask, {{"linear", run_fill_method(gapped.series,
                                                                      Method::linear, options)}});
    CHECK(plot.find("method,index,actual,filled") == 0);
}

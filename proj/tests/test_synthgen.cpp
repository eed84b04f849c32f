#include "doctest.h"

#include <cmath>

#include "gapfill/synthgen.hpp"
#include "helpers.hpp"

using namespace gapfill;

TEST_CASE("generate") {
    SyntheticSpec spec;
    spec.n = 600;
    spec.break_point = 300;
    spec.noise_var = 0.0;
    spec.t1 = 1.0;
    spec.t2 = 2.0;

    SUBCASE("t = 0 evaluates to sin(0) + cos(0) = 1") {
        const auto series = generate(spec);
        CHECK(series.values[0] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("noise off: closed form before and after the break") {
        const auto series = generate(spec);
        for (std::size_t i = 0; i < spec.n; i += 37) {
            const double t = static_cast<double>(i) * spec.t_step;
            const double expected =
                std::sin(t) + std::cos(t * (i <= spec.break_point ? spec.t1 : spec.t2));
            CHECK(series.values[i] == doctest::Approx(expected).epsilon(1e-15));
        }
        // Just after the break the second regime applies.
        const std::size_t i = spec.break_point + 1;
        const double t = static_cast<double>(i) * spec.t_step;
        CHECK(series.values[i] == doctest::Approx(std::sin(t) + std::cos(2.0 * t)).epsilon(1e-15));
    }
    SUBCASE("deterministic per seed; seed changes only the noise") {
        spec.noise_var = 0.01;
        spec.rng_seed = 5;
        const auto a = generate(spec);
        const auto b = generate(spec);
        for (std::size_t i = 0; i < spec.n; ++i) REQUIRE(a.values[i] == b.values[i]);

        spec.rng_seed = 6;
        const auto c = generate(spec);
        bool any_diff = false;
        for (std::size_t i = 0; i < spec.n; ++i) any_diff = any_diff || a.values[i] != c.values[i];
        CHECK(any_diff);

        // With the noise off the seed is irrelevant.
        spec.noise_var = 0.0;
        spec.rng_seed = 5;
        const auto d = generate(spec);
        spec.rng_seed = 99;
        const auto e = generate(spec);
        for (std::size_t i = 0; i < spec.n; ++i) REQUIRE(d.values[i] == e.values[i]);
    }
    SUBCASE("invalid specs") {
        SyntheticSpec bad = spec;
        bad.break_point = spec.n;
        CHECK_THROWS_AS(generate(bad), std::invalid_argument);
        bad = spec;
        bad.t2 = bad.t1;
        CHECK_THROWS_AS(generate(bad), std::invalid_argument);
        bad = spec;
        bad.noise_var = -1.0;
        CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    }
}

TEST_CASE("inject_gaps") {
    SyntheticSpec synth;
    synth.n = 2000;
    synth.break_point = 1000;
    const auto clean = generate(synth);

    GapSpec spec;
    spec.protected_margin = 50;

    SUBCASE("mask and series are mutually consistent") {
        spec.rng_seed = 3;
        const auto out = inject_gaps(clean, spec);
        REQUIRE(out.mask.size() == clean.size());
        for (std::size_t i = 0; i < clean.size(); ++i) {
            if (out.mask[i]) {
                REQUIRE(is_missing(out.series.values[i]));
            } else {
                REQUIRE(out.series.values[i] == clean.values[i]);
            }
        }
    }
    SUBCASE("removed fraction lands within 2% of the target over 20 seeds") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            spec.rng_seed = seed;
            const auto out = inject_gaps(clean, spec);
            std::size_t removed = 0;
            for (auto f : out.mask) removed += f;
            const double fraction = static_cast<double>(removed) / static_cast<double>(clean.size());
            CHECK(fraction >= 0.294);
            CHECK(fraction <= 0.306);
        }
    }
    SUBCASE("long gap is placed centrally and margins are respected") {
        spec.rng_seed = 11;
        const auto out = inject_gaps(clean, spec);
        const std::size_t len = spec.resolved_long_length(clean.size());
        const std::size_t start = clean.size() / 2 - len / 2;
        for (std::size_t i = start; i < start + len; ++i) REQUIRE(out.mask[i]);
        for (std::size_t i = 0; i < spec.protected_margin; ++i) {
            REQUIRE(!out.mask[i]);
            REQUIRE(!out.mask[clean.size() - 1 - i]);
        }
    }
    SUBCASE("a fraction just covering the long gap places nothing else") {
        GapSpec tight;
        tight.protected_margin = 50;
        tight.long_gap_length = 479;  // target 480, window [471, 489]
        tight.total_fraction = 0.24;
        tight.rng_seed = 17;
        const auto out = inject_gaps(clean, tight);
        std::size_t removed = 0;
        for (auto f : out.mask) removed += f;
        CHECK(removed == 479);
        const std::size_t start = clean.size() / 2 - 479 / 2;
        for (std::size_t i = 0; i < clean.size(); ++i)
            REQUIRE(static_cast<bool>(out.mask[i]) == (i >= start && i < start + 479));
    }
    SUBCASE("infeasible specs are rejected") {
        GapSpec bad;
        bad.total_fraction = 0.05;  // long gap alone exceeds the budget
        bad.protected_margin = 50;
        CHECK_THROWS_AS(inject_gaps(clean, bad), std::runtime_error);

        GapSpec no_fit;
        no_fit.protected_margin = 900;  // margins leave no room for the long gap
        CHECK_THROWS_AS(inject_gaps(clean, no_fit), std::invalid_argument);
    }
}

#pragma once

#include <cstdint>
#include <utility>

#include "gapfill/csv_io.hpp"
#include "gapfill/series.hpp"

namespace gapfill {

/**
 * Two-regime sinusoid with Gaussian noise:
 *   V[i] = sin(t) + N(mu, sigma2) + cos(t*T1)   while i <= break_point,
 *          sin(t) + N(mu, sigma2) + cos(t*T2)   afterwards,
 * with t = i * t_step.
 */
struct SyntheticSpec {
    std::size_t n = 5000;
    double t1 = 1.0;
    double t2 = 2.5;
    std::size_t break_point = 2500;  // index units
    double noise_mean = 0.0;
    double noise_var = 0.01;
    std::uint64_t rng_seed = 0;
    double t_step = 0.01;

    void validate() const;
};

TimeSeries generate(const SyntheticSpec& spec);

/**
 * Gap injection: one long central gap plus random disjoint segments until the
 * removed count lands within 2% of total_fraction * n. Zero-valued length and
 * center fields resolve to round(n/4.18) and n/2.
 */
struct GapSpec {
    double total_fraction = 0.30;
    std::size_t min_segment = 5;
    std::size_t max_segment = 60;
    std::size_t long_gap_length = 0;
    std::size_t long_gap_center = 0;
    std::size_t protected_margin = 100;
    std::uint64_t rng_seed = 0;

    void validate(std::size_t n) const;
    std::size_t resolved_long_length(std::size_t n) const;
    std::size_t resolved_center(std::size_t n) const;
};

struct GappedSeries {
    TimeSeries series;
    Mask mask;  // 1 where a sample was removed
};

GappedSeries inject_gaps(const TimeSeries& series, const GapSpec& spec);

}  // namespace gapfill

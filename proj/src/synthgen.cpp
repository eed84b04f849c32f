#include "gapfill/synthgen.hpp"

#include <cmath>
#include <stdexcept>

#include "gapfill/rng.hpp"

namespace gapfill {

void SyntheticSpec::validate() const {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (break_point == 0 || break_point >= n)
        throw std::invalid_argument("break_point must lie strictly inside the series");
    if (noise_var < 0.0) throw std::invalid_argument("noise_var must be >= 0");
    if (t1 == t2) throw std::invalid_argument("t1 and t2 must differ for a regime change");
    if (!(t_step > 0.0)) throw std::invalid_argument("t_step must be positive");
}

TimeSeries generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.rng_seed);
    const double sigma = std::sqrt(spec.noise_var);

    TimeSeries out;
    out.values.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double t = static_cast<double>(i) * spec.t_step;
        const double period = i <= spec.break_point ? spec.t1 : spec.t2;
        const double noise = sigma > 0.0 ? rng.normal(spec.noise_mean, sigma) : spec.noise_mean;
        out.values.push_back(std::sin(t) + noise + std::cos(t * period));
    }
    return out;
}

std::size_t GapSpec::resolved_long_length(std::size_t n) const {
    if (long_gap_length != 0) return long_gap_length;
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) / 4.18));
}

std::size_t GapSpec::resolved_center(std::size_t n) const {
    return long_gap_center != 0 ? long_gap_center : n / 2;
}

void GapSpec::validate(std::size_t n) const {
    if (total_fraction <= 0.0 || total_fraction >= 0.9)
        throw std::invalid_argument("total_fraction must be in (0, 0.9)");
    if (min_segment == 0 || max_segment < min_segment)
        throw std::invalid_argument("segment length range is empty");
    const std::size_t len = resolved_long_length(n);
    const std::size_t center = resolved_center(n);
    if (len == 0 || len > n) throw std::invalid_argument("long gap does not fit the series");
    const std::size_t start = center >= len / 2 ? center - len / 2 : 0;
    if (start < protected_margin || start + len + protected_margin > n)
        throw std::invalid_argument("long gap does not fit inside the protected margins");
}

GappedSeries inject_gaps(const TimeSeries& series, const GapSpec& spec) {
    const std::size_t n = series.size();
    spec.validate(n);

    const std::size_t target =
        static_cast<std::size_t>(std::llround(spec.total_fraction * static_cast<double>(n)));
    const std::size_t lo = static_cast<std::size_t>(std::ceil(0.98 * static_cast<double>(target)));
    const std::size_t hi = static_cast<std::size_t>(std::floor(1.02 * static_cast<double>(target)));

    GappedSeries out;
    out.series = series;
    out.mask.assign(n, 0);

    // Long central gap first.
    const std::size_t long_len = spec.resolved_long_length(n);
    const std::size_t long_start = spec.resolved_center(n) - long_len / 2;
    if (long_len > hi) throw std::runtime_error("infeasible gap spec: long gap exceeds the target fraction");
    for (std::size_t i = long_start; i < long_start + long_len; ++i) out.mask[i] = 1;
    std::size_t removed = long_len;

    Rng rng(spec.rng_seed);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 20000;
    while (removed < lo) {
        if (++attempts > max_attempts) throw std::runtime_error("infeasible gap spec");
        const std::size_t cap = hi - removed;
        const std::size_t len_lo = std::min(spec.min_segment, cap);
        const std::size_t len_hi = std::min(spec.max_segment, cap);
        const std::size_t len = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(len_lo), static_cast<std::int64_t>(len_hi)));
        if (spec.protected_margin + len + spec.protected_margin > n) continue;
        const std::size_t span = n - 2 * spec.protected_margin - len + 1;
        const std::size_t start = spec.protected_margin + rng.index(span);

        // Disjoint and non-adjacent, so each placement stays a distinct gap.
        bool ok = (start == 0 || !out.mask[start - 1]) &&
                  (start + len == n || !out.mask[start + len]);
        for (std::size_t i = start; ok && i < start + len; ++i) ok = !out.mask[i];
        if (!ok) continue;

        for (std::size_t i = start; i < start + len; ++i) out.mask[i] = 1;
        removed += len;
    }

    for (std::size_t i = 0; i < n; ++i)
        if (out.mask[i]) out.series.values[i] = kMissing;
    return out;
}

}  // namespace gapfill

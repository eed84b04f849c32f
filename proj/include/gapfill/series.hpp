#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace gapfill {

/// Missing samples are carried as quiet NaN so that no finite sentinel can
/// collide with real data.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/**
 * Equally spaced univariate series. Index arithmetic alone defines time;
 * origin_index only labels the first sample for I/O purposes.
 */
struct TimeSeries {
    std::vector<double> values;
    std::int64_t origin_index = 0;

    TimeSeries() = default;
    explicit TimeSeries(std::vector<double> v, std::int64_t origin = 0)
        : values(std::move(v)), origin_index(origin) {}

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    std::size_t observed_count() const {
        std::size_t n = 0;
        for (double v : values)
            if (!is_missing(v)) ++n;
        return n;
    }
    bool has_gaps() const { return observed_count() != values.size(); }
};

/// Maximal run of consecutive missing samples: indices [start, start+length).
struct GapSegment {
    std::size_t start = 0;
    std::size_t length = 0;

    std::size_t end() const { return start + length; }
    bool operator==(const GapSegment&) const = default;
};

/// Observed windows flanking one gap. Either window may be shorter than the
/// requested lag (or empty) when the gap abuts a series boundary or another gap.
struct FillContext {
    std::vector<double> pre_window;
    std::vector<double> post_window;
    GapSegment gap;
};

/// Maximal missing runs in ascending start order.
std::vector<GapSegment> scan_gaps(const TimeSeries& series);

/// Longest fully observed runs ending at gap.start-1 (capped at w1) and
/// beginning at gap.end() (capped at w2).
FillContext extract_context(const TimeSeries& series, const GapSegment& gap,
                            std::size_t w1, std::size_t w2);

/// Index-reversed copy; origin is kept.
TimeSeries reversed(const TimeSeries& series);

}  // namespace gapfill

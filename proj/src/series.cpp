#include "gapfill/series.hpp"

#include <algorithm>

namespace gapfill {

std::vector<GapSegment> scan_gaps(const TimeSeries& series) {
    std::vector<GapSegment> gaps;
    const std::size_t n = series.size();
    std::size_t i = 0;
    while (i < n) {
        if (is_missing(series.values[i])) {
            std::size_t j = i;
            while (j < n && is_missing(series.values[j])) ++j;
            gaps.push_back({i, j - i});
            i = j;
        } else {
            ++i;
        }
    }
    return gaps;
}

FillContext extract_context(const TimeSeries& series, const GapSegment& gap,
                            std::size_t w1, std::size_t w2) {
    FillContext ctx;
    ctx.gap = gap;

    // Walk left from the gap, stopping at another gap or the boundary.
    std::size_t i = gap.start;
    while (i > 0 && ctx.pre_window.size() < w1 && !is_missing(series.values[i - 1])) {
        ctx.pre_window.push_back(series.values[i - 1]);
        --i;
    }
    std::reverse(ctx.pre_window.begin(), ctx.pre_window.end());

    std::size_t j = gap.end();
    while (j < series.size() && ctx.post_window.size() < w2 && !is_missing(series.values[j])) {
        ctx.post_window.push_back(series.values[j]);
        ++j;
    }
    return ctx;
}

TimeSeries reversed(const TimeSeries& series) {
    TimeSeries out = series;
    std::reverse(out.values.begin(), out.values.end());
    return out;
}

}  // namespace gapfill

#pragma once

#include "gapfill/series.hpp"

namespace gapfill {

/// Tunables for the non-learning fillers. The spline is always natural cubic.
struct FillerConfig {
    int poly_degree = 2;
    int sg_window = 9;  // odd, > poly_degree
    int ma_window = 5;
    double kalman_process_var = 1e-2;
    double kalman_obs_var = 1e-1;

    void validate() const;
};

// Every filler returns a gap-free series, leaves observed samples untouched,
// and is deterministic. A series with fewer than 2 observed samples (3 for
// the spline) raises "insufficient data".

/// Straight line between the observed gap edges; boundary gaps extend the
/// nearest observed value.
TimeSeries fill_linear(const TimeSeries& series, const FillerConfig& config = {});

/// Savitzky-Golay style: one least-squares polynomial per missing sample,
/// fit to the sg_window nearest observed samples (ties toward earlier index).
TimeSeries fill_poly_local(const TimeSeries& series, const FillerConfig& config = {});

/// One global least-squares polynomial over all observed samples.
TimeSeries fill_poly_batch(const TimeSeries& series, const FillerConfig& config = {});

/// Two sweeps (left-to-right, right-to-left) where each missing value takes
/// the mean of up to ma_window nearest valid values per side; the sweeps are
/// averaged.
TimeSeries fill_moving_average(const TimeSeries& series, const FillerConfig& config = {});

/// Natural cubic spline through the observed knots; linear extension with the
/// boundary slope outside the knot range.
TimeSeries fill_spline(const TimeSeries& series, const FillerConfig& config = {});

/// Local-level state-space model: forward filter with prediction-only steps
/// across gaps, then an RTS backward smoother.
TimeSeries fill_kalman(const TimeSeries& series, const FillerConfig& config = {});

}  // namespace gapfill

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gapfill/bidir.hpp"
#include "gapfill/csv_io.hpp"
#include "gapfill/fillers.hpp"
#include "gapfill/series.hpp"

#include "json.hpp"

namespace gapfill {

double mae(std::span<const double> actual, std::span<const double> predicted);

struct MapeResult {
    double value = 0.0;       // percentage
    std::size_t excluded = 0; // indices with |actual| <= 1e-9, left out
};
MapeResult mape(std::span<const double> actual, std::span<const double> predicted);

struct MetricPair {
    double mae = 0.0;
    double mape = 0.0;
    std::size_t mape_excluded = 0;
};

/// MAE/MAPE over exactly the masked indices; everything else is ignored.
MetricPair score_restoration(const TimeSeries& clean, const TimeSeries& filled, const Mask& mask);

/// The nine compared fillers.
enum class Method {
    linear,
    poly_local,
    poly_batch,
    moving_average,
    spline,
    kalman,
    ridge_forward,
    ridge_bidir,
    automl_bidir,
};

std::string method_name(Method method);
Method method_from_name(const std::string& name);
const std::vector<Method>& all_methods();

struct MethodOptions {
    FillerConfig filler;
    GapFillPolicy policy;
    CombinerMode combiner_mode = CombinerMode::linear_ramp;
    EvoConfig evo;
};

TimeSeries run_fill_method(const TimeSeries& gapped, Method method, const MethodOptions& options);

struct BenchmarkRow {
    std::string method;
    double mae = std::numeric_limits<double>::quiet_NaN();
    double mape = std::numeric_limits<double>::quiet_NaN();
    std::size_t mape_excluded = 0;
    double forecast_mape = std::numeric_limits<double>::quiet_NaN();
    double deviation = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

/// Fill the gapped series with each method and score against the clean one.
/// A method failure becomes a failed row, not an abort. Rows are sorted by
/// MAE ascending, failed rows last.
std::vector<BenchmarkRow> run_restoration_benchmark(const TimeSeries& clean,
                                                    const TimeSeries& gapped, const Mask& mask,
                                                    const std::vector<Method>& methods,
                                                    const MethodOptions& options);

/// Trend and residuals forecast separately, recombined by linear regression.
Pipeline default_forecast_chain();

/// 400 for full-scale series, round(0.064 * n) below n = 2000.
std::size_t default_tail(std::size_t n);

/// Fit the default forecasting chain on each variant minus the tail, forecast
/// the tail, and report MAPE against the clean tail plus the deviation from
/// the first ("original") variant. Requires tail < n/2.
std::vector<BenchmarkRow> run_forecast_impact(
    const TimeSeries& clean, const std::vector<std::pair<std::string, TimeSeries>>& variants,
    std::size_t tail);

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;
    nlohmann::ordered_json metadata;

    std::string to_csv() const;
    nlohmann::ordered_json to_json() const;
};

/// Restoration scoring plus forecast impact in one report. `tail` = 0 picks
/// the default.
BenchmarkReport run_full_benchmark(const TimeSeries& clean, const TimeSeries& gapped,
                                   const Mask& mask, const std::vector<Method>& methods,
                                   const MethodOptions& options, std::size_t tail = 0);

/// Per-gap fill traces (`method,index,actual,filled`) for external plotting.
std::string plot_data_csv(const TimeSeries& clean, const Mask& mask,
                          const std::vector<std::pair<std::string, TimeSeries>>& variants);

}  // namespace gapfill

#include "gapfill/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gapfill {

namespace {
constexpr double kMapeEpsilon = 1e-9;
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.empty()) throw std::invalid_argument("mae: empty vectors");
    if (actual.size() != predicted.size()) throw std::invalid_argument("mae: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) acc += std::abs(actual[i] - predicted[i]);
    return acc / static_cast<double>(actual.size());
}

MapeResult mape(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.empty()) throw std::invalid_argument("mape: empty vectors");
    if (actual.size() != predicted.size()) throw std::invalid_argument("mape: length mismatch");
    double acc = 0.0;
    std::size_t included = 0, excluded = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (std::abs(actual[i]) <= kMapeEpsilon) {
            ++excluded;
            continue;
        }
        acc += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
        ++included;
    }
    if (included == 0) throw std::runtime_error("mape: all indices excluded by the near-zero rule");
    return {100.0 * acc / static_cast<double>(included), excluded};
}

MetricPair score_restoration(const TimeSeries& clean, const TimeSeries& filled, const Mask& mask) {
    if (clean.size() != filled.size() || clean.size() != mask.size())
        throw std::invalid_argument("score_restoration: length mismatch");
    std::vector<double> a, p;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        a.push_back(clean.values[i]);
        p.push_back(filled.values[i]);
    }
    MetricPair out;
    out.mae = mae(a, p);
    const MapeResult m = mape(a, p);
    out.mape = m.value;
    out.mape_excluded = m.excluded;
    return out;
}

std::string method_name(Method method) {
    switch (method) {
        case Method::linear: return "linear";
        case Method::poly_local: return "poly-local";
        case Method::poly_batch: return "poly-batch";
        case Method::moving_average: return "moving-average";
        case Method::spline: return "spline";
        case Method::kalman: return "kalman";
        case Method::ridge_forward: return "ridge-forward";
        case Method::ridge_bidir: return "ridge-bidir";
        case Method::automl_bidir: return "automl-bidir";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    for (Method m : all_methods())
        if (method_name(m) == name) return m;
    throw std::invalid_argument("unknown method `" + name + "`");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> kAll = {
        Method::linear,        Method::poly_local,  Method::poly_batch,
        Method::moving_average, Method::spline,     Method::kalman,
        Method::ridge_forward, Method::ridge_bidir, Method::automl_bidir,
    };
    return kAll;
}

TimeSeries run_fill_method(const TimeSeries& gapped, Method method, const MethodOptions& options) {
    switch (method) {
        case Method::linear: return fill_linear(gapped, options.filler);
        case Method::poly_local: return fill_poly_local(gapped, options.filler);
        case Method::poly_batch: return fill_poly_batch(gapped, options.filler);
        case Method::moving_average: return fill_moving_average(gapped, options.filler);
        case Method::spline: return fill_spline(gapped, options.filler);
        case Method::kalman: return fill_kalman(gapped, options.filler);
        case Method::ridge_forward:
            return fill_bidirectional(gapped, options.policy, Combiner::ramp(),
                                      ModelSource::single_ridge(), FillStrategy::forward_first);
        case Method::ridge_bidir: {
            const Combiner combiner = options.combiner_mode == CombinerMode::learned_blend
                                          ? Combiner::learned()
                                          : Combiner::ramp();
            return fill_bidirectional(gapped, options.policy, combiner,
                                      ModelSource::single_ridge(), FillStrategy::bidirectional);
        }
        case Method::automl_bidir: {
            const Combiner combiner = options.combiner_mode == CombinerMode::learned_blend
                                          ? Combiner::learned()
                                          : Combiner::ramp();
            return fill_bidirectional(gapped, options.policy, combiner,
                                      ModelSource::automl(options.evo),
                                      FillStrategy::bidirectional);
        }
    }
    throw std::logic_error("unreachable");
}

namespace {

void sort_rows(std::vector<BenchmarkRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
        const bool a_ok = a.status == "ok", b_ok = b.status == "ok";
        if (a_ok != b_ok) return a_ok;
        if (a_ok && a.mae != b.mae) return a.mae < b.mae;
        return a.method < b.method;
    });
}

}  // namespace

std::vector<BenchmarkRow> run_restoration_benchmark(const TimeSeries& clean,
                                                    const TimeSeries& gapped, const Mask& mask,
                                                    const std::vector<Method>& methods,
                                                    const MethodOptions& options) {
    std::vector<BenchmarkRow> rows;
    for (Method method : methods) {
        BenchmarkRow row;
        row.method = method_name(method);
        try {
            const TimeSeries filled = run_fill_method(gapped, method, options);
            const MetricPair score = score_restoration(clean, filled, mask);
            row.mae = score.mae;
            row.mape = score.mape;
            row.mape_excluded = score.mape_excluded;
        } catch (const std::exception& e) {
            row.status = std::string("failed: ") + e.what();
        }
        rows.push_back(std::move(row));
    }
    sort_rows(rows);
    return rows;
}

Pipeline default_forecast_chain() {
    Pipeline p;
    p.nodes.push_back({0, OpKind::trend_extract, {}, {}});
    p.nodes.push_back({1, OpKind::residual_extract, {}, {}});
    p.nodes.push_back({2, OpKind::ridge, {}, {0}});
    p.nodes.push_back({3, OpKind::ridge, {}, {1}});
    p.nodes.push_back({4, OpKind::linear_blend, {}, {2, 3}});
    p.root = 4;
    return p;
}

std::size_t default_tail(std::size_t n) {
    if (n >= 2000) return 400;
    return static_cast<std::size_t>(std::llround(0.064 * static_cast<double>(n)));
}

namespace {

double tail_forecast_mape(const TimeSeries& clean, const TimeSeries& variant, std::size_t tail) {
    const std::size_t n = variant.size();
    TimeSeries train;
    train.values.assign(variant.values.begin(), variant.values.end() - static_cast<std::ptrdiff_t>(tail));

    const std::size_t w = choose_window(train, default_window(train.size()));
    const FittedPipeline fitted = fit_pipeline(default_forecast_chain(), train, w);
    // Extra seed context lets the chain decompose with fully covered windows.
    const std::size_t seed_len = std::min(train.size(), 3 * w + 1);
    const std::vector<double> seed(train.values.end() - static_cast<std::ptrdiff_t>(seed_len),
                                   train.values.end());
    const std::vector<double> forecast = fitted.forecast(seed, tail);

    const std::span<const double> actual{clean.values.data() + (n - tail), tail};
    return mape(actual, forecast).value;
}

}  // namespace

std::vector<BenchmarkRow> run_forecast_impact(
    const TimeSeries& clean, const std::vector<std::pair<std::string, TimeSeries>>& variants,
    std::size_t tail) {
    if (tail == 0 || tail * 2 >= clean.size())
        throw std::invalid_argument("tail must be positive and below half the series length");
    if (variants.empty()) throw std::invalid_argument("no variants given");

    // First row is the reference; its deviation is zero by definition.
    const double base = tail_forecast_mape(clean, variants.front().second, tail);

    std::vector<BenchmarkRow> rows;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        BenchmarkRow row;
        row.method = variants[i].first;
        try {
            row.forecast_mape = i == 0 ? base : tail_forecast_mape(clean, variants[i].second, tail);
            row.deviation = row.forecast_mape - base;
        } catch (const std::exception& e) {
            row.status = std::string("failed: ") + e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

BenchmarkReport run_full_benchmark(const TimeSeries& clean, const TimeSeries& gapped,
                                   const Mask& mask, const std::vector<Method>& methods,
                                   const MethodOptions& options, std::size_t tail) {
    const std::size_t effective_tail = tail != 0 ? tail : default_tail(clean.size());

    std::vector<BenchmarkRow> rows;
    std::vector<std::pair<std::string, TimeSeries>> variants;
    variants.emplace_back("original", clean);
    for (Method method : methods) {
        BenchmarkRow row;
        row.method = method_name(method);
        try {
            TimeSeries filled = run_fill_method(gapped, method, options);
            const MetricPair score = score_restoration(clean, filled, mask);
            row.mae = score.mae;
            row.mape = score.mape;
            row.mape_excluded = score.mape_excluded;
            variants.emplace_back(row.method, std::move(filled));
        } catch (const std::exception& e) {
            row.status = std::string("failed: ") + e.what();
        }
        rows.push_back(std::move(row));
    }

    const auto impact = run_forecast_impact(clean, variants, effective_tail);
    for (const auto& irow : impact) {
        if (irow.method == "original") {
            BenchmarkRow original;
            original.method = "original";
            original.forecast_mape = irow.forecast_mape;
            original.deviation = irow.deviation;
            original.status = irow.status;
            rows.insert(rows.begin(), std::move(original));
            continue;
        }
        for (auto& row : rows) {
            if (row.method != irow.method) continue;
            row.forecast_mape = irow.forecast_mape;
            row.deviation = irow.deviation;
            if (irow.status != "ok" && row.status == "ok") row.status = irow.status;
        }
    }

    // Keep "original" on top; the rest ordered by restoration MAE.
    std::vector<BenchmarkRow> method_rows(rows.begin() + 1, rows.end());
    sort_rows(method_rows);
    BenchmarkReport report;
    report.rows.push_back(rows.front());
    report.rows.insert(report.rows.end(), method_rows.begin(), method_rows.end());

    report.metadata["tail"] = effective_tail;
    report.metadata["mask_size"] = static_cast<std::size_t>(
        std::count(mask.begin(), mask.end(), static_cast<std::uint8_t>(1)));
    report.metadata["series_length"] = clean.size();
    return report;
}

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

std::string BenchmarkReport::to_csv() const {
    std::ostringstream out;
    out << "method,mae,mape,forecast_mape,deviation,status\n";
    for (const auto& row : rows) {
        out << row.method << ',' << cell(row.mae) << ',' << cell(row.mape) << ','
            << cell(row.forecast_mape) << ',' << cell(row.deviation) << ',' << row.status << '\n';
    }
    return out.str();
}

nlohmann::ordered_json BenchmarkReport::to_json() const {
    nlohmann::ordered_json j;
    j["metadata"] = metadata;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json r;
        r["method"] = row.method;
        if (!std::isnan(row.mae)) r["mae"] = row.mae;
        if (!std::isnan(row.mape)) r["mape"] = row.mape;
        r["mape_excluded"] = row.mape_excluded;
        if (!std::isnan(row.forecast_mape)) r["forecast_mape"] = row.forecast_mape;
        if (!std::isnan(row.deviation)) r["deviation"] = row.deviation;
        r["status"] = row.status;
        j["rows"].push_back(std::move(r));
    }
    return j;
}

std::string plot_data_csv(const TimeSeries& clean, const Mask& mask,
                          const std::vector<std::pair<std::string, TimeSeries>>& variants) {
    std::ostringstream out;
    out << "method,index,actual,filled\n";
    for (const auto& [name, filled] : variants) {
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            out << name << ',' << (clean.origin_index + static_cast<std::int64_t>(i)) << ','
                << format_double(clean.values[i]) << ',' << format_double(filled.values[i])
                << '\n';
        }
    }
    return out.str();
}

}  // namespace gapfill

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapfill/lag_models.hpp"
#include "gapfill/series.hpp"

#include "json.hpp"

namespace gapfill {

enum class OpKind { ridge, lasso, knn, trend_extract, residual_extract, linear_blend };

std::string op_name(OpKind op);
OpKind op_from_name(const std::string& name);
bool is_model_op(OpKind op);
bool is_extract_op(OpKind op);

struct PipelineNode {
    int id = 0;
    OpKind op = OpKind::ridge;
    ModelParams params;
    std::vector<int> parents;
};

/**
 * Composite model: a DAG with exactly one sink. Sources either consume lag
 * features of the series (model operations) or expose a decomposition
 * component (trend / residual extraction); downstream nodes consume their
 * parents' predictions.
 */
struct Pipeline {
    std::vector<PipelineNode> nodes;
    int root = -1;

    static Pipeline single(OpKind op, ModelParams params = {});
};

inline constexpr std::size_t kDefaultMaxNodes = 12;

/// Empty result means the pipeline is structurally valid; otherwise the
/// message names the violated rule and node id.
std::optional<std::string> validate_error(const Pipeline& p,
                                          std::size_t max_nodes = kDefaultMaxNodes);
void validate(const Pipeline& p, std::size_t max_nodes = kDefaultMaxNodes);

/// Centered moving average over observed values, window [i-half, i+half]
/// clipped to the array; NaN where the window holds no observed value.
std::vector<double> centered_moving_average(const std::vector<double>& values, std::size_t half);

class FittedPipeline {
public:
    /// Recursive multi-step forecast. The seed must hold at least
    /// window_size() complete values; extra leading context sharpens the
    /// trend/residual decomposition of chains that use it.
    std::vector<double> forecast(std::span<const double> seed_window, std::size_t horizon) const;

    /// Root in-sample prediction per fit-series index (NaN where undefined).
    const std::vector<double>& in_sample_prediction() const;
    double in_sample_mae() const;

    std::size_t window_size() const { return w_; }
    const Pipeline& genome() const { return genome_; }

    /// Fitted atomic model of a single-node model pipeline (tests/tooling).
    const AtomicModel& root_model() const;

private:
    friend FittedPipeline fit_pipeline(const Pipeline&, const TimeSeries&, std::size_t);

    struct FittedNode {
        OpKind op = OpKind::ridge;
        ModelParams params;
        std::vector<std::size_t> parents;        // positions, topo-consistent
        int branch_parent = -1;                  // position of a lone extractor parent
        bool differenced = false;                // trend branches model increments
        double clamp_lo = 0.0, clamp_hi = 0.0;   // branch outputs stay in the
                                                 // training target range
        std::optional<AtomicModel> model;        // model ops
        std::vector<double> blend_coef;          // linear_blend: weights + intercept
        std::vector<double> insample;            // per fit-series index
        std::vector<double> component;           // extractor ops
    };

    Pipeline genome_;
    std::size_t w_ = 0;
    std::size_t half_ = 1;
    std::vector<FittedNode> nodes_;  // topological order
    std::size_t root_pos_ = 0;
    std::vector<double> fit_values_;
};

/**
 * Fit every node in topological order:
 *  - model nodes without parents fit on the series' lag matrix;
 *  - trend_extract exposes a centered moving-average trend (window = w),
 *    residual_extract exposes series minus trend;
 *  - a model node whose only parent is an extractor forecasts that component
 *    from the component's own lag windows;
 *  - other secondary model nodes fit on their parents' in-sample predictions
 *    as features against the series targets;
 *  - linear_blend fits least-squares weights plus intercept over its parents.
 * Node failures are rethrown with the node id attached.
 */
FittedPipeline fit_pipeline(const Pipeline& pipeline, const TimeSeries& series, std::size_t w);

std::vector<double> forecast_pipeline(const FittedPipeline& fitted,
                                      std::span<const double> seed_window, std::size_t horizon);

nlohmann::ordered_json pipeline_to_json(const Pipeline& p, std::size_t w = 0);
Pipeline pipeline_from_json(const nlohmann::ordered_json& j, std::size_t* w_out = nullptr);

}  // namespace gapfill

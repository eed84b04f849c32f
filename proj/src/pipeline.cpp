#include "gapfill/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "gapfill/linalg.hpp"

namespace gapfill {

std::string op_name(OpKind op) {
    switch (op) {
        case OpKind::ridge: return "ridge";
        case OpKind::lasso: return "lasso";
        case OpKind::knn: return "knn";
        case OpKind::trend_extract: return "trend_extract";
        case OpKind::residual_extract: return "residual_extract";
        case OpKind::linear_blend: return "linear_blend";
    }
    return "?";
}

OpKind op_from_name(const std::string& name) {
    if (name == "ridge") return OpKind::ridge;
    if (name == "lasso") return OpKind::lasso;
    if (name == "knn") return OpKind::knn;
    if (name == "trend_extract") return OpKind::trend_extract;
    if (name == "residual_extract") return OpKind::residual_extract;
    if (name == "linear_blend") return OpKind::linear_blend;
    throw std::invalid_argument("unknown operation `" + name + "`");
}

bool is_model_op(OpKind op) {
    return op == OpKind::ridge || op == OpKind::lasso || op == OpKind::knn;
}

bool is_extract_op(OpKind op) {
    return op == OpKind::trend_extract || op == OpKind::residual_extract;
}

Pipeline Pipeline::single(OpKind op, ModelParams params) {
    Pipeline p;
    p.nodes.push_back({0, op, params, {}});
    p.root = 0;
    return p;
}

namespace {

// Topological order over node positions, smallest id first among ready nodes,
// so results never depend on insertion order. Returns empty on a cycle.
std::vector<std::size_t> topo_positions(const Pipeline& p,
                                        const std::map<int, std::size_t>& pos_of) {
    const std::size_t n = p.nodes.size();
    std::vector<std::size_t> remaining_parents(n, 0);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t i = 0; i < n; ++i) {
        remaining_parents[i] = p.nodes[i].parents.size();
        for (int pid : p.nodes[i].parents) children[pos_of.at(pid)].push_back(i);
    }

    std::set<std::pair<int, std::size_t>> ready;  // (id, position)
    for (std::size_t i = 0; i < n; ++i)
        if (remaining_parents[i] == 0) ready.insert({p.nodes[i].id, i});

    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        const auto [id, i] = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(i);
        for (std::size_t c : children[i])
            if (--remaining_parents[c] == 0) ready.insert({p.nodes[c].id, c});
    }
    if (order.size() != n) order.clear();
    return order;
}

}  // namespace

std::optional<std::string> validate_error(const Pipeline& p, std::size_t max_nodes) {
    if (p.nodes.empty()) return "empty pipeline";
    if (p.nodes.size() > max_nodes)
        return "too many nodes (" + std::to_string(p.nodes.size()) + " > " +
               std::to_string(max_nodes) + ")";

    std::map<int, std::size_t> pos_of;
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        if (!pos_of.emplace(p.nodes[i].id, i).second)
            return "duplicate node id " + std::to_string(p.nodes[i].id);
    }
    if (pos_of.find(p.root) == pos_of.end())
        return "root id " + std::to_string(p.root) + " does not exist";

    for (const auto& node : p.nodes) {
        std::set<int> seen;
        for (int pid : node.parents) {
            if (pos_of.find(pid) == pos_of.end())
                return "unknown parent id " + std::to_string(pid) + " (node " +
                       std::to_string(node.id) + ")";
            if (pid == node.id) return "cycle (node " + std::to_string(node.id) + " is its own parent)";
            if (!seen.insert(pid).second)
                return "duplicate parent " + std::to_string(pid) + " (node " +
                       std::to_string(node.id) + ")";
        }
        if (node.op == OpKind::linear_blend && node.parents.size() < 2)
            return "linear_blend requires >= 2 parents (node " + std::to_string(node.id) + ")";
        if (is_extract_op(node.op) && !node.parents.empty())
            return op_name(node.op) + " takes no parents (node " + std::to_string(node.id) + ")";
        if (node.op == OpKind::knn && node.params.k < 1)
            return "knn requires k >= 1 (node " + std::to_string(node.id) + ")";
        if (is_model_op(node.op) && node.params.lambda < 0.0)
            return "negative lambda (node " + std::to_string(node.id) + ")";
    }

    if (topo_positions(p, pos_of).empty() && !p.nodes.empty()) return "cycle";

    std::set<int> with_children;
    for (const auto& node : p.nodes)
        for (int pid : node.parents) with_children.insert(pid);
    std::vector<int> sinks;
    for (const auto& node : p.nodes)
        if (with_children.find(node.id) == with_children.end()) sinks.push_back(node.id);
    if (sinks.size() > 1) {
        std::string msg = "multiple sinks (nodes";
        for (int s : sinks) msg += " " + std::to_string(s);
        return msg + ")";
    }
    if (sinks.size() == 1 && sinks.front() != p.root)
        return "root " + std::to_string(p.root) + " is not the sink";
    return std::nullopt;
}

void validate(const Pipeline& p, std::size_t max_nodes) {
    if (auto err = validate_error(p, max_nodes)) throw std::runtime_error(*err);
}

std::vector<double> centered_moving_average(const std::vector<double>& values, std::size_t half) {
    const std::size_t n = values.size();
    std::vector<double> out(n, kMissing);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t j = lo; j <= hi; ++j) {
            if (!is_missing(values[j])) {
                sum += values[j];
                ++cnt;
            }
        }
        if (cnt > 0) out[i] = sum / static_cast<double>(cnt);
    }
    return out;
}

namespace {

ModelKind model_kind_of(OpKind op) {
    switch (op) {
        case OpKind::ridge: return ModelKind::ridge;
        case OpKind::lasso: return ModelKind::lasso;
        case OpKind::knn: return ModelKind::knn;
        default: throw std::logic_error("not a model op");
    }
}

// Predictions over every index whose lag window is fully observed; the target
// itself need not be observed.
std::vector<double> window_predictions(const AtomicModel& model, const std::vector<double>& values,
                                       std::size_t w) {
    const std::size_t n = values.size();
    std::vector<double> out(n, kMissing);
    std::size_t run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= w && run >= w)
            out[i] = model.predict({values.data() + (i - w), w});
        run = is_missing(values[i]) ? 0 : run + 1;
    }
    return out;
}

}  // namespace

const std::vector<double>& FittedPipeline::in_sample_prediction() const {
    return nodes_[root_pos_].insample;
}

double FittedPipeline::in_sample_mae() const {
    const auto& pred = in_sample_prediction();
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (is_missing(pred[i]) || is_missing(fit_values_[i])) continue;
        acc += std::abs(pred[i] - fit_values_[i]);
        ++cnt;
    }
    if (cnt == 0) throw std::runtime_error("no in-sample predictions");
    return acc / static_cast<double>(cnt);
}

const AtomicModel& FittedPipeline::root_model() const {
    const auto& node = nodes_[root_pos_];
    if (!node.model) throw std::logic_error("root node has no atomic model");
    return *node.model;
}

FittedPipeline fit_pipeline(const Pipeline& pipeline, const TimeSeries& series, std::size_t w) {
    validate(pipeline);
    if (w == 0) throw std::invalid_argument("window size must be positive");

    std::map<int, std::size_t> pos_of;
    for (std::size_t i = 0; i < pipeline.nodes.size(); ++i) pos_of.emplace(pipeline.nodes[i].id, i);
    const auto topo = topo_positions(pipeline, pos_of);

    FittedPipeline fp;
    fp.genome_ = pipeline;
    fp.w_ = w;
    fp.half_ = std::max<std::size_t>(1, w / 2);
    fp.fit_values_ = series.values;
    const std::size_t n = series.size();

    // Nodes are stored in topological order; parent references become
    // positions into that storage.
    std::map<std::size_t, std::size_t> stored_at;  // original position -> topo position
    for (std::size_t k = 0; k < topo.size(); ++k) stored_at[topo[k]] = k;

    fp.nodes_.resize(pipeline.nodes.size());
    for (std::size_t k = 0; k < topo.size(); ++k) {
        const PipelineNode& src = pipeline.nodes[topo[k]];
        auto& node = fp.nodes_[k];
        node.op = src.op;
        node.params = src.params;
        for (int pid : src.parents) node.parents.push_back(stored_at.at(pos_of.at(pid)));
        if (src.parents.size() == 1 && is_extract_op(fp.nodes_[node.parents[0]].op))
            node.branch_parent = static_cast<int>(node.parents[0]);
        if (src.id == pipeline.root) fp.root_pos_ = k;
    }

    for (std::size_t k = 0; k < fp.nodes_.size(); ++k) {
        auto& node = fp.nodes_[k];
        const int node_id = pipeline.nodes[topo[k]].id;
        try {
            if (is_extract_op(node.op)) {
                const auto trend = centered_moving_average(series.values, fp.half_);
                if (node.op == OpKind::trend_extract) {
                    node.component = trend;
                } else {
                    node.component.assign(n, kMissing);
                    for (std::size_t i = 0; i < n; ++i)
                        if (!is_missing(series.values[i]) && !is_missing(trend[i]))
                            node.component[i] = series.values[i] - trend[i];
                }
                node.insample = node.component;
            } else if (node.parents.empty()) {
                // Primary model on the series' own lag windows.
                AtomicModel model(model_kind_of(node.op), node.params);
                model.fit(build_lag_matrix(series, w));
                node.insample = window_predictions(model, series.values, w);
                node.model = std::move(model);
            } else if (node.branch_parent >= 0) {
                // Component forecaster: lag windows and targets from the
                // extractor parent's component series. The trend component is
                // near-integrated, so trend branches model first differences
                // and integrate back; recursing on raw trend lags is unstable.
                const auto& parent = fp.nodes_[node.branch_parent];
                const auto& comp = parent.component;
                node.differenced = parent.op == OpKind::trend_extract;
                AtomicModel model(model_kind_of(node.op), node.params);
                // Both component targets are stationary by construction, so
                // recursed predictions are clamped to the training range; an
                // unconstrained recursion on near-flat windows can run away.
                const auto fit_clamped = [&](const std::vector<double>& values) {
                    const LagMatrix data = build_lag_matrix(values, w);
                    node.clamp_lo = *std::min_element(data.targets.begin(), data.targets.end());
                    node.clamp_hi = *std::max_element(data.targets.begin(), data.targets.end());
                    model.fit(data);
                };
                if (node.differenced) {
                    std::vector<double> diff(n, kMissing);
                    for (std::size_t i = 1; i < n; ++i)
                        if (!is_missing(comp[i]) && !is_missing(comp[i - 1]))
                            diff[i] = comp[i] - comp[i - 1];
                    fit_clamped(diff);
                    const auto dpred = window_predictions(model, diff, w);
                    node.insample.assign(n, kMissing);
                    for (std::size_t i = 1; i < n; ++i)
                        if (!is_missing(dpred[i]) && !is_missing(comp[i - 1]))
                            node.insample[i] =
                                comp[i - 1] + std::clamp(dpred[i], node.clamp_lo, node.clamp_hi);
                } else {
                    fit_clamped(comp);
                    node.insample = window_predictions(model, comp, w);
                    for (double& v : node.insample)
                        if (!is_missing(v)) v = std::clamp(v, node.clamp_lo, node.clamp_hi);
                }
                node.model = std::move(model);
            } else {
                // Stacking: parents' in-sample predictions as features.
                const std::size_t p = node.parents.size();
                std::vector<double> feat;
                std::vector<double> targ;
                std::vector<std::size_t> rows;
                for (std::size_t i = 0; i < n; ++i) {
                    bool ok = !is_missing(series.values[i]);
                    for (std::size_t j = 0; ok && j < p; ++j)
                        ok = !is_missing(fp.nodes_[node.parents[j]].insample[i]);
                    if (!ok) continue;
                    for (std::size_t j = 0; j < p; ++j)
                        feat.push_back(fp.nodes_[node.parents[j]].insample[i]);
                    targ.push_back(series.values[i]);
                    rows.push_back(i);
                }
                if (rows.empty()) throw std::runtime_error("insufficient contiguous data");

                if (node.op == OpKind::linear_blend) {
                    node.blend_coef =
                        linalg::least_squares_affine(feat, rows.size(), p, targ, 1e-10);
                } else {
                    LagMatrix data;
                    data.features = std::move(feat);
                    data.targets = std::move(targ);
                    data.rows = rows.size();
                    data.w = p;
                    AtomicModel model(model_kind_of(node.op), node.params);
                    model.fit(data);
                    node.model = std::move(model);
                }

                node.insample.assign(n, kMissing);
                std::vector<double> x(p);
                for (std::size_t i = 0; i < n; ++i) {
                    bool ok = true;
                    for (std::size_t j = 0; ok && j < p; ++j) {
                        x[j] = fp.nodes_[node.parents[j]].insample[i];
                        ok = !is_missing(x[j]);
                    }
                    if (!ok) continue;
                    if (node.op == OpKind::linear_blend) {
                        double acc = node.blend_coef[p];
                        for (std::size_t j = 0; j < p; ++j) acc += node.blend_coef[j] * x[j];
                        node.insample[i] = acc;
                    } else {
                        node.insample[i] = node.model->predict(x);
                    }
                }
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("node " + std::to_string(node_id) + " (" +
                                     op_name(node.op) + "): " + e.what());
        }
    }
    return fp;
}

std::vector<double> FittedPipeline::forecast(std::span<const double> seed_window,
                                             std::size_t horizon) const {
    if (horizon == 0) throw std::invalid_argument("horizon must be positive");
    if (seed_window.size() < w_)
        throw std::invalid_argument("seed window too short: expected at least " +
                                    std::to_string(w_));
    for (double v : seed_window)
        if (is_missing(v)) throw std::invalid_argument("seed window contains missing values");

    const std::size_t count = nodes_.size();
    const std::size_t len = seed_window.size();
    std::vector<double> ywin(seed_window.end() - static_cast<std::ptrdiff_t>(w_),
                             seed_window.end());

    // Component branches recurse on their own windows, seeded by decomposing
    // the seed. A centered average is undefined near the seed's right edge,
    // so the trend track there is extended linearly with the slope of the
    // smoothed track; with a seed longer than w + 2*half every window value
    // is real. Short seeds fall back to a least-squares line, the phase-
    // immune local trend estimate.
    std::vector<std::vector<double>> branch_win(count);
    std::vector<double> branch_level(count, 0.0);
    std::vector<double> seed_trend;  // trend estimate per seed position, full length
    for (std::size_t k = 0; k < count; ++k) {
        if (nodes_[k].branch_parent < 0) continue;
        if (seed_trend.empty()) {
            const std::vector<double> ctx(seed_window.begin(), seed_window.end());
            if (len >= w_ + 2 * half_ + 1) {
                seed_trend = centered_moving_average(ctx, half_);
                const std::size_t last_full = len - 1 - half_;
                // Drift from the smoothed track itself (oscillation-free).
                const std::size_t span = std::min<std::size_t>(w_, last_full - half_);
                const double slope =
                    span > 0
                        ? (seed_trend[last_full] - seed_trend[last_full - span]) /
                              static_cast<double>(span)
                        : 0.0;
                for (std::size_t p = last_full + 1; p < len; ++p)
                    seed_trend[p] = seed_trend[last_full] +
                                    slope * static_cast<double>(p - last_full);
            } else {
                double slope = 0.0, ybar = 0.0;
                const double tbar = 0.5 * static_cast<double>(len - 1);
                for (double y : ctx) ybar += y;
                ybar /= static_cast<double>(len);
                if (len >= 2) {
                    double sxy = 0.0, sxx = 0.0;
                    for (std::size_t i = 0; i < len; ++i) {
                        const double dt = static_cast<double>(i) - tbar;
                        sxy += dt * (ctx[i] - ybar);
                        sxx += dt * dt;
                    }
                    slope = sxy / sxx;
                }
                seed_trend.resize(len);
                for (std::size_t i = 0; i < len; ++i)
                    seed_trend[i] = ybar + slope * (static_cast<double>(i) - tbar);
            }
        }
        if (nodes_[k].differenced) {
            branch_level[k] = seed_trend[len - 1];
            branch_win[k].resize(w_);
            for (std::size_t i = 0; i < w_; ++i) {
                const std::size_t p = len - w_ + i;
                branch_win[k][i] = p >= 1 ? seed_trend[p] - seed_trend[p - 1]
                                          : (len >= 2 ? seed_trend[1] - seed_trend[0] : 0.0);
            }
        } else if (nodes_[nodes_[k].branch_parent].op == OpKind::trend_extract) {
            branch_win[k].assign(seed_trend.end() - static_cast<std::ptrdiff_t>(w_),
                                 seed_trend.end());
        } else {
            branch_win[k].resize(w_);
            for (std::size_t i = 0; i < w_; ++i) {
                const std::size_t p = len - w_ + i;
                branch_win[k][i] = seed_window[p] - seed_trend[p];
            }
        }
    }

    const auto trailing_mean = [&](std::size_t lo, std::size_t hi_excl) {
        double sum = 0.0;
        for (std::size_t i = lo; i < hi_excl; ++i) sum += ywin[i];
        return sum / static_cast<double>(hi_excl - lo);
    };

    std::vector<double> out;
    out.reserve(horizon);
    std::vector<double> value(count, 0.0);
    for (std::size_t step = 0; step < horizon; ++step) {
        for (std::size_t k = 0; k < count; ++k) {
            const auto& node = nodes_[k];
            if (node.op == OpKind::trend_extract) {
                // Shrunken centered window at the first unknown index.
                value[k] = trailing_mean(w_ - std::min(half_, w_), w_);
            } else if (node.op == OpKind::residual_extract) {
                const std::size_t lo = (w_ - 1) >= half_ ? (w_ - 1) - half_ : 0;
                value[k] = ywin[w_ - 1] - trailing_mean(lo, w_);
            } else if (node.branch_parent >= 0) {
                const double raw =
                    std::clamp(node.model->predict(branch_win[k]), node.clamp_lo, node.clamp_hi);
                value[k] = node.differenced ? branch_level[k] + raw : raw;
            } else if (node.parents.empty()) {
                value[k] = node.model->predict(ywin);
            } else if (node.op == OpKind::linear_blend) {
                double acc = node.blend_coef[node.parents.size()];
                for (std::size_t j = 0; j < node.parents.size(); ++j)
                    acc += node.blend_coef[j] * value[node.parents[j]];
                value[k] = acc;
            } else {
                std::vector<double> x(node.parents.size());
                for (std::size_t j = 0; j < node.parents.size(); ++j)
                    x[j] = value[node.parents[j]];
                value[k] = node.model->predict(x);
            }
        }

        out.push_back(value[root_pos_]);
        ywin.erase(ywin.begin());
        ywin.push_back(value[root_pos_]);
        for (std::size_t k = 0; k < count; ++k) {
            if (nodes_[k].branch_parent < 0) continue;
            branch_win[k].erase(branch_win[k].begin());
            if (nodes_[k].differenced) {
                branch_win[k].push_back(value[k] - branch_level[k]);
                branch_level[k] = value[k];
            } else {
                branch_win[k].push_back(value[k]);
            }
        }
    }
    return out;
}

std::vector<double> forecast_pipeline(const FittedPipeline& fitted,
                                      std::span<const double> seed_window, std::size_t horizon) {
    return fitted.forecast(seed_window, horizon);
}

nlohmann::ordered_json pipeline_to_json(const Pipeline& p, std::size_t w) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();

    std::vector<const PipelineNode*> sorted;
    for (const auto& node : p.nodes) sorted.push_back(&node);
    std::sort(sorted.begin(), sorted.end(),
              [](const PipelineNode* a, const PipelineNode* b) { return a->id < b->id; });

    for (const PipelineNode* node : sorted) {
        nlohmann::ordered_json nj;
        nj["id"] = node->id;
        nj["operation"] = op_name(node->op);
        if (node->op == OpKind::ridge || node->op == OpKind::lasso)
            nj["hyperparameters"] = {{"lambda", node->params.lambda}};
        else if (node->op == OpKind::knn)
            nj["hyperparameters"] = {{"k", node->params.k}};
        nj["parents"] = node->parents;
        j["nodes"].push_back(std::move(nj));
    }
    j["root"] = p.root;
    if (w > 0) j["w"] = w;
    return j;
}

Pipeline pipeline_from_json(const nlohmann::ordered_json& j, std::size_t* w_out) {
    Pipeline p;
    for (const auto& nj : j.at("nodes")) {
        PipelineNode node;
        node.id = nj.at("id").get<int>();
        node.op = op_from_name(nj.at("operation").get<std::string>());
        if (nj.contains("hyperparameters")) {
            const auto& h = nj["hyperparameters"];
            if (h.contains("lambda")) node.params.lambda = h["lambda"].get<double>();
            if (h.contains("k")) node.params.k = h["k"].get<int>();
        }
        node.parents = nj.at("parents").get<std::vector<int>>();
        p.nodes.push_back(std::move(node));
    }
    p.root = j.at("root").get<int>();
    if (w_out) *w_out = j.contains("w") ? j["w"].get<std::size_t>() : 0;
    validate(p);
    return p;
}

}  // namespace gapfill

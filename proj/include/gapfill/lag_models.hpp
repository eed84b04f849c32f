#pragma once

#include <span>
#include <string>
#include <vector>

#include "gapfill/series.hpp"

namespace gapfill {

/**
 * Supervised pairs (window of w past values -> next value), built only from
 * fully observed slices. Row i concatenated with target i is a contiguous
 * slice of the source series.
 */
struct LagMatrix {
    std::vector<double> features;  // rows * w, row-major
    std::vector<double> targets;
    std::size_t rows = 0;
    std::size_t w = 0;

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * w, w};
    }
};

/// Throws "insufficient contiguous data" when no fully observed window exists.
LagMatrix build_lag_matrix(const TimeSeries& series, std::size_t w);
LagMatrix build_lag_matrix(const std::vector<double>& values, std::size_t w);

/// Default lag window: 100 for long series, length/10 (min 3) otherwise.
std::size_t default_window(std::size_t series_length);

enum class ModelKind { ridge, lasso, knn };

std::string model_kind_name(ModelKind kind);

struct ModelParams {
    double lambda = 1e-3;  // ridge / lasso penalty
    int k = 5;             // knn neighbours
};

/**
 * Atomic regression model over lag windows.
 *
 * Linear kinds standardize features and center the target internally; the
 * reported coefficients and all predictions are in original units, with an
 * unpenalized intercept. Lasso is solved by cyclic coordinate descent on the
 * precomputed Gram matrix to tolerance 1e-6. knn predicts the mean target of
 * the k nearest rows (Euclidean), ties broken by lower row index.
 */
class AtomicModel {
public:
    explicit AtomicModel(ModelKind kind, ModelParams params = {});

    void fit(const LagMatrix& data);
    double predict(std::span<const double> window) const;

    /// One-step predictions fed back into the window, `horizon` times.
    std::vector<double> forecast_recursive(std::span<const double> seed_window,
                                           std::size_t horizon) const;

    bool is_fitted() const { return fitted_; }
    ModelKind kind() const { return kind_; }
    const ModelParams& params() const { return params_; }
    std::size_t window_size() const { return w_; }
    const std::vector<double>& coefficients() const { return coef_; }
    double intercept() const { return intercept_; }

private:
    double predict_linear(std::span<const double> window) const;
    double predict_knn(std::span<const double> window) const;
    void fit_ridge(const LagMatrix& data);
    void fit_lasso(const LagMatrix& data);

    ModelKind kind_;
    ModelParams params_;
    bool fitted_ = false;
    std::size_t w_ = 0;

    std::vector<double> coef_;  // original units
    double intercept_ = 0.0;

    LagMatrix train_;  // knn only
};

}  // namespace gapfill

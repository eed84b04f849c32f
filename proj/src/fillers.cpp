#include "gapfill/fillers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gapfill/linalg.hpp"

namespace gapfill {

namespace {

std::vector<std::size_t> observed_indices(const TimeSeries& series) {
    std::vector<std::size_t> idx;
    idx.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        if (!is_missing(series.values[i])) idx.push_back(i);
    return idx;
}

void require_observed(const std::vector<std::size_t>& obs, std::size_t minimum) {
    if (obs.size() < minimum) throw std::runtime_error("insufficient data");
}

// Degree-d least-squares polynomial through (t, y) pairs, evaluated at t_eval.
// Abscissas are shifted to t_eval and rescaled to [-1, 1] before solving.
double poly_eval_ls(const std::vector<double>& t, const std::vector<double>& y, int degree,
                    double t_eval) {
    const std::size_t m = t.size();
    const int d = std::min<int>(degree, static_cast<int>(m) - 1);
    double scale = 1.0;
    for (double ti : t) scale = std::max(scale, std::abs(ti - t_eval));

    const std::size_t cols = static_cast<std::size_t>(d) + 1;
    std::vector<double> gram(cols * cols, 0.0);
    std::vector<double> rhs(cols, 0.0);
    std::vector<double> basis(cols);
    for (std::size_t r = 0; r < m; ++r) {
        const double u = (t[r] - t_eval) / scale;
        basis[0] = 1.0;
        for (std::size_t c = 1; c < cols; ++c) basis[c] = basis[c - 1] * u;
        for (std::size_t i = 0; i < cols; ++i) {
            for (std::size_t j = i; j < cols; ++j) gram[i * cols + j] += basis[i] * basis[j];
            rhs[i] += basis[i] * y[r];
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < i; ++j) gram[i * cols + j] = gram[j * cols + i];

    const auto coef = linalg::solve_spd(std::move(gram), std::move(rhs));
    return coef[0];  // u = 0 at t_eval
}

}  // namespace

void FillerConfig::validate() const {
    if (poly_degree < 0) throw std::invalid_argument("poly_degree must be >= 0");
    if (sg_window <= poly_degree) throw std::invalid_argument("sg_window must exceed poly_degree");
    if (sg_window % 2 == 0) throw std::invalid_argument("sg_window must be odd");
    if (ma_window < 1) throw std::invalid_argument("ma_window must be positive");
    if (!(kalman_process_var > 0.0) || !(kalman_obs_var > 0.0))
        throw std::invalid_argument("kalman variances must be positive");
}

TimeSeries fill_linear(const TimeSeries& series, const FillerConfig& config) {
    config.validate();
    const auto obs = observed_indices(series);
    // A single observed sample still defines the constant boundary extension.
    require_observed(obs, 1);

    TimeSeries out = series;
    const std::size_t first = obs.front(), last = obs.back();
    for (std::size_t i = 0; i < first; ++i) out.values[i] = series.values[first];
    for (std::size_t i = last + 1; i < out.size(); ++i) out.values[i] = series.values[last];

    for (std::size_t k = 0; k + 1 < obs.size(); ++k) {
        const std::size_t a = obs[k], b = obs[k + 1];
        if (b == a + 1) continue;
        const double ya = series.values[a], yb = series.values[b];
        const double step = (yb - ya) / static_cast<double>(b - a);
        for (std::size_t i = a + 1; i < b; ++i)
            out.values[i] = ya + step * static_cast<double>(i - a);
    }
    return out;
}

TimeSeries fill_poly_local(const TimeSeries& series, const FillerConfig& config) {
    config.validate();
    const auto obs = observed_indices(series);
    require_observed(obs, 2);

    TimeSeries out = series;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!is_missing(series.values[i])) continue;

        // Nearest sg_window observed samples by |t - i|, ties toward earlier t.
        // obs is sorted, so scan outward from the insertion point.
        const auto it = std::lower_bound(obs.begin(), obs.end(), i);
        std::size_t left = static_cast<std::size_t>(it - obs.begin());  // first obs > i
        std::size_t right = left;
        std::vector<double> t, y;
        const std::size_t want = std::min<std::size_t>(config.sg_window, obs.size());
        while (t.size() < want) {
            const bool has_l = left > 0, has_r = right < obs.size();
            bool take_left;
            if (has_l && has_r) {
                const std::size_t dl = i - obs[left - 1], dr = obs[right] - i;
                take_left = dl <= dr;
            } else {
                take_left = has_l;
            }
            const std::size_t pick = take_left ? obs[--left] : obs[right++];
            t.push_back(static_cast<double>(pick));
            y.push_back(series.values[pick]);
        }
        out.values[i] = poly_eval_ls(t, y, config.poly_degree, static_cast<double>(i));
    }
    return out;
}

TimeSeries fill_poly_batch(const TimeSeries& series, const FillerConfig& config) {
    config.validate();
    const auto obs = observed_indices(series);
    require_observed(obs, 2);

    // Indices rescaled to [-1, 1]; raw Vandermonde systems fall apart at n~6000.
    const double n1 = static_cast<double>(series.size() - 1);
    const auto to_u = [n1](std::size_t i) {
        return n1 == 0.0 ? 0.0 : 2.0 * static_cast<double>(i) / n1 - 1.0;
    };

    const int d = std::min<int>(config.poly_degree, static_cast<int>(obs.size()) - 1);
    const std::size_t cols = static_cast<std::size_t>(d) + 1;
    std::vector<double> gram(cols * cols, 0.0), rhs(cols, 0.0), basis(cols);
    for (std::size_t k : obs) {
        const double u = to_u(k);
        basis[0] = 1.0;
        for (std::size_t c = 1; c < cols; ++c) basis[c] = basis[c - 1] * u;
        for (std::size_t i = 0; i < cols; ++i) {
            for (std::size_t j = i; j < cols; ++j) gram[i * cols + j] += basis[i] * basis[j];
            rhs[i] += basis[i] * series.values[k];
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < i; ++j) gram[i * cols + j] = gram[j * cols + i];
    const auto coef = linalg::solve_spd(std::move(gram), std::move(rhs));

    TimeSeries out = series;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!is_missing(series.values[i])) continue;
        const double u = to_u(i);
        double acc = 0.0;
        for (std::size_t c = cols; c-- > 0;) acc = acc * u + coef[c];
        out.values[i] = acc;
    }
    return out;
}

TimeSeries fill_moving_average(const TimeSeries& series, const FillerConfig& config) {
    config.validate();
    const auto obs = observed_indices(series);
    require_observed(obs, 2);
    const std::size_t n = series.size();
    const std::size_t win = static_cast<std::size_t>(config.ma_window);

    // One sweep: missing values take the mean of up to `win` nearest valid
    // values per side, where "valid" means observed or already filled in this
    // sweep. `forward` selects the sweep direction.
    const auto sweep = [&](bool forward) {
        std::vector<double> v = series.values;
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t i = forward ? s : n - 1 - s;
            if (!is_missing(v[i])) continue;
            double sum = 0.0;
            std::size_t cnt = 0;
            std::size_t taken = 0;
            for (std::size_t j = i; j-- > 0 && taken < win;) {
                if (!is_missing(v[j])) {
                    sum += v[j];
                    ++cnt;
                    ++taken;
                }
            }
            taken = 0;
            for (std::size_t j = i + 1; j < n && taken < win; ++j) {
                if (!is_missing(v[j])) {
                    sum += v[j];
                    ++cnt;
                    ++taken;
                }
            }
            if (cnt > 0) v[i] = sum / static_cast<double>(cnt);
        }
        return v;
    };

    const auto pass_lr = sweep(true);
    const auto pass_rl = sweep(false);

    TimeSeries out = series;
    for (std::size_t i = 0; i < n; ++i)
        if (is_missing(series.values[i])) out.values[i] = 0.5 * (pass_lr[i] + pass_rl[i]);
    return out;
}

TimeSeries fill_spline(const TimeSeries& series, const FillerConfig& config) {
    config.validate();
    const auto obs = observed_indices(series);
    require_observed(obs, 3);
    const std::size_t m = obs.size();

    std::vector<double> x(m), y(m);
    for (std::size_t k = 0; k < m; ++k) {
        x[k] = static_cast<double>(obs[k]);
        y[k] = series.values[obs[k]];
    }

    // Second derivatives M_k from the natural-spline tridiagonal system
    // (Thomas algorithm); M_0 = M_{m-1} = 0.
    std::vector<double> h(m - 1);
    for (std::size_t k = 0; k + 1 < m; ++k) h[k] = x[k + 1] - x[k];

    std::vector<double> diag(m, 1.0), upper(m, 0.0), rhs(m, 0.0), second(m, 0.0);
    for (std::size_t k = 1; k + 1 < m; ++k) {
        diag[k] = (h[k - 1] + h[k]) / 3.0;
        upper[k] = h[k] / 6.0;
        rhs[k] = (y[k + 1] - y[k]) / h[k] - (y[k] - y[k - 1]) / h[k - 1];
    }
    for (std::size_t k = 2; k + 1 < m; ++k) {
        const double f = (h[k - 1] / 6.0) / diag[k - 1];
        diag[k] -= f * upper[k - 1];
        rhs[k] -= f * rhs[k - 1];
    }
    for (std::size_t k = m - 2; k >= 1; --k) {
        second[k] = (rhs[k] - upper[k] * second[k + 1]) / diag[k];
        if (k == 1) break;
    }

    const auto eval_segment = [&](std::size_t k, double xv) {
        const double hk = h[k];
        const double a = (x[k + 1] - xv) / hk, b = (xv - x[k]) / hk;
        return a * y[k] + b * y[k + 1] +
               ((a * a * a - a) * second[k] + (b * b * b - b) * second[k + 1]) * hk * hk / 6.0;
    };
    const double slope_lo = (y[1] - y[0]) / h[0] - h[0] * second[1] / 6.0;
    const double slope_hi =
        (y[m - 1] - y[m - 2]) / h[m - 2] + h[m - 2] * second[m - 2] / 6.0;

    TimeSeries out = series;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!is_missing(series.values[i])) continue;
        const double xv = static_cast<double>(i);
        if (xv < x.front()) {
            out.values[i] = y.front() + slope_lo * (xv - x.front());
        } else if (xv > x.back()) {
            out.values[i] = y.back() + slope_hi * (xv - x.back());
        } else {
            const auto it = std::upper_bound(x.begin(), x.end(), xv);
            const std::size_t k = std::min<std::size_t>(m - 2, it - x.begin() - 1);
            out.values[i] = eval_segment(k, xv);
        }
    }
    return out;
}

TimeSeries fill_kalman(const TimeSeries& series, const FillerConfig& config) {
    config.validate();
    const auto obs = observed_indices(series);
    // One observation is enough: the smoother continues it as a constant.
    require_observed(obs, 1);

    const double q = config.kalman_process_var;
    const double r = config.kalman_obs_var;
    const std::size_t n = series.size();
    const std::size_t first = obs.front();

    // Forward pass starting at the first observation; the level is initialized
    // there with posterior variance r (the diffuse-prior limit after one update).
    std::vector<double> mean_pred(n, 0.0), var_pred(n, 0.0);
    std::vector<double> mean_filt(n, 0.0), var_filt(n, 0.0);
    mean_filt[first] = series.values[first];
    var_filt[first] = r;
    for (std::size_t t = first + 1; t < n; ++t) {
        mean_pred[t] = mean_filt[t - 1];
        var_pred[t] = var_filt[t - 1] + q;
        if (is_missing(series.values[t])) {
            mean_filt[t] = mean_pred[t];
            var_filt[t] = var_pred[t];
        } else {
            const double gain = var_pred[t] / (var_pred[t] + r);
            mean_filt[t] = mean_pred[t] + gain * (series.values[t] - mean_pred[t]);
            var_filt[t] = (1.0 - gain) * var_pred[t];
        }
    }

    // RTS backward smoother.
    std::vector<double> smooth(n, 0.0);
    smooth[n - 1] = mean_filt[n - 1];
    for (std::size_t t = n - 1; t-- > first;) {
        const double c = var_filt[t] / var_pred[t + 1];
        smooth[t] = mean_filt[t] + c * (smooth[t + 1] - mean_pred[t + 1]);
    }

    TimeSeries out = series;
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_missing(series.values[i])) continue;
        out.values[i] = i < first ? smooth[first] : smooth[i];
    }
    return out;
}

}  // namespace gapfill

#include "gapfill/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gapfill::linalg {

std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::invalid_argument("solve_spd: dimension mismatch");

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a[i * n + i]));
    const double tiny = std::max(max_diag, 1.0) * 1e-13;

    // In-place Cholesky, lower triangle.
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > tiny)) throw std::runtime_error("singular system");
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }

    // L z = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    // L^T x = z
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return b;
}

std::vector<double> least_squares_affine(std::span<const double> x, std::size_t rows,
                                         std::size_t cols, std::span<const double> y,
                                         double ridge) {
    if (rows == 0 || y.size() != rows || x.size() != rows * cols)
        throw std::invalid_argument("least_squares_affine: dimension mismatch");

    const std::size_t m = cols + 1;  // intercept appended as the last column
    std::vector<double> gram(m * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    std::vector<double> row(m, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) row[c] = x[r * cols + c];
        row[cols] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i; j < m; ++j) gram[i * m + j] += row[i] * row[j];
            rhs[i] += row[i] * y[r];
        }
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < i; ++j) gram[i * m + j] = gram[j * m + i];
    if (ridge > 0.0 && cols > 0) {
        double diag_mean = 0.0;
        for (std::size_t i = 0; i < cols; ++i) diag_mean += gram[i * m + i];
        diag_mean = std::max(diag_mean / static_cast<double>(cols), 1.0);
        for (std::size_t i = 0; i < cols; ++i) gram[i * m + i] += ridge * diag_mean;
    }

    return solve_spd(std::move(gram), std::move(rhs));
}

}  // namespace gapfill::linalg

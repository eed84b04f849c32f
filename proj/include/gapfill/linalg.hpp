#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gapfill::linalg {

/// Solve the symmetric positive definite system A x = b via Cholesky.
/// `a` is row-major n*n and is consumed. Throws std::runtime_error
/// ("singular system") when a pivot collapses.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b);

/// Least-squares fit of y against the columns of x (row-major rows*cols)
/// plus an intercept, via normal equations. `ridge` adds a Tikhonov term on
/// the non-intercept coefficients, scaled by the mean Gram diagonal so that
/// a value like 1e-10 keeps collinear columns solvable without biasing the
/// fit. Returns cols coefficients followed by the intercept.
std::vector<double> least_squares_affine(std::span<const double> x, std::size_t rows,
                                         std::size_t cols, std::span<const double> y,
                                         double ridge = 0.0);

}  // namespace gapfill::linalg

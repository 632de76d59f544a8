#pragma once

#include "splinebayes/splinefit.hpp"

#include <Eigen/Dense>

namespace splinebayes {

/// Outcome of a generalized cross-validation sweep.
struct GcvResult {
    double lambda = 0.0;      ///< grid minimizer of the GCV score
    double h_gcv = 0.0;       ///< λ^{1/(2m)} for the selected λ
    Eigen::VectorXd lambdas;  ///< grid actually scored, ascending
    Eigen::VectorXd scores;   ///< GCV scores; NaN where the point was skipped
};

/// Log-spaced λ grid, ascending; defaults cover [1e-8, 10] with 40 points.
Eigen::VectorXd default_lambda_grid(int size = 40, double lo = 1e-8,
                                    double hi = 10.0);

/** GCV score at one λ:
      V(λ) = (1/n) Σ_i (y_i − Ȧ(η̂_i))² / Ä(η̂_i)   /   [ (1/n) tr(I − A_λ) ]²
    with the influence trace tr(A_λ) = tr((G_w + λΓ)⁻¹ G_w),
    G_w = (1/n) Φᵀ W Φ evaluated at the fit for that λ.  For the Gaussian
    model W = I and the numerator is the mean squared residual.

    Throws NumericalError when the denominator degenerates (the smoother
    interpolates) and propagates fit errors. */
double gcv_score(const ExpFamilyModel& model, const EigenSystem& es,
                 const Dataset& data, double lambda);

/** Scores every grid point and returns the minimizer; exact ties go to the
    larger λ. Grid points whose fit fails or whose score degenerates are
    skipped (NaN in `scores`); if every point is skipped, throws
    NumericalError. */
GcvResult select_lambda_gcv(const ExpFamilyModel& model, const EigenSystem& es,
                            const Dataset& data,
                            const Eigen::VectorXd& grid);

/// Sweep over the default grid.
GcvResult select_lambda_gcv(const ExpFamilyModel& model, const EigenSystem& es,
                            const Dataset& data);

/** Rescales a cross-validated bandwidth to the one the tuning prior expects:
      h = h_gcv^{(2m+1)/(2m+β)}.
    Requires h_gcv ∈ (0,1), m >= 1, β > 1. */
double prior_h_from_gcv(double h_gcv, int m, double beta);

/// λ = h^{2m}, the smoothing parameter that realizes bandwidth h.
double lambda_from_bandwidth(double h, int m);

} // namespace splinebayes

#pragma once

#include "splinebayes/eigensystem.hpp"
#include "splinebayes/expfamily.hpp"

#include <Eigen/Dense>

namespace splinebayes {

/// Paired observations (x_i, y_i) with covariates in [0,1].
struct Dataset {
    Eigen::VectorXd x;
    Eigen::VectorXd y;

    Eigen::Index size() const { return x.size(); }
};

/// Result of a penalized maximum-likelihood fit.
struct SplineFit {
    Eigen::VectorXd coeffs;   ///< basis coefficients of f̂
    double lambda = 0.0;      ///< smoothing parameter used
    double h = 0.0;           ///< bandwidth λ^{1/(2m)}
    int iterations = 0;       ///< Newton steps taken (1 for the Gaussian solve)
    double grad_norm = 0.0;   ///< ‖gradient‖₂ at the returned coefficients
    double objective = 0.0;   ///< penalized mean log-likelihood at the optimum
};

struct FitOptions {
    double tol = 1e-9;   ///< stop when ‖grad‖ ≤ tol·(1+|objective|)
    int max_iter = 100;  ///< Newton iteration budget
};

/** Penalized mean log-likelihood
      ℓ_λ(c) = (1/n) Σ_i [ y_i η_i − A(η_i) ] − (λ/2) Σ_ν γ_ν c_ν²,
    with η_i = Σ_ν c_ν φ_ν(x_i). */
double objective_value(const ExpFamilyModel& model, const EigenSystem& es,
                       const Dataset& data, double lambda,
                       const Eigen::VectorXd& coeffs);

/** Canonically sorted observations with their basis evaluations, so a sweep
    over many λ values pays for the design matrix once. */
struct PreparedDesign {
    Dataset obs;          ///< observations sorted by x, ties broken by y
    Eigen::MatrixXd phi;  ///< obs.size() × N matrix of φ_ν(x_i)
};

/// Validates, sorts, and evaluates the basis at the covariates.
PreparedDesign prepare_design(const ExpFamilyModel& model,
                              const EigenSystem& es, const Dataset& data);

/** Maximizes ℓ_λ. The Gaussian model uses the exact normal-equation solve;
    the other models run damped Newton from c = 0 with step halving.

    Observations are reordered canonically (by x, then y) before assembly, so
    the result is invariant under permutations of the input — bit for bit.

    Throws DomainError for invalid data (x outside [0,1], y outside the
    model's support, size mismatch, λ < 0), ConvergenceError when Newton
    exhausts its budget or the linear predictor escapes the model's stable
    range (e.g. separable binary data at λ = 0), and NumericalError when the
    normal equations are singular. */
SplineFit fit_penalized_mle(const ExpFamilyModel& model, const EigenSystem& es,
                            const Dataset& data, double lambda,
                            const FitOptions& opts = {});

/// Same optimization on an already prepared design.
SplineFit fit_prepared(const ExpFamilyModel& model, const EigenSystem& es,
                       const PreparedDesign& design, double lambda,
                       const FitOptions& opts = {});

/// f̂(z) = Σ_ν c_ν φ_ν(z).
double evaluate_fit(const EigenSystem& es, const Eigen::VectorXd& coeffs,
                    double z);

/// Vectorized evaluation over a grid.
Eigen::VectorXd evaluate_fit(const EigenSystem& es,
                             const Eigen::VectorXd& coeffs,
                             const Eigen::VectorXd& z);

/// Validates a dataset against a model; throws DomainError on violations.
void validate_dataset(const ExpFamilyModel& model, const Dataset& data);

} // namespace splinebayes

#pragma once

#include "splinebayes/eigensystem.hpp"
#include "splinebayes/rng.hpp"
#include "splinebayes/splinefit.hpp"

#include <Eigen/Dense>
#include <cstdint>

namespace splinebayes {

/** Coefficient-wise Gaussian prior precisions calibrated to the penalty:
      τ_ν² = 1/σ²              for ν <= m (null space),
      τ_ν² = ρ_ν^{1+β/(2m)}    for ν > m.
    The exponent couples the prior decay to the penalty eigenvalues so that a
    single bandwidth tunes both. */
struct TuningPrior {
    Eigen::VectorXd tau2;  ///< prior precisions, one per basis function
    double beta = 2.0;     ///< tail-decay exponent (> 1)
    double sigma2 = 1.0;   ///< null-space prior variance (> 0)
};

/// Builds the prior for a basis; requires β > 1 and σ² > 0.
TuningPrior build_prior(const EigenSystem& es, double beta = 2.0,
                        double sigma2 = 1.0);

/** Gaussian pseudo-posterior for the basis coefficients: independent
    components  c_ν | data ~ N( a_ν f̂_ν , b_ν² )  with
      a_ν = n(1+λγ_ν) / (τ_ν² + n(1+λγ_ν)) ∈ (0,1],
      b_ν = (τ_ν² + n(1+λγ_ν))^{-1/2},
    where f̂ is the penalized MLE. a_ν = 1 exactly in the flat-prior limit
    (τ² = 0); the tuning prior keeps a_ν < 1 strictly. */
struct PosteriorGP {
    Eigen::VectorXd center;  ///< shrunken coefficients ã = a ∘ f̂
    Eigen::VectorXd shrink;  ///< a_ν
    Eigen::VectorXd scale;   ///< b_ν
    double lambda = 0.0;     ///< smoothing parameter of the underlying fit
    long n = 0;              ///< sample size behind the fit
};

/// Pseudo-posterior under the tuning prior.
PosteriorGP build_posterior(const EigenSystem& es, const TuningPrior& prior,
                            const SplineFit& fit, long n);

/// Flat (no-prior) limit: a ≡ 1, b_ν² = 1/(n(1+λγ_ν)).
PosteriorGP flat_posterior(const EigenSystem& es, const SplineFit& fit,
                           long n);

/// One coefficient draw: center + scale ∘ η with η standard normal.
Eigen::VectorXd sample_posterior(const PosteriorGP& post, Rng& rng);

/** Log density ratio between the bandwidth-tilted prior and the base prior,
    evaluated at a coefficient vector f:
      value = Σ_ν ½ log(1 + nλ γ_ν / τ_ν²) − (nλ/2) Σ_ν γ_ν f_ν².
    The basis is finite, so the ν-sum is truncated at N; `tail_bound` bounds
    the discarded Σ_{ν>N} ½ log(1 + nλ ρ_ν^{−β/(2m)}) assuming the
    eigenvalues keep growing at least like ρ_N (ν/N)^{2m} beyond the
    truncation (Weyl rate). */
struct LogRnResult {
    double value = 0.0;
    double tail_bound = 0.0;
};

LogRnResult log_rn_derivative(const EigenSystem& es, const TuningPrior& prior,
                              double lambda, long n,
                              const Eigen::VectorXd& coeffs);

} // namespace splinebayes

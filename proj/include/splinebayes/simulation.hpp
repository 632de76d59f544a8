#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splinebayes/credible.hpp"
#include "splinebayes/expfamily.hpp"
#include "splinebayes/rng.hpp"
#include "splinebayes/splinefit.hpp"

namespace splinebayes {

/// How the smoothing parameter is chosen for each replicate.
enum class TuningRule {
  gcv,      ///< sweep the default lambda grid and keep the GCV minimizer
  fixed_h,  ///< use lambda = h^(2m) for a caller-supplied bandwidth h
};

/// Which pseudo-posterior the coverage harness builds after fitting.
enum class PosteriorMode {
  flat,    ///< no-prior limit: shrinkage 1, variances 1/(n(1+lambda*gamma))
  tuning,  ///< tuning-prior posterior with tau_nu^2 from (beta, sigma2)
};

/// How the GCV bandwidth feeds the fit/posterior smoothing parameter.
enum class LambdaRule {
  raw,     ///< fit and posterior both use the GCV lambda as-is
  mapped,  ///< remap h_gcv to the prior bandwidth h^((2m+1)/(2m+beta)) first
};

/// Full description of one coverage experiment.
///
/// The defaults reproduce the desk-scale study: Gaussian responses at
/// uniform design points, truth 3*Beta(30,17) + 2*Beta(3,11), GCV-tuned
/// lambda shared by the fit and a flat-limit posterior, Monte Carlo
/// region radii, 500 replicates at alpha = 0.05.
struct SimConfig {
  std::string model = "gaussian";  ///< response family (expfamily parse names)
  int m = 2;                       ///< penalty derivative order
  double beta = 2.0;               ///< prior decay exponent (> 1)
  double sigma2 = 1.0;             ///< prior scale for the null-space coords
  double tau_omega = 2.0;          ///< weak-norm log exponent

  std::vector<long> sample_sizes = {512};
  int replications = 500;
  std::vector<double> alphas = {0.05};

  TuningRule tuning = TuningRule::gcv;
  double fixed_h = 0.0;  ///< bandwidth when tuning == fixed_h
  PosteriorMode posterior = PosteriorMode::flat;
  LambdaRule lambda_rule = LambdaRule::raw;

  RadiusMethod radius_method = RadiusMethod::monte_carlo;
  int mc_draws = 4000;          ///< Monte Carlo draws per region radius
  double radius_override = 0.0; ///< > 0: test hook, replaces every radius
  int truncation = 0;           ///< basis size N; 0 = default_truncation(n)
  int max_iterations = 100;     ///< Newton cap per fit
  std::uint64_t seed = 1;       ///< base seed; replicates use derived streams

  /// Evaluation-functional z grid; empty disables eval rows.
  std::vector<double> eval_points;
  /// Integral-functional upper endpoints z0 (intervals [0, z0]); empty disables.
  std::vector<double> integral_points;

  std::string coverage_csv;  ///< output path; empty skips the write
  std::string curve_csv;     ///< mean-curve output path; empty skips the write
};

/// One aggregated row of a coverage experiment.
struct CoverageRecord {
  long n = 0;
  double alpha = 0.0;
  /// "CR", "MCR", "MCR_restricted", "eval@<z>", or "integral@<z0>".
  std::string set_kind;
  double coverage = 0.0;     ///< covering replicates / successful replicates
  double mean_radius = 0.0;  ///< mean radius over successful replicates
  int replications = 0;      ///< configured replicate count
  int failures = 0;          ///< replicates whose fit/tuning failed
  std::string radius_method;
};

/// The simulation truth: 3 Beta(30,17) + 2 Beta(3,11) densities.
///
/// Evaluated through log-gamma so the large Beta(30,17) normalizing
/// constant stays accurate. Vanishes at both endpoints.
/// Throws DomainError outside [0,1].
double true_function_beta_mix(double z);

/// Draw one replicate dataset: X ~ Uniform(0,1) iid, responses sampled
/// from the configured family at natural parameter f0(X).
Dataset generate_dataset(const SimConfig& config, long n, Rng& rng);

/// The 15-point evaluation grid i/16, i = 1..15.
std::vector<double> default_eval_grid();

/// Run the full coverage experiment described by `config`.
///
/// Per replicate: generate data, tune lambda, fit, build the posterior,
/// compute region radii and functional intervals, and test whether the
/// truth (its basis projection for regions, its exact values for
/// functionals) is covered. Rows aggregate per (n, alpha, set kind) and
/// are sorted by those keys. Replicates whose fit or tuning throws are
/// counted as failures and excluded; a failure rate above 5% for any n
/// aborts with ConvergenceError. Output is byte-identical for identical
/// configs regardless of worker count; SPLINEBAYES_THREADS caps workers.
std::vector<CoverageRecord> run_coverage_experiment(const SimConfig& config);

/// Write records as coverage.csv (header + one row per record).
void write_coverage_csv(const std::vector<CoverageRecord>& records,
                        const std::string& path);

/// Region-coverage preset: n from 20 to 2000, alpha 0.05, 500 replicates.
SimConfig preset_region_coverage();

/// Functional-interval preset: n in {2^5, 2^7, 2^8, 2^9}, the 15-point
/// evaluation grid, and the integral functional over [0, 1/2].
SimConfig preset_functional_coverage();

/// Region preset at the full 1000-replicate scale.
SimConfig preset_full_scale();

}  // namespace splinebayes

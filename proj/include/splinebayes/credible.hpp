#pragma once

#include "splinebayes/posterior.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace splinebayes {

/** Bounded linear functional F(f) = Σ_ν c_ν F(φ_ν), stored through its
    action on the basis of one EigenSystem. */
class LinearFunctional {
public:
    /// Point evaluation F(f) = f(z).
    static LinearFunctional evaluation(const EigenSystem& es, double z);
    /// F(f) = ∫_a^b f(x) dx (plain Lebesgue measure), 0 <= a < b <= 1.
    static LinearFunctional integral(const EigenSystem& es, double a, double b,
                                     int quad_order = 2048);
    /// F(f) = ∫_0^1 f(x) w(x) dx for a bounded weight w.
    static LinearFunctional weighted(const EigenSystem& es,
                                     const std::function<double(double)>& w,
                                     int quad_order = 2048);

    /// The vector (F(φ_1), …, F(φ_N)).
    const Eigen::VectorXd& basis_values() const { return values_; }
    /// Applies the functional to a coefficient vector.
    double apply(const Eigen::VectorXd& coeffs) const;

private:
    explicit LinearFunctional(Eigen::VectorXd v) : values_(std::move(v)) {}
    Eigen::VectorXd values_;
};

/// Which credible set geometry to use.
enum class RegionKind {
    strong,          ///< ball in the V-norm
    weak,            ///< ball in the ω-weighted norm
    weak_restricted  ///< weak ball intersected with a roughness cap J(f) <= M
};

enum class RadiusMethod { monte_carlo, asymptotic };

/// How to compute a credible radius.
struct RadiusSpec {
    RadiusMethod method = RadiusMethod::monte_carlo;
    double alpha = 0.05;        ///< miscoverage level, in (0,1)
    int mc_draws = 10000;       ///< Monte Carlo sample size (>= 100)
    double tau_omega = 2.0;     ///< log-exponent of the weak-norm weights
    std::uint64_t seed = 0;     ///< stream seed; fixed seed ⇒ identical radii
};

/// ζ_k = Σ_ν (n b_ν²)^k = Σ_ν (1 + λγ_ν + τ_ν²/n)^{-k}.
double zeta(const PosteriorGP& post, int k);

/// θ_k = sqrt( Σ_ν F(φ_ν)² b_ν^{2k} ).
double theta(const PosteriorGP& post, const LinearFunctional& F, int k);

/** (1−α) credible radius around the posterior center.

    Monte Carlo: the (1−α) sample quantile (order statistic ⌈(1−α)K⌉) of the
    posterior norm ‖f − f̃‖, with the K draws generated in 50 fixed chunks
    seeded by mix_seed(spec.seed, chunk) so the result is independent of any
    execution order.

    Asymptotic: for the strong norm, sqrt((ζ₁ + sqrt(2ζ₂) z_{1−α})/n); for
    the weak norm, sqrt(c_α/n) where c_α is the (1−α) quantile of the
    limiting series Σ_ν ω_ν η_ν² (2000 terms, 2·10⁵ cached draws per τ_ω).

    `weak_restricted` uses the weak radius: the restriction changes
    membership, not the radius. */
double credible_radius(const PosteriorGP& post, const RadiusSpec& spec,
                       RegionKind kind);

/// Two-sided (1−α) interval for F(f) under the Gaussian pseudo-posterior.
struct CredibleInterval {
    double center = 0.0;  ///< F(f̃)
    double radius = 0.0;  ///< θ₁ · z_{1−α/2}
    double lower = 0.0;
    double upper = 0.0;
};

CredibleInterval functional_interval(const PosteriorGP& post,
                                     const LinearFunctional& F, double alpha);

/// Membership verdict for a candidate coefficient vector.
struct RegionCheck {
    bool contained = false;
    double distance = 0.0;  ///< norm distance from the posterior center
};

/** Tests whether `candidate` lies in the credible set of the given kind and
    radius. For `weak_restricted` the candidate must additionally satisfy
    J(candidate) <= roughness_cap; a nonpositive cap means "use 2 J(f̂)" with
    f̂ recovered from the posterior center. */
RegionCheck region_contains(const EigenSystem& es, const PosteriorGP& post,
                            const Eigen::VectorXd& candidate, double radius,
                            RegionKind kind, double tau_omega = 2.0,
                            double roughness_cap = 0.0);

} // namespace splinebayes

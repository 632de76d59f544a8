#pragma once

#include "splinebayes/quadrature.hpp"

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace splinebayes {

enum class EigenProvenance { closed_form_free_beam, galerkin };

/** Orthonormal eigen-basis of the pair of quadratic forms
      V(g,h) = ∫ g h w   and   U(g,h) = ∫ g^{(m)} h^{(m)}
    on [0,1] with natural (free) boundary conditions: V(φ_μ,φ_ν)=δ_{μν},
    U(φ_μ,φ_ν)=ρ_μ δ_{μν}, ρ_1=..=ρ_m=0 < ρ_{m+1} ≤ ρ_{m+2} ≤ …

    Two backends:
      - closed form for m=2, w≡1 ("free beam": φ₁≡1, φ₂=√3(2z−1), and
        trig+hyperbolic modes at the roots of cos·cosh=1);
      - Galerkin discretization in a shifted-Legendre basis for general m
        and smooth positive weights.

    Immutable after construction; evaluators are pure and safe to call
    concurrently. */
class EigenSystem {
public:
    /// Closed-form basis for m=2 and unit weight. N >= 2.
    static EigenSystem free_beam(int N);

    /** Galerkin basis: solves U c = ρ V_w c in `basis_size` shifted-Legendre
        polynomials (basis_size >= 4N) with Gauss-Legendre quadrature of order
        4*basis_size, then keeps the first N eigenpairs, V_w-orthonormalized.
        The weight must be bounded above and below by positive constants. */
    static EigenSystem galerkin(int m, std::function<double(double)> weight,
                                int basis_size, int N);

    int m() const { return m_; }
    int size() const { return N_; }
    EigenProvenance provenance() const { return provenance_; }

    /// Eigenvalues ρ_1..ρ_N (first m are exactly zero).
    const Eigen::VectorXd& rho() const { return rho_; }
    /// Penalty weights γ_ν: 1 for ν <= m, ρ_ν for ν > m.
    const Eigen::VectorXd& gamma() const { return gamma_; }
    /// Free-beam frequencies γ_ν for ν > m (empty for Galerkin systems).
    const std::vector<double>& beam_roots() const { return roots_; }

    /// φ_ν(z), 1-based ν.
    double phi(int nu, double z) const;
    /// Derivative φ_ν^{(order)}(z); order 0..2 (free beam) or 0..m (Galerkin).
    double phi_deriv(int nu, double z, int order) const;
    /// Row vector (φ_1(z), …, φ_N(z)).
    Eigen::VectorXd phi_row(double z) const;
    /// Evaluation matrix: out(i,ν-1) = φ_ν(x[i]).
    Eigen::MatrixXd phi_matrix(const Eigen::VectorXd& x) const;
    /// Same for the order-th derivative.
    Eigen::MatrixXd phi_deriv_matrix(const Eigen::VectorXd& x, int order) const;

    /// Design-weighted density w(z) entering V.
    double weight(double z) const;

private:
    EigenSystem() = default;

    int m_ = 2;
    int N_ = 0;
    EigenProvenance provenance_ = EigenProvenance::closed_form_free_beam;
    Eigen::VectorXd rho_;
    Eigen::VectorXd gamma_;
    std::vector<double> roots_;          // free-beam frequencies (ν>m)
    Eigen::MatrixXd legendre_coeffs_;    // Galerkin: basis_size × N
    std::function<double(double)> weight_;
};

/** First `count` positive roots of cos(x)·cosh(x) = 1, ascending.
    Found by scanning sign changes of the overflow-safe form
    cos(x) − sech(x) on half-π panels, bisecting, and Newton-polishing. */
std::vector<double> solve_free_beam_roots(int count);

/// Expansion coefficients g_ν = V(g, φ_ν) by Gauss-Legendre quadrature.
Eigen::VectorXd project(const EigenSystem& es,
                        const std::function<double(double)>& g,
                        int quad_order);

enum class NormKind { V_norm, lambda_norm, J, omega_norm };

/** Squared-norm style series on coefficient vectors:
      V_norm      = Σ g_ν²
      lambda_norm = Σ g_ν² (1+λρ_ν)
      J           = Σ g_ν² γ_ν
      omega_norm  = Σ ω_ν g_ν²,  ω_ν = ν⁻¹ (log 2ν)^{−τ_ω}
    Coefficient vectors shorter than the basis are treated as zero-padded. */
double coeff_norm(const EigenSystem& es, const Eigen::VectorXd& coeffs,
                  double lambda, NormKind kind, double tau_omega = 2.0);

/// Weak-norm weight ω_ν = ν⁻¹ (log 2ν)^{−τ_ω}.
double omega_weight(int nu, double tau_omega);

/// Truncated reproducing kernel Σ_ν φ_ν(x) φ_ν(y) / (1+λρ_ν).
double reproducing_kernel(const EigenSystem& es, double lambda,
                          double x, double y);

/// Default truncation level: max(50, ceil(10·n^{1/(2m+β)})).
int default_truncation(int n, int m, double beta);

} // namespace splinebayes

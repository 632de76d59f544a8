#include "splinebayes/eigensystem.hpp"

#include "splinebayes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace splinebayes {

namespace {

// cos(x) - 1/cosh(x), with sech evaluated as 2e^{-x}/(1+e^{-2x}) so the
// expression stays finite for arbitrarily large x.
double beam_secular(double x) {
    const double e = std::exp(-x);
    return std::cos(x) - 2.0 * e / (1.0 + e * e);
}

double beam_secular_deriv(double x) {
    const double e = std::exp(-x);
    const double sech = 2.0 * e / (1.0 + e * e);
    return -std::sin(x) + sech * std::tanh(x);
}

// Hyperbolic ratios cosh(g*u)/cosh(g/2) etc. for |u| <= 1/2, written with
// negative exponents only; the naive quotient overflows near g ~ 710.
double ratio_cosh_cosh(double g, double u) {
    const double a = std::abs(u);
    return std::exp(g * (a - 0.5)) * (1.0 + std::exp(-2.0 * g * a)) /
           (1.0 + std::exp(-g));
}

double ratio_sinh_sinh(double g, double u) {
    const double a = std::abs(u);
    const double r = std::exp(g * (a - 0.5)) * (1.0 - std::exp(-2.0 * g * a)) /
                     (1.0 - std::exp(-g));
    return u < 0.0 ? -r : r;
}

double ratio_sinh_cosh(double g, double u) {
    const double a = std::abs(u);
    const double r = std::exp(g * (a - 0.5)) * (1.0 - std::exp(-2.0 * g * a)) /
                     (1.0 + std::exp(-g));
    return u < 0.0 ? -r : r;
}

double ratio_cosh_sinh(double g, double u) {
    const double a = std::abs(u);
    return std::exp(g * (a - 0.5)) * (1.0 + std::exp(-2.0 * g * a)) /
           (1.0 - std::exp(-g));
}

// Table of Legendre derivatives on [-1,1]: out(k,j) = P_j^{(k)}(t) for
// k = 0..max_order, j = 0..(cols-1), from differentiating the three-term
// recurrence (n+1) P_{n+1} = (2n+1) t P_n - n P_{n-1}.
void legendre_table(double t, int cols, int max_order, Eigen::MatrixXd& out) {
    out.setZero(max_order + 1, cols);
    if (cols == 0) return;
    out(0, 0) = 1.0;
    if (cols == 1) return;
    out(0, 1) = t;
    for (int k = 1; k <= max_order; ++k) out(k, 1) = (k == 1) ? 1.0 : 0.0;
    for (int n = 1; n + 1 < cols; ++n) {
        out(0, n + 1) =
            ((2 * n + 1) * t * out(0, n) - n * out(0, n - 1)) / (n + 1);
        for (int k = 1; k <= max_order; ++k) {
            out(k, n + 1) = ((2 * n + 1) * (t * out(k, n) + k * out(k - 1, n)) -
                             n * out(k, n - 1)) /
                            (n + 1);
        }
    }
}

} // namespace

std::vector<double> solve_free_beam_roots(int count) {
    if (count < 0) throw DomainError("solve_free_beam_roots: count < 0");
    std::vector<double> roots;
    roots.reserve(static_cast<std::size_t>(count));
    const double half_pi = std::asin(1.0);
    double a = half_pi;
    double fa = beam_secular(a);
    for (int panel = 2; static_cast<int>(roots.size()) < count; ++panel) {
        const double b = panel * half_pi;
        const double fb = beam_secular(b);
        if (fa == 0.0) roots.push_back(a);
        if ((fa < 0.0) != (fb < 0.0) && fa != 0.0 && fb != 0.0) {
            double lo = a, hi = b, flo = fa;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = beam_secular(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            double x = 0.5 * (lo + hi);
            for (int it = 0; it < 2; ++it) {
                const double d = beam_secular_deriv(x);
                if (d != 0.0) x -= beam_secular(x) / d;
            }
            roots.push_back(x);
        }
        a = b;
        fa = fb;
    }
    return roots;
}

EigenSystem EigenSystem::free_beam(int N) {
    if (N < 2) throw DomainError("EigenSystem::free_beam: N must be >= 2");
    EigenSystem es;
    es.m_ = 2;
    es.N_ = N;
    es.provenance_ = EigenProvenance::closed_form_free_beam;
    es.roots_ = solve_free_beam_roots(N - 2);
    es.rho_.setZero(N);
    es.gamma_.setOnes(N);
    for (int nu = 3; nu <= N; ++nu) {
        const double g = es.roots_[static_cast<std::size_t>(nu - 3)];
        es.rho_[nu - 1] = g * g * g * g;
        es.gamma_[nu - 1] = es.rho_[nu - 1];
    }
    es.weight_ = [](double) { return 1.0; };
    return es;
}

double EigenSystem::phi(int nu, double z) const { return phi_deriv(nu, z, 0); }

double EigenSystem::phi_deriv(int nu, double z, int order) const {
    if (nu < 1 || nu > N_)
        throw DomainError("EigenSystem::phi_deriv: index out of range");
    if (order < 0) throw DomainError("EigenSystem::phi_deriv: negative order");
    if (provenance_ == EigenProvenance::closed_form_free_beam) {
        if (order > 2)
            throw DomainError("EigenSystem::phi_deriv: free-beam derivatives "
                              "are available up to order 2");
        static const double sqrt3 = std::sqrt(3.0);
        if (nu == 1) return order == 0 ? 1.0 : 0.0;
        if (nu == 2) {
            if (order == 0) return sqrt3 * (2.0 * z - 1.0);
            return order == 1 ? 2.0 * sqrt3 : 0.0;
        }
        const int k = nu - 2;
        const double g = roots_[static_cast<std::size_t>(k - 1)];
        const double u = z - 0.5;
        const double scale = std::pow(g, order);
        if (k % 2 == 1) {
            // symmetric mode: cos(γu)/cos(γ/2) + cosh(γu)/cosh(γ/2)
            const double c = std::cos(0.5 * g);
            switch (order) {
            case 0: return std::cos(g * u) / c + ratio_cosh_cosh(g, u);
            case 1:
                return scale * (-std::sin(g * u) / c + ratio_sinh_cosh(g, u));
            default:
                return scale * (-std::cos(g * u) / c + ratio_cosh_cosh(g, u));
            }
        }
        // antisymmetric mode: sin(γu)/sin(γ/2) + sinh(γu)/sinh(γ/2)
        const double s = std::sin(0.5 * g);
        switch (order) {
        case 0: return std::sin(g * u) / s + ratio_sinh_sinh(g, u);
        case 1: return scale * (std::cos(g * u) / s + ratio_cosh_sinh(g, u));
        default: return scale * (-std::sin(g * u) / s + ratio_sinh_sinh(g, u));
        }
    }
    if (order > m_)
        throw DomainError("EigenSystem::phi_deriv: order exceeds penalty "
                          "order m");
    const int B = static_cast<int>(legendre_coeffs_.rows());
    Eigen::MatrixXd table;
    legendre_table(2.0 * z - 1.0, B, order, table);
    const double chain = std::pow(2.0, order);
    double acc = 0.0;
    for (int j = 0; j < B; ++j) {
        acc += std::sqrt(2.0 * j + 1.0) * chain * table(order, j) *
               legendre_coeffs_(j, nu - 1);
    }
    return acc;
}

Eigen::VectorXd EigenSystem::phi_row(double z) const {
    Eigen::VectorXd row(N_);
    if (provenance_ == EigenProvenance::closed_form_free_beam) {
        for (int nu = 1; nu <= N_; ++nu) row[nu - 1] = phi_deriv(nu, z, 0);
        return row;
    }
    const int B = static_cast<int>(legendre_coeffs_.rows());
    Eigen::MatrixXd table;
    legendre_table(2.0 * z - 1.0, B, 0, table);
    Eigen::VectorXd vals(B);
    for (int j = 0; j < B; ++j)
        vals[j] = std::sqrt(2.0 * j + 1.0) * table(0, j);
    row.noalias() = legendre_coeffs_.transpose() * vals;
    return row;
}

Eigen::MatrixXd EigenSystem::phi_matrix(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out(x.size(), N_);
    for (Eigen::Index i = 0; i < x.size(); ++i) out.row(i) = phi_row(x[i]);
    return out;
}

Eigen::MatrixXd EigenSystem::phi_deriv_matrix(const Eigen::VectorXd& x,
                                              int order) const {
    Eigen::MatrixXd out(x.size(), N_);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (int nu = 1; nu <= N_; ++nu)
            out(i, nu - 1) = phi_deriv(nu, x[i], order);
    return out;
}

double EigenSystem::weight(double z) const { return weight_(z); }

EigenSystem EigenSystem::galerkin(int m, std::function<double(double)> weight,
                                  int basis_size, int N) {
    if (m < 1) throw DomainError("EigenSystem::galerkin: m must be >= 1");
    if (N < m) throw DomainError("EigenSystem::galerkin: N must be >= m");
    if (basis_size < 4 * N)
        throw DomainError("EigenSystem::galerkin: basis_size must be >= 4N");
    if (!weight) throw DomainError("EigenSystem::galerkin: missing weight");

    const int B = basis_size;
    const QuadRule rule = gauss_legendre(4 * B);
    const Eigen::Index Q = rule.x.size();

    // Basis values and m-th derivatives at the quadrature nodes.
    Eigen::MatrixXd vals(Q, B), dm(Q, B);
    Eigen::VectorXd wv(Q);
    Eigen::MatrixXd table;
    const double chain = std::pow(2.0, m);
    for (Eigen::Index q = 0; q < Q; ++q) {
        const double wx = weight(rule.x[q]);
        if (!(wx > 0.0) || !std::isfinite(wx))
            throw DomainError("EigenSystem::galerkin: weight must be positive "
                              "and finite on (0,1)");
        wv[q] = wx;
        legendre_table(2.0 * rule.x[q] - 1.0, B, m, table);
        for (int j = 0; j < B; ++j) {
            const double norm = std::sqrt(2.0 * j + 1.0);
            vals(q, j) = norm * table(0, j);
            dm(q, j) = norm * chain * table(m, j);
        }
    }

    Eigen::MatrixXd Vw = vals.transpose() *
                         (rule.w.cwiseProduct(wv)).asDiagonal() * vals;
    Eigen::MatrixXd U = dm.transpose() * rule.w.asDiagonal() * dm;
    Vw = 0.5 * (Vw + Vw.transpose()).eval();
    U = 0.5 * (U + U.transpose()).eval();

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        U, Vw, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success)
        throw NumericalError("EigenSystem::galerkin: generalized eigensolve "
                             "failed; try a larger basis");

    EigenSystem es;
    es.m_ = m;
    es.N_ = N;
    es.provenance_ = EigenProvenance::galerkin;
    es.weight_ = std::move(weight);
    es.rho_ = solver.eigenvalues().head(N);
    es.legendre_coeffs_ = solver.eigenvectors().leftCols(N);

    // The penalty has an m-dimensional null space (polynomials of degree < m);
    // the discrete eigenvalues there are pure quadrature noise.  Verify they
    // are negligible against ρ_{m+1}, then pin them to zero.
    const double ref = std::max(1.0, es.rho_[m]);
    for (int k = 0; k < m; ++k) {
        if (std::abs(es.rho_[k]) > 1e-8 * ref)
            throw NumericalError("EigenSystem::galerkin: null-space "
                                 "eigenvalues did not vanish; basis too small");
        es.rho_[k] = 0.0;
    }
    for (int k = m; k < N; ++k)
        if (es.rho_[k] < 0.0) es.rho_[k] = 0.0;

    // V_w-normalize explicitly and fix signs by the first probe point where
    // the eigenfunction is nonzero, so repeated construction is reproducible.
    const double probes[] = {0.0, 1.0 / 3.0, 0.71, 1.0};
    for (int k = 0; k < N; ++k) {
        Eigen::VectorXd col = es.legendre_coeffs_.col(k);
        const double nrm = std::sqrt(col.dot(Vw * col));
        if (!(nrm > 0.0))
            throw NumericalError("EigenSystem::galerkin: degenerate "
                                 "eigenvector");
        col /= nrm;
        es.legendre_coeffs_.col(k) = col;
        for (double p : probes) {
            const double v = es.phi(k + 1, p);
            if (std::abs(v) > 1e-6) {
                if (v < 0.0) es.legendre_coeffs_.col(k) = -col;
                break;
            }
        }
    }

    es.gamma_.setOnes(N);
    for (int k = m; k < N; ++k) es.gamma_[k] = es.rho_[k];
    return es;
}

Eigen::VectorXd project(const EigenSystem& es,
                        const std::function<double(double)>& g,
                        int quad_order) {
    if (!g) throw DomainError("project: missing integrand");
    if (quad_order < 1) throw DomainError("project: quad_order must be >= 1");
    const QuadRule rule = gauss_legendre(quad_order);
    Eigen::VectorXd gw(rule.x.size());
    for (Eigen::Index q = 0; q < rule.x.size(); ++q)
        gw[q] = rule.w[q] * es.weight(rule.x[q]) * g(rule.x[q]);
    return es.phi_matrix(rule.x).transpose() * gw;
}

double omega_weight(int nu, double tau_omega) {
    if (nu < 1) throw DomainError("omega_weight: nu must be >= 1");
    return std::pow(std::log(2.0 * nu), -tau_omega) / nu;
}

double coeff_norm(const EigenSystem& es, const Eigen::VectorXd& coeffs,
                  double lambda, NormKind kind, double tau_omega) {
    if (coeffs.size() > es.size())
        throw DomainError("coeff_norm: coefficient vector longer than basis");
    if (lambda < 0.0) throw DomainError("coeff_norm: lambda must be >= 0");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
        const double g2 = coeffs[k] * coeffs[k];
        switch (kind) {
        case NormKind::V_norm: acc += g2; break;
        case NormKind::lambda_norm:
            acc += g2 * (1.0 + lambda * es.rho()[k]);
            break;
        case NormKind::J: acc += g2 * es.gamma()[k]; break;
        case NormKind::omega_norm:
            acc += g2 * omega_weight(static_cast<int>(k) + 1, tau_omega);
            break;
        }
    }
    return acc;
}

double reproducing_kernel(const EigenSystem& es, double lambda, double x,
                          double y) {
    if (lambda < 0.0)
        throw DomainError("reproducing_kernel: lambda must be >= 0");
    const Eigen::VectorXd px = es.phi_row(x);
    const Eigen::VectorXd py = es.phi_row(y);
    double acc = 0.0;
    for (int k = 0; k < es.size(); ++k)
        acc += px[k] * py[k] / (1.0 + lambda * es.rho()[k]);
    return acc;
}

int default_truncation(int n, int m, double beta) {
    if (n < 1) throw DomainError("default_truncation: n must be >= 1");
    if (m < 1) throw DomainError("default_truncation: m must be >= 1");
    if (beta <= 1.0)
        throw DomainError("default_truncation: beta must exceed 1");
    const double raw = 10.0 * std::pow(static_cast<double>(n),
                                       1.0 / (2.0 * m + beta));
    return std::max(50, static_cast<int>(std::ceil(raw)));
}

} // namespace splinebayes

#include "splinebayes/splinefit.hpp"

#include "splinebayes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace splinebayes {

void validate_dataset(const ExpFamilyModel& model, const Dataset& data) {
    if (data.x.size() != data.y.size())
        throw DomainError("dataset: x and y must have equal length");
    if (data.x.size() < 1) throw DomainError("dataset: empty");
    for (Eigen::Index i = 0; i < data.x.size(); ++i) {
        const double xi = data.x[i], yi = data.y[i];
        if (!std::isfinite(xi) || xi < 0.0 || xi > 1.0)
            throw DomainError("dataset: covariates must lie in [0,1]");
        if (!std::isfinite(yi) || !model.y_in_support(yi))
            throw DomainError("dataset: response outside the support of " +
                              model.name());
    }
}

namespace {

// Canonical observation order: ascending x, ties broken by y.  Makes every
// downstream summation order — and hence the fitted coefficients — identical
// no matter how the caller shuffled the sample.
Dataset sorted_copy(const Dataset& data) {
    const Eigen::Index n = data.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (data.x[a] != data.x[b]) return data.x[a] < data.x[b];
        return data.y[a] < data.y[b];
    });
    Dataset out;
    out.x.resize(n);
    out.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.x[i] = data.x[idx[static_cast<std::size_t>(i)]];
        out.y[i] = data.y[idx[static_cast<std::size_t>(i)]];
    }
    return out;
}

double penalty(const EigenSystem& es, double lambda,
               const Eigen::VectorXd& c) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k)
        acc += es.gamma()[k] * c[k] * c[k];
    return 0.5 * lambda * acc;
}

double mean_loglik(const ExpFamilyModel& model, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& eta) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const auto cum = model.cumulants(eta[i]);
        acc += y[i] * eta[i] - cum.A;
    }
    return acc / static_cast<double>(y.size());
}

} // namespace

double objective_value(const ExpFamilyModel& model, const EigenSystem& es,
                       const Dataset& data, double lambda,
                       const Eigen::VectorXd& coeffs) {
    validate_dataset(model, data);
    if (lambda < 0.0) throw DomainError("objective_value: lambda < 0");
    if (coeffs.size() != es.size())
        throw DomainError("objective_value: coefficient size mismatch");
    const Eigen::MatrixXd phi = es.phi_matrix(data.x);
    return mean_loglik(model, data.y, phi * coeffs) -
           penalty(es, lambda, coeffs);
}

PreparedDesign prepare_design(const ExpFamilyModel& model,
                              const EigenSystem& es, const Dataset& data) {
    validate_dataset(model, data);
    PreparedDesign design;
    design.obs = sorted_copy(data);
    design.phi = es.phi_matrix(design.obs.x);
    return design;
}

SplineFit fit_penalized_mle(const ExpFamilyModel& model, const EigenSystem& es,
                            const Dataset& data, double lambda,
                            const FitOptions& opts) {
    return fit_prepared(model, es, prepare_design(model, es, data), lambda,
                        opts);
}

SplineFit fit_prepared(const ExpFamilyModel& model, const EigenSystem& es,
                       const PreparedDesign& design, double lambda,
                       const FitOptions& opts) {
    if (lambda < 0.0) throw DomainError("fit_penalized_mle: lambda < 0");
    if (opts.max_iter < 1 || opts.tol <= 0.0)
        throw DomainError("fit_penalized_mle: bad options");
    if (design.phi.rows() != design.obs.size() ||
        design.phi.cols() != es.size())
        throw DomainError("fit_penalized_mle: design shape mismatch");

    const Dataset& obs = design.obs;
    const Eigen::Index n = obs.size();
    const int N = es.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::MatrixXd& phi = design.phi;
    const Eigen::VectorXd lam_gamma = lambda * es.gamma();

    SplineFit fit;
    fit.lambda = lambda;
    fit.h = std::pow(lambda, 1.0 / (2.0 * es.m()));

    if (model.kind() == ModelKind::gaussian) {
        // Exact solve of ((1/n)ΦᵀΦ + λΓ) c = (1/n)Φᵀy.
        Eigen::MatrixXd H = inv_n * (phi.transpose() * phi);
        H.diagonal() += lam_gamma;
        const Eigen::VectorXd b = inv_n * (phi.transpose() * obs.y);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        const Eigen::VectorXd c = ldlt.solve(b);
        const double scale = std::max(1.0, b.norm());
        if (ldlt.info() != Eigen::Success ||
            (H * c - b).norm() > 1e-8 * scale)
            throw NumericalError("fit_penalized_mle: normal equations are "
                                 "singular (too few distinct covariates for "
                                 "this basis size and lambda)");
        fit.coeffs = c;
        fit.iterations = 1;
        const Eigen::VectorXd grad =
            inv_n * (phi.transpose() * (obs.y - phi * c)) -
            lam_gamma.cwiseProduct(c);
        fit.grad_norm = grad.norm();
        fit.objective = mean_loglik(model, obs.y, phi * c) -
                        penalty(es, lambda, c);
        return fit;
    }

    // Damped Newton ascent from c = 0 for the non-quadratic likelihoods.
    Eigen::VectorXd c = Eigen::VectorXd::Zero(N);
    try {
        Eigen::VectorXd eta = phi * c;
        double obj = mean_loglik(model, obs.y, eta) - penalty(es, lambda, c);
        for (int iter = 1; iter <= opts.max_iter; ++iter) {
            Eigen::VectorXd resid(n), w(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto cum = model.cumulants(eta[i]);
                resid[i] = obs.y[i] - cum.Adot;
                w[i] = cum.Addot;
            }
            const Eigen::VectorXd grad =
                inv_n * (phi.transpose() * resid) - lam_gamma.cwiseProduct(c);
            const double gnorm = grad.norm();
            if (gnorm <= opts.tol * (1.0 + std::abs(obj))) {
                fit.coeffs = c;
                fit.iterations = iter - 1;
                fit.grad_norm = gnorm;
                fit.objective = obj;
                return fit;
            }
            Eigen::MatrixXd H = inv_n * (phi.transpose() * w.asDiagonal() * phi);
            H.diagonal() += lam_gamma;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
            Eigen::VectorXd step = ldlt.solve(grad);
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                // At c = 0 the working weights are healthy, so a singular
                // system there is structural (basis too rich for the data);
                // later on it means the weights collapsed while the iterates
                // were running away.
                if (iter == 1)
                    throw NumericalError("fit_penalized_mle: Newton system is "
                                         "singular at the starting point");
                throw ConvergenceError("fit_penalized_mle: curvature "
                                       "collapsed at iteration " +
                                       std::to_string(iter) +
                                       "; the likelihood has no finite "
                                       "maximizer");
            }
            double t = 1.0;
            bool moved = false;
            for (int halving = 0; halving < 30; ++halving) {
                Eigen::VectorXd cand = c + t * step;
                bool in_range = true;
                double cand_obj = 0.0;
                Eigen::VectorXd cand_eta;
                try {
                    cand_eta = phi * cand;
                    cand_obj = mean_loglik(model, obs.y, cand_eta) -
                               penalty(es, lambda, cand);
                } catch (const RangeError&) {
                    in_range = false;
                }
                if (in_range && cand_obj > obj - 1e-14 * (1.0 + std::abs(obj))) {
                    c.swap(cand);
                    eta.swap(cand_eta);
                    obj = cand_obj;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved)
                throw ConvergenceError("fit_penalized_mle: step halving "
                                       "failed to make progress at iteration " +
                                       std::to_string(iter));
        }
    } catch (const RangeError& e) {
        throw ConvergenceError(
            std::string("fit_penalized_mle: linear predictor left the stable "
                        "range (") +
            e.what() +
            "); the penalized likelihood has no finite maximizer — e.g. "
            "separable binary data with lambda = 0");
    }
    throw ConvergenceError("fit_penalized_mle: no convergence within " +
                           std::to_string(opts.max_iter) + " iterations");
}

double evaluate_fit(const EigenSystem& es, const Eigen::VectorXd& coeffs,
                    double z) {
    if (coeffs.size() != es.size())
        throw DomainError("evaluate_fit: coefficient size mismatch");
    return es.phi_row(z).dot(coeffs);
}

Eigen::VectorXd evaluate_fit(const EigenSystem& es,
                             const Eigen::VectorXd& coeffs,
                             const Eigen::VectorXd& z) {
    if (coeffs.size() != es.size())
        throw DomainError("evaluate_fit: coefficient size mismatch");
    return es.phi_matrix(z) * coeffs;
}

} // namespace splinebayes

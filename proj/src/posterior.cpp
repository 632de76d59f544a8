#include "splinebayes/posterior.hpp"

#include "splinebayes/errors.hpp"

#include <cmath>
#include <limits>

namespace splinebayes {

TuningPrior build_prior(const EigenSystem& es, double beta, double sigma2) {
    if (beta <= 1.0) throw DomainError("build_prior: beta must exceed 1");
    if (!(sigma2 > 0.0)) throw DomainError("build_prior: sigma2 must be > 0");
    TuningPrior prior;
    prior.beta = beta;
    prior.sigma2 = sigma2;
    prior.tau2.resize(es.size());
    const double expo = 1.0 + beta / (2.0 * es.m());
    for (int nu = 1; nu <= es.size(); ++nu) {
        prior.tau2[nu - 1] = nu <= es.m()
                                 ? 1.0 / sigma2
                                 : std::pow(es.rho()[nu - 1], expo);
    }
    return prior;
}

namespace {

PosteriorGP make_posterior(const EigenSystem& es, const Eigen::VectorXd* tau2,
                           const SplineFit& fit, long n) {
    if (n < 1) throw DomainError("build_posterior: n must be >= 1");
    if (fit.coeffs.size() != es.size())
        throw DomainError("build_posterior: fit does not match the basis");
    if (tau2 && tau2->size() != es.size())
        throw DomainError("build_posterior: prior does not match the basis");

    PosteriorGP post;
    post.lambda = fit.lambda;
    post.n = n;
    post.shrink.resize(es.size());
    post.scale.resize(es.size());
    const double dn = static_cast<double>(n);
    for (int k = 0; k < es.size(); ++k) {
        const double data_precision = dn * (1.0 + fit.lambda * es.gamma()[k]);
        const double t2 = tau2 ? (*tau2)[k] : 0.0;
        post.shrink[k] = data_precision / (t2 + data_precision);
        post.scale[k] = 1.0 / std::sqrt(t2 + data_precision);
    }
    post.center = post.shrink.cwiseProduct(fit.coeffs);
    return post;
}

} // namespace

PosteriorGP build_posterior(const EigenSystem& es, const TuningPrior& prior,
                            const SplineFit& fit, long n) {
    for (Eigen::Index k = 0; k < prior.tau2.size(); ++k)
        if (!(prior.tau2[k] > 0.0))
            throw DomainError("build_posterior: prior precisions must be "
                              "positive");
    return make_posterior(es, &prior.tau2, fit, n);
}

PosteriorGP flat_posterior(const EigenSystem& es, const SplineFit& fit,
                           long n) {
    return make_posterior(es, nullptr, fit, n);
}

Eigen::VectorXd sample_posterior(const PosteriorGP& post, Rng& rng) {
    Eigen::VectorXd draw(post.center.size());
    for (Eigen::Index k = 0; k < draw.size(); ++k)
        draw[k] = post.center[k] + post.scale[k] * rng.normal();
    return draw;
}

LogRnResult log_rn_derivative(const EigenSystem& es, const TuningPrior& prior,
                              double lambda, long n,
                              const Eigen::VectorXd& coeffs) {
    if (n < 1) throw DomainError("log_rn_derivative: n must be >= 1");
    if (lambda < 0.0) throw DomainError("log_rn_derivative: lambda < 0");
    if (prior.tau2.size() != es.size() || coeffs.size() != es.size())
        throw DomainError("log_rn_derivative: size mismatch");

    const double nl = static_cast<double>(n) * lambda;
    LogRnResult out;
    for (int k = 0; k < es.size(); ++k)
        out.value += 0.5 * std::log1p(nl * es.gamma()[k] / prior.tau2[k]);
    out.value -= 0.5 * nl * coeff_norm(es, coeffs, 0.0, NormKind::J);

    // Truncation diagnostic: with ρ_ν >= ρ_N (ν/N)^{2m} for ν > N,
    //   Σ_{ν>N} ½ log(1 + nλ ρ_ν^{-β/(2m)})
    //     <= ½ nλ ρ_N^{-β/(2m)} Σ_{ν>N} (ν/N)^{-β}
    //     <= ½ nλ ρ_N^{-β/(2m)} N/(β−1).
    const int N = es.size();
    const double rhoN = es.rho()[N - 1];
    if (rhoN > 0.0) {
        out.tail_bound = 0.5 * nl *
                         std::pow(rhoN, -prior.beta / (2.0 * es.m())) *
                         static_cast<double>(N) / (prior.beta - 1.0);
    } else {
        // Basis no larger than the null space: nothing is known about the
        // discarded terms.
        out.tail_bound = std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace splinebayes

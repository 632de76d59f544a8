#include "splinebayes/credible.hpp"

#include "splinebayes/errors.hpp"
#include "splinebayes/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace splinebayes {

namespace {

constexpr int kMcChunks = 50;
constexpr int kWeakLimitTerms = 2000;
constexpr int kWeakLimitDraws = 200000;
constexpr std::uint64_t kWeakLimitSeed = 123;

void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw DomainError("credible: alpha must lie in (0,1)");
}

// (1-alpha) sample quantile by the ceil((1-alpha)K) order statistic.
double upper_quantile(std::vector<double>& vals, double alpha) {
    std::sort(vals.begin(), vals.end());
    const auto K = static_cast<double>(vals.size());
    auto idx = static_cast<std::size_t>(std::ceil((1.0 - alpha) * K));
    idx = std::min(std::max<std::size_t>(idx, 1), vals.size());
    return vals[idx - 1];
}

// Draws of ‖f − f̃‖ under the posterior, in fixed chunks so the stream is
// identical no matter how callers schedule the work.
std::vector<double> norm_draws(const Eigen::VectorXd& var_weights,
                               int total_draws, std::uint64_t seed) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(total_draws));
    const int base = total_draws / kMcChunks;
    const int rem = total_draws % kMcChunks;
    for (int c = 0; c < kMcChunks; ++c) {
        const int count = base + (c < rem ? 1 : 0);
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
        for (int i = 0; i < count; ++i) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < var_weights.size(); ++k) {
                const double eta = rng.normal();
                s += var_weights[k] * eta * eta;
            }
            vals.push_back(std::sqrt(s));
        }
    }
    return vals;
}

// Sorted Monte Carlo sample of the weak-norm limit Σ_ν ω_ν η_ν², cached per
// τ_ω (the quantile for any α is then one lookup).
const std::vector<double>& weak_limit_sample(double tau_omega) {
    static std::mutex mutex;
    static std::map<double, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(tau_omega);
    if (it != cache.end()) return it->second;

    std::vector<double> vals;
    vals.reserve(kWeakLimitDraws);
    Eigen::VectorXd om(kWeakLimitTerms);
    for (int nu = 1; nu <= kWeakLimitTerms; ++nu)
        om[nu - 1] = omega_weight(nu, tau_omega);
    const int base = kWeakLimitDraws / kMcChunks;
    for (int c = 0; c < kMcChunks; ++c) {
        Rng rng(mix_seed(kWeakLimitSeed, static_cast<std::uint64_t>(c)));
        for (int i = 0; i < base; ++i) {
            double s = 0.0;
            for (int k = 0; k < kWeakLimitTerms; ++k) {
                const double eta = rng.normal();
                s += om[k] * eta * eta;
            }
            vals.push_back(s);
        }
    }
    std::sort(vals.begin(), vals.end());
    return cache.emplace(tau_omega, std::move(vals)).first->second;
}

} // namespace

LinearFunctional LinearFunctional::evaluation(const EigenSystem& es,
                                              double z) {
    return LinearFunctional(es.phi_row(z));
}

LinearFunctional LinearFunctional::integral(const EigenSystem& es, double a,
                                            double b, int quad_order) {
    if (!(a >= 0.0) || !(b <= 1.0) || !(a < b))
        throw DomainError("LinearFunctional::integral: need 0 <= a < b <= 1");
    if (quad_order < 1)
        throw DomainError("LinearFunctional::integral: bad quadrature order");
    const QuadRule rule = gauss_legendre(quad_order);
    Eigen::VectorXd vals = Eigen::VectorXd::Zero(es.size());
    for (Eigen::Index q = 0; q < rule.x.size(); ++q) {
        const double x = a + (b - a) * rule.x[q];
        vals += (b - a) * rule.w[q] * es.phi_row(x);
    }
    return LinearFunctional(std::move(vals));
}

LinearFunctional LinearFunctional::weighted(
    const EigenSystem& es, const std::function<double(double)>& w,
    int quad_order) {
    if (!w) throw DomainError("LinearFunctional::weighted: missing weight");
    if (quad_order < 1)
        throw DomainError("LinearFunctional::weighted: bad quadrature order");
    const QuadRule rule = gauss_legendre(quad_order);
    Eigen::VectorXd vals = Eigen::VectorXd::Zero(es.size());
    for (Eigen::Index q = 0; q < rule.x.size(); ++q)
        vals += rule.w[q] * w(rule.x[q]) * es.phi_row(rule.x[q]);
    return LinearFunctional(std::move(vals));
}

double LinearFunctional::apply(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != values_.size())
        throw DomainError("LinearFunctional::apply: size mismatch");
    return values_.dot(coeffs);
}

double zeta(const PosteriorGP& post, int k) {
    if (k < 1) throw DomainError("zeta: k must be >= 1");
    double acc = 0.0;
    const double dn = static_cast<double>(post.n);
    for (Eigen::Index i = 0; i < post.scale.size(); ++i)
        acc += std::pow(dn * post.scale[i] * post.scale[i], k);
    return acc;
}

double theta(const PosteriorGP& post, const LinearFunctional& F, int k) {
    if (k < 1) throw DomainError("theta: k must be >= 1");
    if (F.basis_values().size() != post.scale.size())
        throw DomainError("theta: functional does not match the posterior");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < post.scale.size(); ++i) {
        const double f = F.basis_values()[i];
        acc += f * f * std::pow(post.scale[i] * post.scale[i], k);
    }
    return std::sqrt(acc);
}

double credible_radius(const PosteriorGP& post, const RadiusSpec& spec,
                       RegionKind kind) {
    check_alpha(spec.alpha);
    const Eigen::Index N = post.scale.size();

    Eigen::VectorXd var_weights(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double b2 = post.scale[i] * post.scale[i];
        var_weights[i] =
            kind == RegionKind::strong
                ? b2
                : b2 * omega_weight(static_cast<int>(i) + 1, spec.tau_omega);
    }

    if (spec.method == RadiusMethod::monte_carlo) {
        if (spec.mc_draws < 100)
            throw DomainError("credible_radius: mc_draws must be >= 100");
        auto vals = norm_draws(var_weights, spec.mc_draws, spec.seed);
        return upper_quantile(vals, spec.alpha);
    }

    const double dn = static_cast<double>(post.n);
    if (kind == RegionKind::strong) {
        const double z = quantile_normal(1.0 - spec.alpha);
        const double z1 = zeta(post, 1);
        const double z2 = zeta(post, 2);
        const double radicand = (z1 + std::sqrt(2.0 * z2) * z) / dn;
        if (radicand <= 0.0)
            throw NumericalError("credible_radius: asymptotic strong radius "
                                 "degenerates at this alpha (the Gaussian "
                                 "approximation has no positive quantile)");
        return std::sqrt(radicand);
    }
    const std::vector<double>& sample = weak_limit_sample(spec.tau_omega);
    const auto K = static_cast<double>(sample.size());
    auto idx =
        static_cast<std::size_t>(std::ceil((1.0 - spec.alpha) * K));
    idx = std::min(std::max<std::size_t>(idx, 1), sample.size());
    const double c_alpha = sample[idx - 1];
    return std::sqrt(c_alpha / dn);
}

CredibleInterval functional_interval(const PosteriorGP& post,
                                     const LinearFunctional& F, double alpha) {
    check_alpha(alpha);
    CredibleInterval out;
    out.center = F.apply(post.center);
    out.radius = theta(post, F, 1) * quantile_normal(1.0 - 0.5 * alpha);
    out.lower = out.center - out.radius;
    out.upper = out.center + out.radius;
    return out;
}

RegionCheck region_contains(const EigenSystem& es, const PosteriorGP& post,
                            const Eigen::VectorXd& candidate, double radius,
                            RegionKind kind, double tau_omega,
                            double roughness_cap) {
    if (candidate.size() != es.size() || post.center.size() != es.size())
        throw DomainError("region_contains: size mismatch");
    if (!(radius >= 0.0))
        throw DomainError("region_contains: radius must be >= 0");

    const Eigen::VectorXd diff = candidate - post.center;
    RegionCheck check;
    check.distance =
        kind == RegionKind::strong
            ? std::sqrt(coeff_norm(es, diff, 0.0, NormKind::V_norm))
            : std::sqrt(
                  coeff_norm(es, diff, 0.0, NormKind::omega_norm, tau_omega));
    check.contained = check.distance <= radius;

    if (kind == RegionKind::weak_restricted && check.contained) {
        double cap = roughness_cap;
        if (!(cap > 0.0)) {
            const Eigen::VectorXd fhat =
                post.center.cwiseQuotient(post.shrink);
            cap = 2.0 * coeff_norm(es, fhat, 0.0, NormKind::J);
        }
        check.contained =
            coeff_norm(es, candidate, 0.0, NormKind::J) <= cap;
    }
    return check;
}

} // namespace splinebayes

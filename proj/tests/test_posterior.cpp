#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splinebayes/errors.hpp"
#include "splinebayes/posterior.hpp"

#include <cmath>

using namespace splinebayes;

namespace {

SplineFit dummy_fit(const Eigen::VectorXd& coeffs, double lambda) {
    SplineFit fit;
    fit.coeffs = coeffs;
    fit.lambda = lambda;
    fit.h = std::pow(lambda, 0.25);
    return fit;
}

} // namespace

TEST_CASE("tuning prior precisions") {
    const auto es = EigenSystem::free_beam(8);
    const TuningPrior prior = build_prior(es, 2.0, 1.0);
    REQUIRE(prior.tau2.size() == 8);
    CHECK(prior.tau2[0] == 1.0);
    CHECK(prior.tau2[1] == 1.0);
    // β = 2, m = 2: exponent 1 + β/(2m) = 3/2.
    for (int nu = 3; nu <= 8; ++nu) {
        CHECK(prior.tau2[nu - 1] ==
              doctest::Approx(std::pow(es.rho()[nu - 1], 1.5)).epsilon(1e-13));
    }

    const TuningPrior wide = build_prior(es, 3.0, 4.0);
    CHECK(wide.tau2[0] == 0.25);
    CHECK(wide.tau2[4] ==
          doctest::Approx(std::pow(es.rho()[4], 1.75)).epsilon(1e-13));

    CHECK_THROWS_AS(build_prior(es, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(build_prior(es, 2.0, 0.0), DomainError);
}

TEST_CASE("posterior shrinkage and scale") {
    const auto es = EigenSystem::free_beam(6);
    const TuningPrior prior = build_prior(es, 2.0, 1.0);
    Eigen::VectorXd c(6);
    c << 1.0, -2.0, 0.5, 0.1, -0.3, 0.25;
    const double lambda = 1e-3;
    const long n = 500;
    const PosteriorGP post = build_posterior(es, prior, dummy_fit(c, lambda), n);

    for (int k = 0; k < 6; ++k) {
        const double data_prec = n * (1.0 + lambda * es.gamma()[k]);
        // Precision identity: 1/b² = n(1+λγ) + τ².
        CHECK(1.0 / (post.scale[k] * post.scale[k]) ==
              doctest::Approx(data_prec + prior.tau2[k]).epsilon(1e-12));
        CHECK(post.shrink[k] ==
              doctest::Approx(data_prec / (data_prec + prior.tau2[k]))
                  .epsilon(1e-14));
        CHECK(post.shrink[k] > 0.0);
        CHECK(post.shrink[k] < 1.0);
        CHECK(post.center[k] == post.shrink[k] * c[k]);
    }
    CHECK(post.lambda == lambda);
    CHECK(post.n == n);
}

TEST_CASE("shrinkage becomes negligible at large n with fixed lambda") {
    const auto es = EigenSystem::free_beam(5);
    const TuningPrior prior = build_prior(es, 2.0, 1.0);
    Eigen::VectorXd c = Eigen::VectorXd::Ones(5);
    const PosteriorGP post =
        build_posterior(es, prior, dummy_fit(c, 1.0), 1000000);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) worst = std::max(worst, 1.0 - post.shrink[k]);
    CHECK(worst <= 1e-3);
    CHECK(worst > 0.0);
}

TEST_CASE("flat posterior is the no-prior limit") {
    const auto es = EigenSystem::free_beam(6);
    Eigen::VectorXd c(6);
    c << 0.4, 1.1, -0.6, 0.0, 0.2, -0.05;
    const double lambda = 0.02;
    const long n = 80;
    const PosteriorGP flat = flat_posterior(es, dummy_fit(c, lambda), n);
    for (int k = 0; k < 6; ++k) {
        CHECK(flat.shrink[k] == 1.0);
        CHECK(flat.center[k] == c[k]);
        CHECK(flat.scale[k] * flat.scale[k] ==
              doctest::Approx(1.0 / (n * (1.0 + lambda * es.gamma()[k])))
                  .epsilon(1e-14));
    }

    // The tuning posterior converges to the flat one as σ² → ∞ in the null
    // space and stays strictly tighter elsewhere.
    const TuningPrior prior = build_prior(es, 2.0, 1.0);
    const PosteriorGP tuned = build_posterior(es, prior, dummy_fit(c, lambda), n);
    for (int k = 0; k < 6; ++k) CHECK(tuned.scale[k] < flat.scale[k]);
}

TEST_CASE("posterior sampling moments and determinism") {
    const auto es = EigenSystem::free_beam(4);
    const TuningPrior prior = build_prior(es, 2.0, 1.0);
    Eigen::VectorXd c(4);
    c << 1.0, 0.5, -0.25, 0.1;
    const PosteriorGP post = build_posterior(es, prior, dummy_fit(c, 1e-2), 50);

    const int K = 40000;
    Rng rng(2024);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < K; ++i) {
        const Eigen::VectorXd draw = sample_posterior(post, rng);
        mean += draw;
        m2 += draw.cwiseProduct(draw);
    }
    mean /= K;
    m2 /= K;
    for (int k = 0; k < 4; ++k) {
        const double sd = post.scale[k];
        CHECK(std::abs(mean[k] - post.center[k]) < 5.0 * sd / std::sqrt(K));
        const double var = m2[k] - mean[k] * mean[k];
        CHECK(var == doctest::Approx(sd * sd).epsilon(0.05));
    }

    Rng r1(7), r2(7);
    const Eigen::VectorXd d1 = sample_posterior(post, r1);
    const Eigen::VectorXd d2 = sample_posterior(post, r2);
    for (int k = 0; k < 4; ++k) CHECK(d1[k] == d2[k]);
}

TEST_CASE("log density ratio matches the coefficient-wise Gaussian form") {
    const auto es = EigenSystem::free_beam(12);
    const TuningPrior prior = build_prior(es, 2.0, 1.0);
    const double lambda = 3e-4;
    const long n = 400;

    Rng rng(99);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd f(12);
        for (int k = 0; k < 12; ++k)
            f[k] = rng.normal() / std::sqrt(1.0 + es.rho()[k]);

        // Direct form: Σ ½log(1 + nλγ/τ²) − (nλ/2) Σ γ f².
        double direct = 0.0;
        for (int k = 0; k < 12; ++k) {
            direct +=
                0.5 * std::log(1.0 + n * lambda * es.gamma()[k] /
                                         prior.tau2[k]);
            direct -= 0.5 * n * lambda * es.gamma()[k] * f[k] * f[k];
        }
        const LogRnResult rn = log_rn_derivative(es, prior, lambda, n, f);
        CHECK(rn.value == doctest::Approx(direct).epsilon(1e-10));
        CHECK(rn.tail_bound >= 0.0);
    }
}

TEST_CASE("truncation tail bound dominates the dropped terms") {
    const double lambda = 2e-3;
    const long n = 1000;
    const auto small = EigenSystem::free_beam(20);
    const auto large = EigenSystem::free_beam(40);
    const TuningPrior p_small = build_prior(small, 2.0, 1.0);
    const TuningPrior p_large = build_prior(large, 2.0, 1.0);

    Eigen::VectorXd f_small = Eigen::VectorXd::Zero(20);
    f_small.head(5).setConstant(0.3);
    Eigen::VectorXd f_large = Eigen::VectorXd::Zero(40);
    f_large.head(5).setConstant(0.3);

    const LogRnResult a = log_rn_derivative(small, p_small, lambda, n, f_small);
    const LogRnResult b = log_rn_derivative(large, p_large, lambda, n, f_large);

    // Extending the basis adds exactly the terms the tail bound controls.
    CHECK(b.value >= a.value);
    CHECK(b.value - a.value <= a.tail_bound * (1.0 + 1e-12));
    CHECK(b.tail_bound < a.tail_bound);
}

TEST_CASE("posterior input validation") {
    const auto es = EigenSystem::free_beam(6);
    const TuningPrior prior = build_prior(es, 2.0, 1.0);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(6);

    CHECK_THROWS_AS(build_posterior(es, prior, dummy_fit(c, 0.1), 0),
                    DomainError);
    Eigen::VectorXd short_c = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(build_posterior(es, prior, dummy_fit(short_c, 0.1), 10),
                    DomainError);
    TuningPrior bad = prior;
    bad.tau2[2] = 0.0;
    CHECK_THROWS_AS(build_posterior(es, bad, dummy_fit(c, 0.1), 10),
                    DomainError);
    CHECK_THROWS_AS(log_rn_derivative(es, prior, -1.0, 10, c), DomainError);
    CHECK_THROWS_AS(log_rn_derivative(es, prior, 0.1, 0, c), DomainError);
    CHECK_THROWS_AS(log_rn_derivative(es, prior, 0.1, 10, short_c),
                    DomainError);
}

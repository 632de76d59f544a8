#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splinebayes/errors.hpp"
#include "splinebayes/rng.hpp"
#include "splinebayes/tuning.hpp"

#include <cmath>

using namespace splinebayes;

namespace {

Dataset noisy_dataset(int n, std::uint64_t seed, double sigma = 0.4) {
    Rng rng(seed);
    Dataset d;
    d.x.resize(n);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        d.x[i] = (i + 0.5) / n;
        d.y[i] = std::sin(6.28318530718 * d.x[i]) + sigma * rng.normal();
    }
    return d;
}

// GCV for the Gaussian model via the explicit n×n influence matrix
// A_λ = (1/n) Φ (G + λΓ)⁻¹ Φᵀ — the O(n²N) definition the library's
// trace-identity implementation must reproduce.
double brute_force_gcv(const EigenSystem& es, const Dataset& d,
                       double lambda) {
    const Eigen::Index n = d.size();
    const Eigen::MatrixXd phi = es.phi_matrix(d.x);
    Eigen::MatrixXd M =
        (phi.transpose() * phi) / static_cast<double>(n);
    M.diagonal() += lambda * es.gamma();
    const Eigen::MatrixXd A =
        phi * M.ldlt().solve(phi.transpose()) / static_cast<double>(n);
    const Eigen::VectorXd resid =
        d.y - A * d.y;
    const double num = resid.squaredNorm() / static_cast<double>(n);
    const double den =
        1.0 - A.trace() / static_cast<double>(n);
    return num / (den * den);
}

} // namespace

TEST_CASE("GCV score matches the explicit influence-matrix definition") {
    const auto es = EigenSystem::free_beam(10);
    const auto model = ExpFamilyModel::gaussian();
    const auto d = noisy_dataset(15, 3);
    for (double lam : {1e-6, 1e-3, 0.1, 1.0, 25.0}) {
        const double direct = brute_force_gcv(es, d, lam);
        CHECK(gcv_score(model, es, d, lam) ==
              doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("GCV limits and degeneracy") {
    const auto es = EigenSystem::free_beam(8);
    const auto model = ExpFamilyModel::gaussian();
    const auto d = noisy_dataset(40, 5);

    // λ → ∞: the smoother returns 0, the trace vanishes, and the score
    // approaches the mean squared response.
    const double huge = gcv_score(model, es, d, 1e12);
    CHECK(huge ==
          doctest::Approx(d.y.squaredNorm() / 40.0).epsilon(1e-6));

    // Square design at λ ≈ 0 interpolates: denominator collapses.
    const auto dsq = noisy_dataset(8, 7);
    CHECK_THROWS_AS(gcv_score(model, es, dsq, 1e-300), NumericalError);
    CHECK_THROWS_AS(gcv_score(model, es, d, -0.5), DomainError);
}

TEST_CASE("lambda selection scans the grid and keeps per-point scores") {
    const auto es = EigenSystem::free_beam(20);
    const auto model = ExpFamilyModel::gaussian();
    const auto d = noisy_dataset(200, 11);

    const GcvResult res = select_lambda_gcv(model, es, d);
    REQUIRE(res.lambdas.size() == 40);
    REQUIRE(res.scores.size() == 40);

    double best = std::numeric_limits<double>::infinity();
    double best_lam = -1.0;
    bool found = false;
    for (int i = 0; i < 40; ++i) {
        CHECK(res.scores[i] ==
              doctest::Approx(gcv_score(model, es, d, res.lambdas[i]))
                  .epsilon(1e-12));
        if (res.scores[i] <= best) {
            best = res.scores[i];
            best_lam = res.lambdas[i];
            found = true;
        }
    }
    REQUIRE(found);
    CHECK(res.lambda == best_lam);
    CHECK(res.h_gcv == doctest::Approx(std::pow(res.lambda, 0.25)));

    // The selected fit beats the over-smoothed end of the grid in-sample.
    const auto rmse = [&](double lam) {
        const SplineFit fit = fit_penalized_mle(model, es, d, lam);
        double acc = 0.0;
        for (int i = 0; i < 60; ++i) {
            const double z = (i + 0.5) / 60.0;
            const double err = evaluate_fit(es, fit.coeffs, z) -
                               std::sin(6.28318530718 * z);
            acc += err * err;
        }
        return std::sqrt(acc / 60.0);
    };
    CHECK(rmse(res.lambda) < rmse(res.lambdas[39]));
}

TEST_CASE("selection skips degenerate grid points but errors when all fail") {
    const auto es = EigenSystem::free_beam(8);
    const auto model = ExpFamilyModel::gaussian();

    // Square design: λ ≈ 0 interpolates (skipped), a real λ survives.
    const auto dsq = noisy_dataset(8, 7);
    Eigen::VectorXd grid(2);
    grid << 1e-300, 0.1;
    const GcvResult res = select_lambda_gcv(model, es, dsq, grid);
    CHECK(res.lambda == 0.1);
    CHECK(std::isnan(res.scores[0]));
    CHECK(std::isfinite(res.scores[1]));

    Eigen::VectorXd all_bad(1);
    all_bad << 1e-300;
    CHECK_THROWS_AS(select_lambda_gcv(model, es, dsq, all_bad),
                    NumericalError);

    Eigen::VectorXd negative(1);
    negative << -1.0;
    CHECK_THROWS_AS(select_lambda_gcv(model, es, dsq, negative), DomainError);
    CHECK_THROWS_AS(select_lambda_gcv(model, es, dsq, Eigen::VectorXd()),
                    DomainError);
}

TEST_CASE("GCV sweep works for binary responses") {
    const auto es = EigenSystem::free_beam(12);
    const auto model = ExpFamilyModel::binary();
    Rng rng(17);
    Dataset d;
    const int n = 400;
    d.x.resize(n);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        d.x[i] = (i + 0.5) / n;
        d.y[i] = model.sample_response(
            1.5 * std::sin(6.28318530718 * d.x[i]), rng);
    }
    const GcvResult res = select_lambda_gcv(model, es, d);
    CHECK(std::isfinite(res.lambda));
    CHECK(res.lambda > 0.0);
    int finite = 0;
    for (int i = 0; i < res.scores.size(); ++i)
        if (std::isfinite(res.scores[i])) ++finite;
    CHECK(finite >= 35);
}

TEST_CASE("bandwidth mappings") {
    CHECK(prior_h_from_gcv(0.1, 2, 2.0) ==
          doctest::Approx(std::pow(0.1, 5.0 / 6.0)).epsilon(1e-14));
    CHECK(prior_h_from_gcv(0.1, 2, 2.0) ==
          doctest::Approx(0.146780).epsilon(1e-5));
    // β = 1 would be the classical calibration h = h_gcv; the map approaches
    // it from below as β → 1⁺.
    CHECK(prior_h_from_gcv(0.3, 2, 1.0 + 1e-9) ==
          doctest::Approx(0.3).epsilon(1e-6));

    CHECK_THROWS_AS(prior_h_from_gcv(1.0, 2, 2.0), DomainError);
    CHECK_THROWS_AS(prior_h_from_gcv(0.0, 2, 2.0), DomainError);
    CHECK_THROWS_AS(prior_h_from_gcv(0.5, 0, 2.0), DomainError);
    CHECK_THROWS_AS(prior_h_from_gcv(0.5, 2, 1.0), DomainError);

    CHECK(lambda_from_bandwidth(0.2, 2) ==
          doctest::Approx(1.6e-3).epsilon(1e-12));
    CHECK(lambda_from_bandwidth(0.0, 2) == 0.0);
    CHECK_THROWS_AS(lambda_from_bandwidth(-0.1, 2), DomainError);

    // Round trip: λ → h_gcv → λ.
    const double lam = 3.7e-4;
    CHECK(lambda_from_bandwidth(std::pow(lam, 0.25), 2) ==
          doctest::Approx(lam).epsilon(1e-12));
}

TEST_CASE("default grid is log-spaced over [1e-8, 10]") {
    const Eigen::VectorXd grid = default_lambda_grid();
    REQUIRE(grid.size() == 40);
    CHECK(grid[0] == doctest::Approx(1e-8).epsilon(1e-14));
    CHECK(grid[39] == 10.0);
    const double ratio = grid[1] / grid[0];
    for (int i = 1; i + 1 < 40; ++i)
        CHECK(grid[i + 1] / grid[i] == doctest::Approx(ratio).epsilon(1e-10));
    CHECK_THROWS_AS(default_lambda_grid(1), DomainError);
    CHECK_THROWS_AS(default_lambda_grid(10, -1.0, 2.0), DomainError);
}

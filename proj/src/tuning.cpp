#include "splinebayes/tuning.hpp"

#include "splinebayes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splinebayes {

namespace {

constexpr double kDenFloor = 1e-10;
constexpr double kWeightFloor = 1e-12;

// Score one grid point on a prepared design; NaN means "skip this λ".
double score_point(const ExpFamilyModel& model, const EigenSystem& es,
                   const PreparedDesign& design, double lambda,
                   bool propagate) {
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    SplineFit fit;
    try {
        fit = fit_prepared(model, es, design, lambda);
    } catch (const Error&) {
        if (propagate) throw;
        return nan;
    }

    const Eigen::Index n = design.obs.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::VectorXd eta = design.phi * fit.coeffs;

    double num = 0.0;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto cum = model.cumulants(eta[i]);
        w[i] = cum.Addot;
        if (w[i] <= kWeightFloor) {
            if (propagate)
                throw NumericalError("gcv_score: working weights collapsed");
            return nan;
        }
        const double r = design.obs.y[i] - cum.Adot;
        num += r * r / w[i];
    }
    num *= inv_n;

    Eigen::MatrixXd Gw =
        inv_n * (design.phi.transpose() * w.asDiagonal() * design.phi);
    Eigen::MatrixXd M = Gw;
    M.diagonal() += lambda * es.gamma();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) {
        if (propagate)
            throw NumericalError("gcv_score: influence system is singular");
        return nan;
    }
    const double trace_A = ldlt.solve(Gw).trace();
    const double den = 1.0 - trace_A * inv_n;
    if (den <= kDenFloor) {
        if (propagate)
            throw NumericalError("gcv_score: smoother is interpolating; the "
                                 "GCV denominator vanished");
        return nan;
    }
    return num / (den * den);
}

} // namespace

Eigen::VectorXd default_lambda_grid(int size, double lo, double hi) {
    if (size < 2) throw DomainError("default_lambda_grid: size must be >= 2");
    if (!(lo > 0.0) || !(hi > lo))
        throw DomainError("default_lambda_grid: need 0 < lo < hi");
    Eigen::VectorXd grid(size);
    const double step = std::log(hi / lo) / (size - 1);
    for (int i = 0; i < size; ++i) grid[i] = lo * std::exp(step * i);
    grid[size - 1] = hi;
    return grid;
}

double gcv_score(const ExpFamilyModel& model, const EigenSystem& es,
                 const Dataset& data, double lambda) {
    if (lambda < 0.0) throw DomainError("gcv_score: lambda < 0");
    const PreparedDesign design = prepare_design(model, es, data);
    return score_point(model, es, design, lambda, /*propagate=*/true);
}

GcvResult select_lambda_gcv(const ExpFamilyModel& model, const EigenSystem& es,
                            const Dataset& data,
                            const Eigen::VectorXd& grid) {
    if (grid.size() < 1) throw DomainError("select_lambda_gcv: empty grid");
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (!std::isfinite(grid[i]) || grid[i] < 0.0)
            throw DomainError("select_lambda_gcv: grid values must be finite "
                              "and nonnegative");

    const PreparedDesign design = prepare_design(model, es, data);

    GcvResult out;
    out.lambdas = grid;
    std::sort(out.lambdas.data(), out.lambdas.data() + out.lambdas.size());
    out.scores.resize(out.lambdas.size());

    int best = -1;
    for (Eigen::Index i = 0; i < out.lambdas.size(); ++i) {
        const double s =
            score_point(model, es, design, out.lambdas[i], false);
        out.scores[i] = s;
        // `<=` so an exact tie resolves to the larger λ (grid is ascending).
        if (!std::isnan(s) && (best < 0 || s <= out.scores[best]))
            best = static_cast<int>(i);
    }
    if (best < 0)
        throw NumericalError("select_lambda_gcv: every grid point was "
                             "degenerate or failed to fit");
    out.lambda = out.lambdas[best];
    out.h_gcv = std::pow(out.lambda, 1.0 / (2.0 * es.m()));
    return out;
}

GcvResult select_lambda_gcv(const ExpFamilyModel& model, const EigenSystem& es,
                            const Dataset& data) {
    return select_lambda_gcv(model, es, data, default_lambda_grid());
}

double prior_h_from_gcv(double h_gcv, int m, double beta) {
    if (m < 1) throw DomainError("prior_h_from_gcv: m must be >= 1");
    if (beta <= 1.0) throw DomainError("prior_h_from_gcv: beta must exceed 1");
    if (!(h_gcv > 0.0) || !(h_gcv < 1.0))
        throw DomainError("prior_h_from_gcv: h_gcv must lie in (0,1)");
    return std::pow(h_gcv, (2.0 * m + 1.0) / (2.0 * m + beta));
}

double lambda_from_bandwidth(double h, int m) {
    if (m < 1) throw DomainError("lambda_from_bandwidth: m must be >= 1");
    if (!(h >= 0.0))
        throw DomainError("lambda_from_bandwidth: h must be >= 0");
    return std::pow(h, 2.0 * m);
}

} // namespace splinebayes

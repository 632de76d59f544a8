#include "splinebayes/simulation.hpp"

#include "splinebayes/errors.hpp"
#include "splinebayes/posterior.hpp"
#include "splinebayes/quadrature.hpp"
#include "splinebayes/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace splinebayes {

namespace {

double beta_pdf(double z, double a, double b) {
    if (z <= 0.0 || z >= 1.0)
        return 0.0;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp((a - 1.0) * std::log(z) + (b - 1.0) * std::log1p(-z) -
                    lbeta);
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Short form for grid labels and alpha values (0.05, 0.0625, ...).
std::string fmt_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void sorted_unique(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::size_t worker_count(long jobs) {
    long w = std::thread::hardware_concurrency();
    if (w < 1)
        w = 1;
    if (const char* env = std::getenv("SPLINEBAYES_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0)
            w = std::min(w, cap);
    }
    return static_cast<std::size_t>(std::min(w, std::max(jobs, 1L)));
}

ExpFamilyModel validate_config(const SimConfig& c) {
    if (c.replications < 1)
        throw ConfigError("simulation: replications must be >= 1");
    if (c.m < 1)
        throw ConfigError("simulation: m must be >= 1");
    if (!(c.beta > 1.0))
        throw ConfigError("simulation: beta must exceed 1");
    if (!(c.sigma2 > 0.0))
        throw ConfigError("simulation: sigma2 must be positive");
    if (!(c.tau_omega >= 0.0))
        throw ConfigError("simulation: tau_omega must be nonnegative");
    if (c.sample_sizes.empty())
        throw ConfigError("simulation: sample_sizes must be nonempty");
    for (long n : c.sample_sizes)
        if (n < 1)
            throw ConfigError("simulation: sample sizes must be >= 1");
    if (c.alphas.empty())
        throw ConfigError("simulation: alphas must be nonempty");
    for (double a : c.alphas)
        if (!(a > 0.0) || !(a < 1.0))
            throw ConfigError("simulation: alpha values must lie in (0,1)");
    if (c.tuning == TuningRule::fixed_h && !(c.fixed_h > 0.0))
        throw ConfigError("simulation: fixed_h tuning needs a positive bandwidth");
    if (c.radius_method == RadiusMethod::monte_carlo &&
        !(c.radius_override > 0.0) && c.mc_draws < 100)
        throw ConfigError("simulation: mc_draws must be >= 100");
    if (c.truncation < 0)
        throw ConfigError("simulation: truncation must be >= 0");
    if (c.max_iterations < 1)
        throw ConfigError("simulation: max_iterations must be >= 1");
    for (double z : c.eval_points)
        if (!(z >= 0.0) || !(z <= 1.0))
            throw ConfigError("simulation: eval points must lie in [0,1]");
    for (double z0 : c.integral_points)
        if (!(z0 > 0.0) || !(z0 <= 1.0))
            throw ConfigError("simulation: integral endpoints must lie in (0,1]");
    return ExpFamilyModel::parse(c.model);
}

// Everything shared by the replicates of one sample size.
struct Cell {
    long n = 0;
    const EigenSystem* es = nullptr;
    Eigen::VectorXd truth_coeffs;
    std::vector<LinearFunctional> eval_F;
    std::vector<double> eval_truth;
    std::vector<LinearFunctional> integral_F;
    std::vector<double> integral_truth;
    // Mean-curve grid; populated only for the largest n when a curve file
    // was requested.
    Eigen::VectorXd grid;
    std::vector<LinearFunctional> grid_F;
    Eigen::VectorXd grid_truth;
};

// Outcome of a single replicate, flattened per (alpha, point) for the
// order-independent reduction.
struct RepResult {
    bool ok = false;
    std::vector<unsigned char> region_cov;  // 3 per alpha: CR, MCR, restricted
    std::vector<double> region_rad;
    std::vector<unsigned char> eval_cov;  // alphas x eval points
    std::vector<double> eval_rad;
    std::vector<unsigned char> integral_cov;
    std::vector<double> integral_rad;
    Eigen::VectorXd curve_fhat, curve_lo, curve_hi;
};

RepResult run_replicate(const SimConfig& cfg, const ExpFamilyModel& model,
                        const Cell& cell, std::uint64_t stream) {
    RepResult out;
    Rng rng(mix_seed(cfg.seed, 2 * stream));
    const Dataset data = generate_dataset(cfg, cell.n, rng);

    double lam;
    if (cfg.tuning == TuningRule::gcv) {
        const GcvResult sel = select_lambda_gcv(model, *cell.es, data);
        lam = cfg.lambda_rule == LambdaRule::mapped
                  ? lambda_from_bandwidth(
                        prior_h_from_gcv(sel.h_gcv, cfg.m, cfg.beta), cfg.m)
                  : sel.lambda;
    } else {
        lam = lambda_from_bandwidth(cfg.fixed_h, cfg.m);
    }

    FitOptions opts;
    opts.max_iter = cfg.max_iterations;
    const SplineFit fit = fit_penalized_mle(model, *cell.es, data, lam, opts);
    const PosteriorGP post =
        cfg.posterior == PosteriorMode::flat
            ? flat_posterior(*cell.es, fit, cell.n)
            : build_posterior(*cell.es,
                              build_prior(*cell.es, cfg.beta, cfg.sigma2), fit,
                              cell.n);

    const double override_r = cfg.radius_override;
    const std::size_t A = cfg.alphas.size();
    out.region_cov.assign(3 * A, 0);
    out.region_rad.assign(3 * A, 0.0);
    out.eval_cov.assign(A * cell.eval_F.size(), 0);
    out.eval_rad.assign(A * cell.eval_F.size(), 0.0);
    out.integral_cov.assign(A * cell.integral_F.size(), 0);
    out.integral_rad.assign(A * cell.integral_F.size(), 0.0);

    for (std::size_t j = 0; j < A; ++j) {
        RadiusSpec spec;
        spec.method = cfg.radius_method;
        spec.alpha = cfg.alphas[j];
        spec.mc_draws = cfg.mc_draws;
        spec.tau_omega = cfg.tau_omega;
        spec.seed = mix_seed(cfg.seed, 2 * stream + 1);

        const double r_strong =
            override_r > 0.0 ? override_r
                             : credible_radius(post, spec, RegionKind::strong);
        const double r_weak =
            override_r > 0.0 ? override_r
                             : credible_radius(post, spec, RegionKind::weak);

        out.region_rad[3 * j + 0] = r_strong;
        out.region_rad[3 * j + 1] = r_weak;
        out.region_rad[3 * j + 2] = r_weak;  // restriction reuses the radius
        out.region_cov[3 * j + 0] =
            region_contains(*cell.es, post, cell.truth_coeffs, r_strong,
                            RegionKind::strong, cfg.tau_omega)
                .contained;
        out.region_cov[3 * j + 1] =
            region_contains(*cell.es, post, cell.truth_coeffs, r_weak,
                            RegionKind::weak, cfg.tau_omega)
                .contained;
        out.region_cov[3 * j + 2] =
            region_contains(*cell.es, post, cell.truth_coeffs, r_weak,
                            RegionKind::weak_restricted, cfg.tau_omega)
                .contained;

        for (std::size_t k = 0; k < cell.eval_F.size(); ++k) {
            const CredibleInterval ci =
                functional_interval(post, cell.eval_F[k], cfg.alphas[j]);
            const double r = override_r > 0.0 ? override_r : ci.radius;
            out.eval_rad[j * cell.eval_F.size() + k] = r;
            out.eval_cov[j * cell.eval_F.size() + k] =
                std::abs(cell.eval_truth[k] - ci.center) <= r;
        }
        for (std::size_t k = 0; k < cell.integral_F.size(); ++k) {
            const CredibleInterval ci =
                functional_interval(post, cell.integral_F[k], cfg.alphas[j]);
            const double r = override_r > 0.0 ? override_r : ci.radius;
            out.integral_rad[j * cell.integral_F.size() + k] = r;
            out.integral_cov[j * cell.integral_F.size() + k] =
                std::abs(cell.integral_truth[k] - ci.center) <= r;
        }
    }

    if (cell.grid.size() > 0) {
        out.curve_fhat = evaluate_fit(*cell.es, fit.coeffs, cell.grid);
        out.curve_lo.resize(cell.grid.size());
        out.curve_hi.resize(cell.grid.size());
        for (Eigen::Index k = 0; k < cell.grid.size(); ++k) {
            const CredibleInterval ci = functional_interval(
                post, cell.grid_F[static_cast<std::size_t>(k)],
                cfg.alphas.front());
            const double r = override_r > 0.0 ? override_r : ci.radius;
            out.curve_lo[k] = ci.center - r;
            out.curve_hi[k] = ci.center + r;
        }
    }

    out.ok = true;
    return out;
}

void write_curve_csv(const Eigen::VectorXd& grid,
                     const Eigen::VectorXd& f0_values,
                     const Eigen::VectorXd& fhat_mean,
                     const Eigen::VectorXd& lower,
                     const Eigen::VectorXd& upper, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("simulation: cannot open curve output: " + path);
    out << "z,f0,fhat_mean,lower,upper\n";
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        out << fmt_label(grid[i]) << ',' << fmt(f0_values[i]) << ','
            << fmt(fhat_mean[i]) << ',' << fmt(lower[i]) << ','
            << fmt(upper[i]) << '\n';
}

}  // namespace

double true_function_beta_mix(double z) {
    if (!(z >= 0.0) || !(z <= 1.0))
        throw DomainError("true_function_beta_mix: z must lie in [0,1]");
    return 3.0 * beta_pdf(z, 30.0, 17.0) + 2.0 * beta_pdf(z, 3.0, 11.0);
}

Dataset generate_dataset(const SimConfig& config, long n, Rng& rng) {
    if (n < 1)
        throw DomainError("generate_dataset: n must be >= 1");
    const ExpFamilyModel model = ExpFamilyModel::parse(config.model);
    Dataset data;
    data.x.resize(n);
    data.y.resize(n);
    for (long i = 0; i < n; ++i)
        data.x[i] = rng.uniform();
    for (long i = 0; i < n; ++i)
        data.y[i] = model.sample_response(true_function_beta_mix(data.x[i]), rng);
    return data;
}

std::vector<double> default_eval_grid() {
    std::vector<double> grid(15);
    for (int i = 1; i <= 15; ++i)
        grid[static_cast<std::size_t>(i - 1)] = i / 16.0;
    return grid;
}

std::vector<CoverageRecord> run_coverage_experiment(const SimConfig& raw) {
    SimConfig cfg = raw;
    const ExpFamilyModel model = validate_config(cfg);
    sorted_unique(cfg.alphas);
    sorted_unique(cfg.eval_points);
    sorted_unique(cfg.integral_points);
    std::sort(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
    cfg.sample_sizes.erase(
        std::unique(cfg.sample_sizes.begin(), cfg.sample_sizes.end()),
        cfg.sample_sizes.end());

    // Shared read-only state per sample size. Eigen systems are cached per
    // truncation level; replicates only ever read them.
    std::map<int, EigenSystem> systems;
    const QuadRule quad = gauss_legendre(2048);
    const bool want_curve = !cfg.curve_csv.empty();
    std::vector<Cell> cells;
    cells.reserve(cfg.sample_sizes.size());
    for (std::size_t i = 0; i < cfg.sample_sizes.size(); ++i) {
        const long n = cfg.sample_sizes[i];
        const int N = cfg.truncation > 0
                          ? cfg.truncation
                          : default_truncation(static_cast<int>(n), cfg.m,
                                               cfg.beta);
        auto it = systems.find(N);
        if (it == systems.end())
            it = systems.emplace(N, EigenSystem::free_beam(N)).first;

        Cell cell;
        cell.n = n;
        cell.es = &it->second;
        cell.truth_coeffs = project(it->second, true_function_beta_mix, 2048);
        for (double z : cfg.eval_points) {
            cell.eval_F.push_back(LinearFunctional::evaluation(it->second, z));
            cell.eval_truth.push_back(true_function_beta_mix(z));
        }
        for (double z0 : cfg.integral_points) {
            cell.integral_F.push_back(
                LinearFunctional::integral(it->second, 0.0, z0));
            double s = 0.0;
            for (Eigen::Index q = 0; q < quad.x.size(); ++q)
                s += quad.w[q] * z0 * true_function_beta_mix(z0 * quad.x[q]);
            cell.integral_truth.push_back(s);
        }
        if (want_curve && i + 1 == cfg.sample_sizes.size()) {
            cell.grid.resize(201);
            cell.grid_truth.resize(201);
            for (int k = 0; k <= 200; ++k) {
                const double z = k / 200.0;
                cell.grid[k] = z;
                cell.grid_truth[k] = true_function_beta_mix(z);
                cell.grid_F.push_back(
                    LinearFunctional::evaluation(it->second, z));
            }
        }
        cells.push_back(std::move(cell));
    }

    const long reps = cfg.replications;
    std::vector<CoverageRecord> records;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const Cell& cell = cells[ci];
        std::vector<RepResult> results(static_cast<std::size_t>(reps));
        std::atomic<long> next{0};
        std::mutex err_mutex;
        std::exception_ptr err;

        auto worker = [&]() {
            try {
                for (;;) {
                    const long r = next.fetch_add(1);
                    if (r >= reps)
                        return;
                    const std::uint64_t stream =
                        static_cast<std::uint64_t>(ci) *
                            static_cast<std::uint64_t>(reps) +
                        static_cast<std::uint64_t>(r);
                    try {
                        results[static_cast<std::size_t>(r)] =
                            run_replicate(cfg, model, cell, stream);
                    } catch (const Error&) {
                        // recorded as a failed replicate
                    }
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(err_mutex);
                if (!err)
                    err = std::current_exception();
            }
        };

        const std::size_t workers = worker_count(reps);
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back(worker);
            for (auto& t : pool)
                t.join();
        }
        if (err)
            std::rethrow_exception(err);

        // Deterministic reduction in replicate order.
        long failures = 0;
        for (const RepResult& r : results)
            if (!r.ok)
                ++failures;
        if (failures * 20 > reps)
            throw ConvergenceError(
                "simulation: fit failure rate above 5% at n = " +
                std::to_string(cell.n) + " (" + std::to_string(failures) +
                " of " + std::to_string(reps) + " replicates)");
        const double succ = static_cast<double>(reps - failures);

        const std::size_t A = cfg.alphas.size();
        const std::size_t E = cell.eval_F.size();
        const std::size_t I = cell.integral_F.size();
        std::vector<long> rc(3 * A, 0);
        std::vector<double> rr(3 * A, 0.0);
        std::vector<long> ec(A * E, 0);
        std::vector<double> er(A * E, 0.0);
        std::vector<long> ic(A * I, 0);
        std::vector<double> ir(A * I, 0.0);
        Eigen::VectorXd curve_fhat, curve_lo, curve_hi;
        if (cell.grid.size() > 0) {
            curve_fhat = Eigen::VectorXd::Zero(cell.grid.size());
            curve_lo = Eigen::VectorXd::Zero(cell.grid.size());
            curve_hi = Eigen::VectorXd::Zero(cell.grid.size());
        }
        for (const RepResult& r : results) {
            if (!r.ok)
                continue;
            for (std::size_t k = 0; k < 3 * A; ++k) {
                rc[k] += r.region_cov[k];
                rr[k] += r.region_rad[k];
            }
            for (std::size_t k = 0; k < A * E; ++k) {
                ec[k] += r.eval_cov[k];
                er[k] += r.eval_rad[k];
            }
            for (std::size_t k = 0; k < A * I; ++k) {
                ic[k] += r.integral_cov[k];
                ir[k] += r.integral_rad[k];
            }
            if (cell.grid.size() > 0) {
                curve_fhat += r.curve_fhat;
                curve_lo += r.curve_lo;
                curve_hi += r.curve_hi;
            }
        }

        const std::string region_method =
            cfg.radius_override > 0.0
                ? "override"
                : (cfg.radius_method == RadiusMethod::monte_carlo
                       ? "monte_carlo"
                       : "asymptotic");
        const std::string functional_method =
            cfg.radius_override > 0.0 ? "override" : "normal_quantile";
        auto make_record = [&](double alpha, std::string kind, long covered,
                               double radius_sum, const std::string& method) {
            CoverageRecord rec;
            rec.n = cell.n;
            rec.alpha = alpha;
            rec.set_kind = std::move(kind);
            rec.coverage = static_cast<double>(covered) / succ;
            rec.mean_radius = radius_sum / succ;
            rec.replications = static_cast<int>(reps);
            rec.failures = static_cast<int>(failures);
            rec.radius_method = method;
            records.push_back(std::move(rec));
        };
        for (std::size_t j = 0; j < A; ++j) {
            const double a = cfg.alphas[j];
            make_record(a, "CR", rc[3 * j + 0], rr[3 * j + 0], region_method);
            make_record(a, "MCR", rc[3 * j + 1], rr[3 * j + 1], region_method);
            make_record(a, "MCR_restricted", rc[3 * j + 2], rr[3 * j + 2],
                        region_method);
            for (std::size_t k = 0; k < E; ++k)
                make_record(a, "eval@" + fmt_label(cfg.eval_points[k]),
                            ec[j * E + k], er[j * E + k], functional_method);
            for (std::size_t k = 0; k < I; ++k)
                make_record(a, "integral@" + fmt_label(cfg.integral_points[k]),
                            ic[j * I + k], ir[j * I + k], functional_method);
        }

        if (cell.grid.size() > 0)
            write_curve_csv(cell.grid, cell.grid_truth, curve_fhat / succ,
                            curve_lo / succ, curve_hi / succ, cfg.curve_csv);
    }

    if (!cfg.coverage_csv.empty())
        write_coverage_csv(records, cfg.coverage_csv);
    return records;
}

void write_coverage_csv(const std::vector<CoverageRecord>& records,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("simulation: cannot open coverage output: " + path);
    out << "n,alpha,set_kind,coverage,mean_radius,reps,failures,radius_method\n";
    char cov[48];
    for (const CoverageRecord& r : records) {
        std::snprintf(cov, sizeof cov, "%.6f", r.coverage);
        out << r.n << ',' << fmt_label(r.alpha) << ',' << r.set_kind << ','
            << cov << ',' << fmt(r.mean_radius) << ',' << r.replications << ','
            << r.failures << ',' << r.radius_method << '\n';
    }
}

SimConfig preset_region_coverage() {
    SimConfig cfg;
    cfg.sample_sizes = {20, 50, 100, 200, 500, 1000, 2000};
    cfg.replications = 500;
    cfg.alphas = {0.05};
    return cfg;
}

SimConfig preset_functional_coverage() {
    SimConfig cfg;
    cfg.sample_sizes = {32, 128, 256, 512};
    cfg.replications = 500;
    cfg.alphas = {0.05};
    cfg.eval_points = default_eval_grid();
    cfg.integral_points = {0.5};
    return cfg;
}

SimConfig preset_full_scale() {
    SimConfig cfg = preset_region_coverage();
    cfg.replications = 1000;
    return cfg;
}

}  // namespace splinebayes

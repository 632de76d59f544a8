#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splinebayes/errors.hpp"
#include "splinebayes/posterior.hpp"
#include "splinebayes/quadrature.hpp"
#include "splinebayes/simulation.hpp"
#include "splinebayes/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace splinebayes;

namespace {

double integrate_truth(double a, double b, int order = 2048) {
    const QuadRule q = gauss_legendre(order);
    double s = 0.0;
    for (Eigen::Index i = 0; i < q.x.size(); ++i)
        s += q.w[i] * (b - a) * true_function_beta_mix(a + (b - a) * q.x[i]);
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path tmp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

const CoverageRecord& find_record(const std::vector<CoverageRecord>& recs,
                                  long n, const std::string& kind) {
    for (const auto& r : recs)
        if (r.n == n && r.set_kind == kind)
            return r;
    REQUIRE(false);
    return recs.front();
}

}  // namespace

TEST_CASE("truth function: endpoints, mass, peak location") {
    CHECK(true_function_beta_mix(0.0) == 0.0);
    CHECK(true_function_beta_mix(1.0) == 0.0);
    CHECK_THROWS_AS(true_function_beta_mix(-0.01), DomainError);
    CHECK_THROWS_AS(true_function_beta_mix(1.01), DomainError);

    // Two densities with weights 3 and 2 integrate to 5.
    CHECK(integrate_truth(0.0, 1.0) == doctest::Approx(5.0).epsilon(2e-7));

    // The first component 3·Beta(30,17) peaks at its mode 29/45.
    const auto comp1 = [](double z) {
        const double lb = std::lgamma(30.0) + std::lgamma(17.0) -
                          std::lgamma(47.0);
        return 3.0 * std::exp(29.0 * std::log(z) + 16.0 * std::log1p(-z) - lb);
    };
    double best_z = 0.0, best_v = -1.0;
    for (int i = 0; i <= 20000; ++i) {
        const double z = 0.5 + 0.3 * i / 20000.0;
        const double v = comp1(z);
        if (v > best_v) {
            best_v = v;
            best_z = z;
        }
    }
    CHECK(std::abs(best_z - 29.0 / 45.0) <= 1e-3);

    // Integral functional reference used by the coverage harness.
    CHECK(integrate_truth(0.0, 0.5) ==
          doctest::Approx(2.0586531102883043).epsilon(1e-12));
}

TEST_CASE("truth projection onto the free-beam basis") {
    const EigenSystem es = EigenSystem::free_beam(60);
    const Eigen::VectorXd g = project(es, true_function_beta_mix, 2048);

    // First coefficient is the total mass (phi_1 == 1).
    CHECK(g[0] == doctest::Approx(5.0).epsilon(1e-7));

    // Leading coefficients against an independently computed reference.
    const std::vector<double> ref = {5.0,     -0.5423, -2.0838, -2.0658,
                                     -0.9332, 3.1812,  1.1909,  -0.1833,
                                     -1.115,  -0.4889, 0.1581,  0.2487,
                                     0.1476,  -0.0414, -0.0106, -0.0466};
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(g[static_cast<Eigen::Index>(i)] - ref[i]) <= 1.5e-3);

    // L2 truncation residual: small enough that region membership at the
    // simulation radii cannot hinge on the discarded tail.
    const QuadRule q = gauss_legendre(2048);
    auto residual_at = [&](int N) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < q.x.size(); ++i) {
            const Eigen::VectorXd row = es.phi_row(q.x[i]);
            const double approx = row.head(N).dot(g.head(N));
            const double diff = true_function_beta_mix(q.x[i]) - approx;
            s += q.w[i] * diff * diff;
        }
        return std::sqrt(s);
    };
    const double r60 = residual_at(60);
    CHECK(r60 >= 2.5e-3);
    CHECK(r60 <= 4.0e-3);
    CHECK(residual_at(50) <= 5.5e-3);
}

TEST_CASE("dataset generation: determinism and moments") {
    SimConfig cfg;

    Rng a(5), b(5);
    const Dataset d1 = generate_dataset(cfg, 300, a);
    const Dataset d2 = generate_dataset(cfg, 300, b);
    CHECK((d1.x - d2.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d1.y - d2.y).cwiseAbs().maxCoeff() == 0.0);

    Rng big(11);
    const long n = 100000;
    const Dataset d = generate_dataset(cfg, n, big);
    CHECK(std::abs(d.x.mean() - 0.5) <= 0.005);
    double ss = 0.0, sm = 0.0;
    for (long i = 0; i < n; ++i) {
        const double r = d.y[i] - true_function_beta_mix(d.x[i]);
        sm += r;
        ss += r * r;
    }
    sm /= static_cast<double>(n);
    const double var = ss / static_cast<double>(n) - sm * sm;
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));

    CHECK_THROWS_AS(generate_dataset(cfg, 0, big), DomainError);

    SimConfig binary_cfg;
    binary_cfg.model = "binary";
    const Dataset db = generate_dataset(binary_cfg, 50, big);
    for (long i = 0; i < 50; ++i)
        CHECK((db.y[i] == 0.0 || db.y[i] == 1.0));
}

TEST_CASE("radius override hook gives full coverage") {
    SimConfig cfg;
    cfg.sample_sizes = {64};
    cfg.replications = 1;
    cfg.eval_points = {0.25, 0.5, 0.75};
    cfg.integral_points = {0.5};
    cfg.radius_override = std::numeric_limits<double>::infinity();
    const auto recs = run_coverage_experiment(cfg);
    REQUIRE(recs.size() == 7);  // CR, MCR, restricted, 3 eval, 1 integral
    for (const auto& r : recs) {
        CHECK(r.coverage == 1.0);
        CHECK(r.failures == 0);
        CHECK(r.replications == 1);
        CHECK(r.radius_method == "override");
    }
}

TEST_CASE("coverage bands at n = 512" * doctest::timeout(600)) {
    SimConfig cfg = preset_functional_coverage();
    cfg.sample_sizes = {512};
    const auto recs = run_coverage_experiment(cfg);
    REQUIRE(recs.size() == 3 + 15 + 1);

    const auto& cr = find_record(recs, 512, "CR");
    const auto& mcr = find_record(recs, 512, "MCR");
    const auto& res = find_record(recs, 512, "MCR_restricted");
    const auto& integral = find_record(recs, 512, "integral@0.5");

    CHECK(cr.failures == 0);
    CHECK(cr.coverage >= 0.95);
    CHECK(mcr.coverage >= 0.91);
    CHECK(mcr.coverage <= 0.99);
    CHECK(integral.coverage >= 0.91);
    CHECK(integral.coverage <= 0.99);

    // The restriction changes membership only; the ball radius is shared.
    CHECK(res.mean_radius == mcr.mean_radius);
    CHECK(res.coverage <= mcr.coverage);

    for (const auto& r : recs) {
        CHECK(r.coverage >= 0.0);
        CHECK(r.coverage <= 1.0);
        CHECK(r.mean_radius > 0.0);
    }
}

TEST_CASE("experiment output is byte-identical across runs and thread counts" *
          doctest::timeout(300)) {
    SimConfig cfg;
    cfg.sample_sizes = {48, 64};
    cfg.replications = 8;
    cfg.eval_points = {0.25, 0.75};
    cfg.integral_points = {0.5};
    cfg.mc_draws = 500;
    cfg.seed = 99;
    const auto cov_a = tmp_file("splinebayes_cov_a.csv");
    const auto cur_a = tmp_file("splinebayes_cur_a.csv");
    const auto cov_b = tmp_file("splinebayes_cov_b.csv");
    const auto cur_b = tmp_file("splinebayes_cur_b.csv");

    cfg.coverage_csv = cov_a.string();
    cfg.curve_csv = cur_a.string();
    const auto recs_a = run_coverage_experiment(cfg);

    cfg.coverage_csv = cov_b.string();
    cfg.curve_csv = cur_b.string();
    const auto recs_b = run_coverage_experiment(cfg);

    const std::string cov_text = slurp(cov_a);
    CHECK(cov_text == slurp(cov_b));
    CHECK(slurp(cur_a) == slurp(cur_b));
    REQUIRE(recs_a.size() == recs_b.size());
    for (std::size_t i = 0; i < recs_a.size(); ++i) {
        CHECK(recs_a[i].coverage == recs_b[i].coverage);
        CHECK(recs_a[i].mean_radius == recs_b[i].mean_radius);
    }

    // Forcing a single worker must not change a byte.
    setenv("SPLINEBAYES_THREADS", "1", 1);
    const auto recs_c = run_coverage_experiment(cfg);
    unsetenv("SPLINEBAYES_THREADS");
    CHECK(cov_text == slurp(cov_b));
    for (std::size_t i = 0; i < recs_a.size(); ++i)
        CHECK(recs_a[i].coverage == recs_c[i].coverage);

    // CSV shape: header + one line per record; curve has 201 grid rows.
    CHECK(cov_text.rfind("n,alpha,set_kind,coverage,mean_radius,reps,"
                         "failures,radius_method\n", 0) == 0);
    const std::string cur_text = slurp(cur_a);
    CHECK(cur_text.rfind("z,f0,fhat_mean,lower,upper\n", 0) == 0);
    CHECK(std::count(cur_text.begin(), cur_text.end(), '\n') == 202);
    CHECK(cur_text.find("\n0,0,") != std::string::npos);

    std::filesystem::remove(cov_a);
    std::filesystem::remove(cur_a);
    std::filesystem::remove(cov_b);
    std::filesystem::remove(cur_b);
}

TEST_CASE("GCV shrinks pure-noise data toward the null space") {
    // Responses with no signal: the selected lambda should sit at the top
    // of the grid in at least half the replicates.
    const EigenSystem es = EigenSystem::free_beam(50);
    const ExpFamilyModel model = ExpFamilyModel::gaussian();
    const Eigen::VectorXd grid = default_lambda_grid();
    const double top = grid[grid.size() - 1];
    const int reps = 200;
    int at_top = 0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(mix_seed(9, static_cast<std::uint64_t>(r)));
        Dataset d;
        d.x.resize(100);
        d.y.resize(100);
        for (int i = 0; i < 100; ++i)
            d.x[i] = rng.uniform();
        for (int i = 0; i < 100; ++i)
            d.y[i] = rng.normal();
        const GcvResult sel = select_lambda_gcv(model, es, d, grid);
        if (sel.lambda == top)
            ++at_top;
    }
    CHECK(at_top >= reps / 2);
}

TEST_CASE("failure rate above 5% aborts the experiment") {
    SimConfig cfg;
    cfg.model = "binary";
    cfg.sample_sizes = {64};
    cfg.replications = 4;
    cfg.max_iterations = 1;  // every Newton fit runs out of budget
    CHECK_THROWS_AS(run_coverage_experiment(cfg), ConvergenceError);
}

TEST_CASE("config validation") {
    const SimConfig base;
    auto bad = [&](auto&& tweak) {
        SimConfig c = base;
        tweak(c);
        CHECK_THROWS_AS(run_coverage_experiment(c), ConfigError);
    };
    bad([](SimConfig& c) { c.replications = 0; });
    bad([](SimConfig& c) { c.alphas = {1.0}; });
    bad([](SimConfig& c) { c.alphas.clear(); });
    bad([](SimConfig& c) { c.sample_sizes.clear(); });
    bad([](SimConfig& c) { c.sample_sizes = {0}; });
    bad([](SimConfig& c) { c.beta = 1.0; });
    bad([](SimConfig& c) { c.sigma2 = 0.0; });
    bad([](SimConfig& c) { c.eval_points = {1.5}; });
    bad([](SimConfig& c) { c.integral_points = {0.0}; });
    bad([](SimConfig& c) { c.mc_draws = 50; });
    bad([](SimConfig& c) { c.tuning = TuningRule::fixed_h; });
    bad([](SimConfig& c) { c.max_iterations = 0; });
    CHECK_THROWS_AS(
        [&] {
            SimConfig c = base;
            c.model = "weibull";
            run_coverage_experiment(c);
        }(),
        Error);
}

TEST_CASE("presets match the study layout") {
    const SimConfig region = preset_region_coverage();
    CHECK(region.sample_sizes.front() == 20);
    CHECK(region.sample_sizes.back() == 2000);
    CHECK(region.replications == 500);
    CHECK(region.alphas == std::vector<double>{0.05});
    CHECK(region.posterior == PosteriorMode::flat);
    CHECK(region.lambda_rule == LambdaRule::raw);

    const SimConfig fun = preset_functional_coverage();
    CHECK(fun.sample_sizes == std::vector<long>{32, 128, 256, 512});
    CHECK(fun.eval_points.size() == 15);
    CHECK(fun.eval_points.front() == doctest::Approx(1.0 / 16));
    CHECK(fun.eval_points.back() == doctest::Approx(15.0 / 16));
    CHECK(fun.integral_points == std::vector<double>{0.5});

    CHECK(preset_full_scale().replications == 1000);

    const auto grid = default_eval_grid();
    REQUIRE(grid.size() == 15);
    for (int i = 0; i < 15; ++i)
        CHECK(grid[static_cast<std::size_t>(i)] ==
              doctest::Approx((i + 1) / 16.0));
}

#include <CLI11.hpp>
#include <json.hpp>

#include "splinebayes/credible.hpp"
#include "splinebayes/errors.hpp"
#include "splinebayes/posterior.hpp"
#include "splinebayes/simulation.hpp"
#include "splinebayes/tuning.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace splinebayes;

struct FitArgs {
    std::string data_path;
    long simulate_n = 0;
    std::string model = "gaussian";
    int m = 2;
    int basis = 0;  // 0 = default truncation for the sample size
    double lambda = -1.0;
    double beta = 2.0;
    double sigma2 = 1.0;
    std::string posterior = "flat";
    std::uint64_t seed = 1;
};

void add_fit_options(CLI::App* cmd, FitArgs& args) {
    cmd->add_option("--data", args.data_path,
                    "CSV file of observations (columns x,y; header allowed)");
    cmd->add_option("--simulate", args.simulate_n,
                    "draw this many observations from the built-in truth");
    cmd->add_option("--model", args.model,
                    "gaussian | binary | binomial:a | poisson");
    cmd->add_option("--m", args.m, "penalty derivative order");
    cmd->add_option("--basis", args.basis,
                    "basis size N (default: rate-driven truncation)");
    cmd->add_option("--lambda", args.lambda,
                    "fixed smoothing parameter (default: GCV selection)");
    cmd->add_option("--beta", args.beta, "prior decay exponent");
    cmd->add_option("--sigma2", args.sigma2, "null-space prior variance");
    cmd->add_option("--posterior", args.posterior,
                    "posterior mode: flat | tuning")
        ->check(CLI::IsMember({"flat", "tuning"}));
    cmd->add_option("--seed", args.seed, "random seed for --simulate");
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open data file: " + path);
    std::vector<double> xs, ys;
    std::string line;
    while (std::getline(in, line)) {
        double x, y;
        if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) == 2) {
            xs.push_back(x);
            ys.push_back(y);
        } else if (!xs.empty()) {
            throw ConfigError("malformed data row: " + line);
        }
        // non-numeric leading rows (headers) are skipped
    }
    if (xs.empty())
        throw ConfigError("no observations in " + path);
    Dataset d;
    d.x = Eigen::Map<Eigen::VectorXd>(xs.data(),
                                      static_cast<Eigen::Index>(xs.size()));
    d.y = Eigen::Map<Eigen::VectorXd>(ys.data(),
                                      static_cast<Eigen::Index>(ys.size()));
    return d;
}

EigenSystem make_basis(int m, int N) {
    if (m == 2)
        return EigenSystem::free_beam(N);
    return EigenSystem::galerkin(m, [](double) { return 1.0; }, 4 * N, N);
}

struct FittedState {
    ExpFamilyModel model;
    EigenSystem es;
    Dataset data;
    SplineFit fit;
    double h_gcv = 0.0;  // 0 when lambda was fixed by hand
};

FittedState run_fit(const FitArgs& args) {
    const ExpFamilyModel model = ExpFamilyModel::parse(args.model);
    Dataset data;
    if (!args.data_path.empty()) {
        data = load_csv(args.data_path);
    } else if (args.simulate_n > 0) {
        SimConfig cfg;
        cfg.model = args.model;
        Rng rng(args.seed);
        data = generate_dataset(cfg, args.simulate_n, rng);
    } else {
        throw ConfigError("provide --data or --simulate");
    }
    const int N = args.basis > 0
                      ? args.basis
                      : default_truncation(static_cast<int>(data.size()),
                                           args.m, args.beta);
    EigenSystem es = make_basis(args.m, N);
    double lambda = args.lambda;
    double h_gcv = 0.0;
    if (lambda < 0.0) {
        const GcvResult sel = select_lambda_gcv(model, es, data);
        lambda = sel.lambda;
        h_gcv = sel.h_gcv;
    }
    SplineFit fit = fit_penalized_mle(model, es, data, lambda);
    return FittedState{model, std::move(es), std::move(data), std::move(fit),
                       h_gcv};
}

PosteriorGP make_posterior(const FitArgs& args, const FittedState& st) {
    if (args.posterior == "tuning")
        return build_posterior(st.es,
                               build_prior(st.es, args.beta, args.sigma2),
                               st.fit, st.data.size());
    return flat_posterior(st.es, st.fit, st.data.size());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open output file: " + path);
    return out;
}

void print_fit_summary(const FittedState& st) {
    std::printf("n=%ld N=%d lambda=%.6g h=%.6g", (long)st.data.size(),
                st.es.size(), st.fit.lambda, st.fit.h);
    if (st.h_gcv > 0.0)
        std::printf(" h_gcv=%.6g", st.h_gcv);
    std::printf(" iterations=%d grad_norm=%.3g objective=%.10g\n",
                st.fit.iterations, st.fit.grad_norm, st.fit.objective);
}

int cmd_fit(const FitArgs& args, const std::string& out_path,
            const std::string& gcv_out) {
    const FittedState st = run_fit(args);
    print_fit_summary(st);
    if (!gcv_out.empty()) {
        const GcvResult sel = select_lambda_gcv(st.model, st.es, st.data);
        auto out = open_out(gcv_out);
        out << "lambda,score\n";
        for (Eigen::Index i = 0; i < sel.lambdas.size(); ++i)
            out << sel.lambdas[i] << ',' << sel.scores[i] << '\n';
    }
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        out << "z,fhat\n";
        for (int j = 0; j < 512; ++j) {
            const double z = j / 511.0;
            out << z << ',' << evaluate_fit(st.es, st.fit.coeffs, z) << '\n';
        }
    }
    return 0;
}

int cmd_sample(const FitArgs& args, int draws, const std::string& out_path) {
    const FittedState st = run_fit(args);
    const PosteriorGP post = make_posterior(args, st);
    print_fit_summary(st);
    Rng rng(mix_seed(args.seed, 0x5eed));
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        os = &file;
    }
    for (int i = 0; i < st.es.size(); ++i)
        *os << (i ? "," : "") << 'c' << (i + 1);
    *os << '\n';
    for (int k = 0; k < draws; ++k) {
        const Eigen::VectorXd c = sample_posterior(post, rng);
        for (Eigen::Index i = 0; i < c.size(); ++i)
            *os << (i ? "," : "") << c[i];
        *os << '\n';
    }
    return 0;
}

int cmd_interval(const FitArgs& args, double alpha,
                 const std::vector<double>& zs,
                 const std::vector<double>& z0s, const std::string& method,
                 int draws, const std::string& out_path) {
    const FittedState st = run_fit(args);
    const PosteriorGP post = make_posterior(args, st);
    print_fit_summary(st);

    std::ostringstream table;
    table << "kind,point,center,lower,upper,radius\n";
    char buf[160];
    for (double z : zs) {
        const auto F = LinearFunctional::evaluation(st.es, z);
        const CredibleInterval ci = functional_interval(post, F, alpha);
        std::snprintf(buf, sizeof buf, "eval,%g,%.8g,%.8g,%.8g,%.8g\n", z,
                      ci.center, ci.lower, ci.upper, ci.radius);
        table << buf;
    }
    for (double z0 : z0s) {
        const auto F = LinearFunctional::integral(st.es, 0.0, z0);
        const CredibleInterval ci = functional_interval(post, F, alpha);
        std::snprintf(buf, sizeof buf, "integral,%g,%.8g,%.8g,%.8g,%.8g\n", z0,
                      ci.center, ci.lower, ci.upper, ci.radius);
        table << buf;
    }

    RadiusSpec spec;
    spec.method = method == "asymptotic" ? RadiusMethod::asymptotic
                                         : RadiusMethod::monte_carlo;
    spec.alpha = alpha;
    spec.mc_draws = draws;
    spec.seed = mix_seed(args.seed, 17);
    const double r_strong = credible_radius(post, spec, RegionKind::strong);
    const double r_weak = credible_radius(post, spec, RegionKind::weak);
    table << "region_CR,,,,," << r_strong << '\n';
    table << "region_MCR,,,,," << r_weak << '\n';

    std::cout << table.str();
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        out << table.str();
    }
    return 0;
}

TuningRule parse_tuning(const std::string& s) {
    if (s == "gcv")
        return TuningRule::gcv;
    if (s == "fixed_h")
        return TuningRule::fixed_h;
    throw ConfigError("unknown tuning rule: " + s);
}

PosteriorMode parse_posterior(const std::string& s) {
    if (s == "flat")
        return PosteriorMode::flat;
    if (s == "tuning")
        return PosteriorMode::tuning;
    throw ConfigError("unknown posterior mode: " + s);
}

LambdaRule parse_lambda_rule(const std::string& s) {
    if (s == "raw")
        return LambdaRule::raw;
    if (s == "mapped")
        return LambdaRule::mapped;
    throw ConfigError("unknown lambda rule: " + s);
}

RadiusMethod parse_radius_method(const std::string& s) {
    if (s == "monte_carlo")
        return RadiusMethod::monte_carlo;
    if (s == "asymptotic")
        return RadiusMethod::asymptotic;
    throw ConfigError("unknown radius method: " + s);
}

SimConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    static const std::set<std::string> known = {
        "model",          "m",           "beta",          "sigma2",
        "tau_omega",      "sample_sizes", "replications",  "alphas",
        "tuning",         "fixed_h",     "posterior",     "lambda_rule",
        "radius_method",  "mc_draws",    "radius_override", "truncation",
        "max_iterations", "seed",        "eval_points",   "integral_points",
        "coverage_csv",   "curve_csv"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw ConfigError("unknown config key: " + item.key());

    SimConfig c;
    try {
        c.model = j.value("model", c.model);
        c.m = j.value("m", c.m);
        c.beta = j.value("beta", c.beta);
        c.sigma2 = j.value("sigma2", c.sigma2);
        c.tau_omega = j.value("tau_omega", c.tau_omega);
        if (j.contains("sample_sizes"))
            c.sample_sizes = j["sample_sizes"].get<std::vector<long>>();
        c.replications = j.value("replications", c.replications);
        if (j.contains("alphas"))
            c.alphas = j["alphas"].get<std::vector<double>>();
        if (j.contains("tuning"))
            c.tuning = parse_tuning(j["tuning"].get<std::string>());
        c.fixed_h = j.value("fixed_h", c.fixed_h);
        if (j.contains("posterior"))
            c.posterior = parse_posterior(j["posterior"].get<std::string>());
        if (j.contains("lambda_rule"))
            c.lambda_rule =
                parse_lambda_rule(j["lambda_rule"].get<std::string>());
        if (j.contains("radius_method"))
            c.radius_method =
                parse_radius_method(j["radius_method"].get<std::string>());
        c.mc_draws = j.value("mc_draws", c.mc_draws);
        c.radius_override = j.value("radius_override", c.radius_override);
        c.truncation = j.value("truncation", c.truncation);
        c.max_iterations = j.value("max_iterations", c.max_iterations);
        c.seed = j.value("seed", c.seed);
        if (j.contains("eval_points"))
            c.eval_points = j["eval_points"].get<std::vector<double>>();
        if (j.contains("integral_points"))
            c.integral_points =
                j["integral_points"].get<std::vector<double>>();
        c.coverage_csv = j.value("coverage_csv", c.coverage_csv);
        c.curve_csv = j.value("curve_csv", c.curve_csv);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config value failure: ") + e.what());
    }
    return c;
}

int cmd_coverage(const std::string& config_path, const std::string& preset,
                 long reps, std::uint64_t seed, bool seed_given,
                 const std::string& out_path, const std::string& curve_path) {
    SimConfig cfg;
    if (!config_path.empty())
        cfg = config_from_json_file(config_path);
    else if (preset == "region")
        cfg = preset_region_coverage();
    else if (preset == "functional")
        cfg = preset_functional_coverage();
    else if (preset == "full")
        cfg = preset_full_scale();
    else
        throw ConfigError("unknown preset: " + preset);
    if (reps > 0)
        cfg.replications = static_cast<int>(reps);
    if (seed_given)
        cfg.seed = seed;
    if (!out_path.empty())
        cfg.coverage_csv = out_path;
    if (!curve_path.empty())
        cfg.curve_csv = curve_path;

    const auto records = run_coverage_experiment(cfg);
    std::printf("%6s %6s %-16s %8s %12s %5s %5s %s\n", "n", "alpha",
                "set_kind", "coverage", "mean_radius", "reps", "fail",
                "method");
    for (const auto& r : records)
        std::printf("%6ld %6g %-16s %8.4f %12.6g %5d %5d %s\n", r.n, r.alpha,
                    r.set_kind.c_str(), r.coverage, r.mean_radius,
                    r.replications, r.failures, r.radius_method.c_str());
    return 0;
}

int cmd_eigen(int m, int N, const std::string& out_path) {
    const EigenSystem es = make_basis(m, N);
    std::ostringstream table;
    table << "nu,rho,gamma\n";
    char buf[96];
    for (int nu = 1; nu <= es.size(); ++nu) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g\n", nu,
                      es.rho()[nu - 1], es.gamma()[nu - 1]);
        table << buf;
    }
    if (out_path.empty())
        std::cout << table.str();
    else
        open_out(out_path) << table.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Penalized spline fitting with Gaussian pseudo-posterior credible "
        "sets"};
    app.require_subcommand(1);

    FitArgs fit_args, sample_args, interval_args;
    std::string fit_out, fit_gcv_out;
    auto* fit_cmd =
        app.add_subcommand("fit", "penalized maximum-likelihood fit");
    add_fit_options(fit_cmd, fit_args);
    fit_cmd->add_option("--out", fit_out,
                        "write the fitted curve (512-point grid) as CSV");
    fit_cmd->add_option("--gcv-out", fit_gcv_out,
                        "write the GCV score table as CSV");

    int sample_draws = 1;
    std::string sample_out;
    auto* sample_cmd =
        app.add_subcommand("sample", "draw posterior coefficient vectors");
    add_fit_options(sample_cmd, sample_args);
    sample_cmd->add_option("--draws", sample_draws, "number of draws");
    sample_cmd->add_option("--out", sample_out, "output CSV (default stdout)");

    double itv_alpha = 0.05;
    std::vector<double> itv_z, itv_z0;
    std::string itv_method = "monte_carlo", itv_out;
    int itv_draws = 10000;
    auto* itv_cmd = app.add_subcommand(
        "interval", "credible intervals for functionals and region radii");
    add_fit_options(itv_cmd, interval_args);
    itv_cmd->add_option("--alpha", itv_alpha, "miscoverage level");
    itv_cmd->add_option("--z", itv_z, "evaluation points f(z)");
    itv_cmd->add_option("--z0", itv_z0, "integral endpoints: F = int_0^z0 f");
    itv_cmd->add_option("--method", itv_method, "monte_carlo | asymptotic")
        ->check(CLI::IsMember({"monte_carlo", "asymptotic"}));
    itv_cmd->add_option("--draws", itv_draws, "Monte Carlo draws");
    itv_cmd->add_option("--out", itv_out, "also write the table to this file");

    std::string cov_config, cov_preset = "region", cov_out, cov_curve_out;
    long cov_reps = 0;
    std::uint64_t cov_seed = 0;
    auto* cov_cmd = app.add_subcommand(
        "coverage", "frequentist coverage experiment over many replicates");
    cov_cmd->add_option("--config", cov_config,
                        "JSON config file mirroring the experiment settings");
    cov_cmd->add_option("--preset", cov_preset,
                        "region | functional | full (ignored with --config)")
        ->check(CLI::IsMember({"region", "functional", "full"}));
    cov_cmd->add_option("--reps", cov_reps, "override replicate count");
    auto* cov_seed_opt =
        cov_cmd->add_option("--seed", cov_seed, "override base seed");
    cov_cmd->add_option("--out", cov_out, "coverage CSV path");
    cov_cmd->add_option("--curve-out", cov_curve_out,
                        "mean-curve CSV path (written for the largest n)");

    int eig_m = 2, eig_N = 10;
    std::string eig_out;
    auto* eig_cmd =
        app.add_subcommand("eigen", "tabulate the penalty eigen-system");
    eig_cmd->add_option("--m", eig_m, "penalty derivative order");
    eig_cmd->add_option("--basis", eig_N, "number of eigenfunctions");
    eig_cmd->add_option("--out", eig_out, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(fit_cmd))
            return cmd_fit(fit_args, fit_out, fit_gcv_out);
        if (app.got_subcommand(sample_cmd))
            return cmd_sample(sample_args, sample_draws, sample_out);
        if (app.got_subcommand(itv_cmd))
            return cmd_interval(interval_args, itv_alpha, itv_z, itv_z0,
                                itv_method, itv_draws, itv_out);
        if (app.got_subcommand(cov_cmd))
            return cmd_coverage(cov_config, cov_preset, cov_reps, cov_seed,
                                cov_seed_opt->count() > 0, cov_out,
                                cov_curve_out);
        if (app.got_subcommand(eig_cmd))
            return cmd_eigen(eig_m, eig_N, eig_out);
    } catch (const splinebayes::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

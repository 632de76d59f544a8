#include "splinebayes/expfamily.hpp"
#include "splinebayes/errors.hpp"

#include <cmath>
#include <limits>

namespace splinebayes {

namespace {

// natural-parameter guard for the exp-based links
constexpr double kEtaRange = 700.0;

// log(1+e^z) without overflow for large |z|
double log1p_exp(double z)
{
    if (z > 0.0)
        return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

// logistic mean 1/(1+e^{-z}), saturating stably
double sigmoid(double z)
{
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

ExpFamilyModel ExpFamilyModel::gaussian() { return ExpFamilyModel(ModelKind::gaussian, 1); }
ExpFamilyModel ExpFamilyModel::binary()   { return ExpFamilyModel(ModelKind::binary, 1); }
ExpFamilyModel ExpFamilyModel::poisson()  { return ExpFamilyModel(ModelKind::poisson, 1); }

ExpFamilyModel ExpFamilyModel::binomial(int trials)
{
    if (trials < 1)
        throw DomainError("binomial trial count must be >= 1");
    return ExpFamilyModel(ModelKind::binomial, trials);
}

ExpFamilyModel::Cumulants ExpFamilyModel::cumulants(double z) const
{
    if (!std::isfinite(z))
        throw DomainError("natural parameter must be finite");

    switch (kind_) {
    case ModelKind::gaussian:
        return {0.5 * z * z, z, 1.0, 0.0};

    case ModelKind::binary:
    case ModelKind::binomial: {
        if (std::fabs(z) > kEtaRange)
            throw RangeError("natural parameter out of range for logistic link");
        const double p = sigmoid(z);
        const double q = 1.0 - p;
        const double a = static_cast<double>(trials_);
        return {a * log1p_exp(z), a * p, a * p * q, a * p * q * (q - p)};
    }

    case ModelKind::poisson: {
        if (std::fabs(z) > kEtaRange)
            throw RangeError("natural parameter out of range for exponential link");
        const double e = std::exp(z);
        return {e, e, e, e};
    }
    }
    throw DomainError("unknown model kind");
}

double ExpFamilyModel::sample_response(double eta, Rng& rng) const
{
    switch (kind_) {
    case ModelKind::gaussian:
        return eta + rng.normal();

    case ModelKind::binary:
    case ModelKind::binomial: {
        const double p = sigmoid(eta);
        long count = 0;
        for (int t = 0; t < trials_; ++t)
            if (rng.uniform() < p)
                ++count;
        return static_cast<double>(count);
    }

    case ModelKind::poisson: {
        if (eta > kEtaRange)
            throw RangeError("Poisson mean exp(eta) overflows");
        return static_cast<double>(rng.poisson(std::exp(eta)));
    }
    }
    throw DomainError("unknown model kind");
}

ExpFamilyModel::RegularityBounds
ExpFamilyModel::regularity_bounds(double C, int grid_size) const
{
    if (!(C > 0.0))
        throw DomainError("regularity bound horizon C must be positive");
    if (grid_size < 2)
        grid_size = 2;

    RegularityBounds b{std::numeric_limits<double>::infinity(), 0.0, 0.0};
    for (int i = 0; i < grid_size; ++i) {
        const double z = -2.0 * C + 4.0 * C * i / (grid_size - 1);
        const Cumulants c = cumulants(z);
        b.addot_lower = std::min(b.addot_lower, c.Addot);
        b.addot_upper = std::max(b.addot_upper, c.Addot);
        b.adddot_bound = std::max(b.adddot_bound, std::fabs(c.Adddot));
    }
    return b;
}

bool ExpFamilyModel::y_in_support(double y) const
{
    switch (kind_) {
    case ModelKind::gaussian:
        return std::isfinite(y);
    case ModelKind::binary:
        return y == 0.0 || y == 1.0;
    case ModelKind::binomial:
        return y >= 0.0 && y <= trials_ && y == std::floor(y);
    case ModelKind::poisson:
        return y >= 0.0 && y == std::floor(y);
    }
    return false;
}

std::string ExpFamilyModel::name() const
{
    switch (kind_) {
    case ModelKind::gaussian: return "gaussian";
    case ModelKind::binary:   return "binary";
    case ModelKind::binomial: return "binomial:" + std::to_string(trials_);
    case ModelKind::poisson:  return "poisson";
    }
    return "?";
}

ExpFamilyModel ExpFamilyModel::parse(const std::string& name)
{
    if (name == "gaussian") return gaussian();
    if (name == "binary")   return binary();
    if (name == "poisson")  return poisson();
    if (name.rfind("binomial:", 0) == 0) {
        const int a = std::stoi(name.substr(9));
        return binomial(a);
    }
    if (name == "binomial")
        return binomial(1);
    throw ConfigError("unknown model name: " + name);
}

} // namespace splinebayes

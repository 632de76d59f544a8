#pragma once

#include "splinebayes/rng.hpp"

#include <string>

namespace splinebayes {

enum class ModelKind { gaussian, binary, binomial, poisson };

/** Natural exponential-family response model p(y|eta) ∝ exp(y*eta - A(eta)).

    Supplies the cumulant function A and its first three derivatives, response
    sampling, and grid-computed regularity bounds on the second derivative.
    Models are immutable and safe to share across threads; sampling always
    takes an explicit random source. */
class ExpFamilyModel {
public:
    static ExpFamilyModel gaussian();
    static ExpFamilyModel binary();
    /// Binomial with a fixed number of trials per observation (a >= 1).
    static ExpFamilyModel binomial(int trials);
    static ExpFamilyModel poisson();

    struct Cumulants {
        double A;       ///< cumulant value
        double Adot;    ///< mean function
        double Addot;   ///< variance function (> 0)
        double Adddot;  ///< third derivative
    };

    /** A(z) and derivatives at the natural parameter z.
        Throws RangeError for |z| > 700 on the exp-based models (binary,
        binomial, poisson), where exp would overflow or the value is
        numerically meaningless. */
    Cumulants cumulants(double z) const;

    /// One response draw with natural parameter eta; E[Y] = Adot(eta).
    double sample_response(double eta, Rng& rng) const;

    struct RegularityBounds {
        double addot_lower;   ///< min of Addot over [-2C, 2C]
        double addot_upper;   ///< max of Addot over [-2C, 2C]
        double adddot_bound;  ///< max of |Adddot| over [-2C, 2C]
    };

    /// Grid-computed bounds of Addot and |Adddot| over [-2C, 2C].
    RegularityBounds regularity_bounds(double C, int grid_size) const;

    ModelKind kind() const { return kind_; }
    int trials() const { return trials_; }
    /// True when y is a valid response value for this model.
    bool y_in_support(double y) const;
    std::string name() const;

    /// Parses "gaussian" | "binary" | "binomial:a" | "poisson".
    static ExpFamilyModel parse(const std::string& name);

private:
    ExpFamilyModel(ModelKind kind, int trials) : kind_(kind), trials_(trials) {}
    ModelKind kind_;
    int trials_;
};

} // namespace splinebayes

#include "splinebayes/quadrature.hpp"
#include "splinebayes/errors.hpp"

#include <cmath>

namespace splinebayes {

QuadRule gauss_legendre(int order)
{
    if (order < 1)
        throw DomainError("quadrature order must be >= 1");
    const int n = order;
    QuadRule rule;
    rule.x.resize(n);
    rule.w.resize(n);

    // Roots come in symmetric pairs; solve the upper half on [-1,1].
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-like initial guess for the i-th root (descending order)
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(t) and P_{n-1}(t)
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / pp;
            t -= dt;
            if (std::fabs(dt) < 1e-15)
                break;
        }
        const double wi = 2.0 / ((1.0 - t * t) * pp * pp);
        // map [-1,1] -> [0,1]; keep ascending node order
        rule.x[n - 1 - i] = 0.5 * (1.0 + t);
        rule.x[i] = 0.5 * (1.0 - t);
        rule.w[n - 1 - i] = 0.5 * wi;
        rule.w[i] = 0.5 * wi;
    }
    return rule;
}

} // namespace splinebayes

#pragma once

#include <Eigen/Dense>

namespace splinebayes {

/// Quadrature rule on [0,1]: sum_i w[i] * f(x[i]) approximates the integral.
struct QuadRule {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
};

/** Gauss-Legendre rule with `order` nodes, mapped to [0,1].
    Nodes are found by Newton iteration from the Chebyshev initial guess and
    are accurate to machine precision; exact for polynomials of degree
    2*order-1. Orders up to several thousand are fine (O(order^2) setup). */
QuadRule gauss_legendre(int order);

} // namespace splinebayes

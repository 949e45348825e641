#pragma once

#include <Eigen/Dense>

namespace nhtrace {

// Nodes and positive weights for a quadrature rule on [a, b].
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

// n-point Gauss-Legendre rule on [a, b], nodes ascending.
QuadratureRule gauss_legendre(int n, double a, double b);

// Composite Gauss-Legendre rule with n total nodes on [a, b].
// Nodes are split into panels of roughly `panel_order` points each
// (equal-width panels, panel orders differing by at most one), so
// construction stays O(n) and the panels resolve trigonometric
// integrands with a handful of points per wavelength.
QuadratureRule composite_gauss_legendre(int n, double a, double b,
                                        int panel_order = 24);

// Uniform periodic grid x_i = a + i*(b-a)/n, i = 0..n-1, weight (b-a)/n.
// Exact for trigonometric polynomials of degree < n on the period [a, b).
QuadratureRule periodic_trapezoid(int n, double a, double b);

}  // namespace nhtrace

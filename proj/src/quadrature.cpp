#include "nhtrace/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace nhtrace {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
// Classical gauleg scheme; converges in a few iterations for any n.
QuadratureRule reference_gauss_legendre(int n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 1; i <= m; ++i) {
        double z = std::cos(M_PI * (i - 0.25) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.nodes[i - 1] = -z;
        rule.nodes[n - i] = z;
        rule.weights[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - i] = rule.weights[i - 1];
    }
    return rule;
}

const QuadratureRule& cached_reference_rule(int n) {
    static std::map<int, QuadratureRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, reference_gauss_legendre(n)).first;
    return it->second;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    if (!(b > a)) throw std::invalid_argument("gauss_legendre: need b > a");
    const QuadratureRule& ref = cached_reference_rule(n);
    QuadratureRule rule;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    rule.nodes = (ref.nodes.array() * half + mid).matrix();
    rule.weights = ref.weights * half;
    return rule;
}

QuadratureRule composite_gauss_legendre(int n, double a, double b, int panel_order) {
    if (n < 1) throw std::invalid_argument("composite_gauss_legendre: n must be positive");
    if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: need b > a");
    if (panel_order < 2) throw std::invalid_argument("composite_gauss_legendre: panel_order < 2");

    const int panels = std::max(1, (n + panel_order / 2) / panel_order);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double width = (b - a) / panels;
    int offset = 0;
    for (int p = 0; p < panels; ++p) {
        // distribute the n nodes so panel orders differ by at most one
        const int order = (n * (p + 1)) / panels - (n * p) / panels;
        if (order == 0) continue;
        const double lo = a + p * width;
        QuadratureRule panel = gauss_legendre(order, lo, lo + width);
        rule.nodes.segment(offset, order) = panel.nodes;
        rule.weights.segment(offset, order) = panel.weights;
        offset += order;
    }
    return rule;
}

QuadratureRule periodic_trapezoid(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("periodic_trapezoid: n must be positive");
    if (!(b > a)) throw std::invalid_argument("periodic_trapezoid: need b > a");
    QuadratureRule rule;
    const double h = (b - a) / n;
    rule.nodes = Eigen::VectorXd::LinSpaced(n, 0, n - 1) * h;
    rule.nodes.array() += a;
    rule.weights = Eigen::VectorXd::Constant(n, h);
    return rule;
}

}  // namespace nhtrace

#pragma once

#include <vector>

namespace wickforge::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1].  Rules are computed once and cached.
const Rule& gauss_legendre(int n);

/// n-point Gauss-Hermite rule for the standard normal law: sum_i w_i g(x_i)
/// approximates E[g(G)], G ~ N(0,1).  Weights sum to one.
const Rule& gauss_hermite(int n);

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` equal panels.
template <class F>
double integrate(F&& f, double a, double b, int panels, int order = 16) {
    const Rule& rule = gauss_legendre(order);
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int m = 0; m < panels; ++m) {
        const double mid = a + (m + 0.5) * width;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            acc += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
        }
        total += 0.5 * width * acc;
    }
    return total;
}

}  // namespace wickforge::quadrature

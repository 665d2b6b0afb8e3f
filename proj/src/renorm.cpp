#include "wickforge/renorm.hpp"

#include "wickforge/basis.hpp"
#include "wickforge/phi_tilde.hpp"
#include "wickforge/quadrature.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wickforge::renorm {

namespace {

// E[phi(sqrt(t) G) He_n(G)] t^{-n/2} / n!, n = 0..D
std::vector<double> coefficients(const ScalarFunction& phi, double t, int D, int order) {
    const auto& rule = quadrature::gauss_hermite(order);
    const double s = std::sqrt(t);
    std::vector<double> d(static_cast<std::size_t>(D) + 1, 0.0);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double g = rule.nodes[i];
        const double v = rule.weights[i] * phi(s * g);
        double prev = 1.0;
        double cur = g;
        d[0] += v;
        for (int n = 1; n <= D; ++n) {
            d[static_cast<std::size_t>(n)] += v * cur;
            const double next = g * cur - n * prev;
            prev = cur;
            cur = next;
        }
    }
    double scale = 1.0;
    for (int n = 1; n <= D; ++n) {
        scale *= s * n;
        d[static_cast<std::size_t>(n)] /= scale;
    }
    return d;
}

double smoothed_norm_sq(const Eigen::VectorXd& h, double p) {
    basis::SpectralBasis basis(static_cast<int>(h.size()));
    return basis.powers(-p).cwiseProduct(h).squaredNorm();
}

chaos::ChaosExpansion first_chaos(const Eigen::VectorXd& h, int cap) {
    return chaos::ChaosExpansion::first_chaos(std::span<const double>(h.data(), static_cast<std::size_t>(h.size())), cap);
}

}  // namespace

HeatCoeffs heat_semigroup_coeffs(const ScalarFunction& phi, double t, int D, int order, double tolerance) {
    if (!(t > 0.0)) throw std::invalid_argument("heat semigroup variance must be positive");
    if (D < 0) throw std::invalid_argument("degree must be non-negative");
    HeatCoeffs out;
    out.t = t;
    out.order = order > 0 ? order : std::max(16, 4 * D);
    if (out.order < 4 * D) {
        throw std::invalid_argument("Gauss-Hermite order " + std::to_string(out.order) + " is below 4 D = " +
                                    std::to_string(4 * D));
    }
    out.d = coefficients(phi, t, D, out.order);
    const auto finer = coefficients(phi, t, D, out.order + 8);
    double weight = 1.0;  // t^{n/2} sqrt(n!)
    for (int n = 0; n <= D; ++n) {
        if (n > 0) weight *= std::sqrt(t * n);
        out.quad_error = std::max(out.quad_error, weight * std::abs(out.d[static_cast<std::size_t>(n)] -
                                                                    finer[static_cast<std::size_t>(n)]));
    }
    const auto& fine = quadrature::gauss_hermite(2 * out.order + 40);
    const double s = std::sqrt(t);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const double v = phi(s * fine.nodes[i]);
        out.second_moment += fine.weights[i] * v * v;
    }
    double series = 0.0;
    double tn_fact = 1.0;  // t^n n!
    for (int n = 0; n <= D; ++n) {
        if (n > 0) tn_fact *= t * n;
        series += tn_fact * out.d[static_cast<std::size_t>(n)] * out.d[static_cast<std::size_t>(n)];
    }
    out.kuo_residual = std::abs(out.second_moment - series);
    if (out.kuo_residual > tolerance) {
        std::ostringstream os;
        os << "heat-semigroup coefficients for " << phi.spec() << " at t = " << t << ", D = " << D
           << " miss E[phi^2] by " << out.kuo_residual << "; raise the degree or the quadrature order";
        throw QuadratureInconsistency(os.str());
    }
    return out;
}

chaos::ChaosExpansion wick_compose(const HeatCoeffs& coeffs, const Eigen::VectorXd& h, int max_degree) {
    const int K = static_cast<int>(h.size());
    const int D = coeffs.degree();
    if (D > max_degree) {
        throw chaos::DegreeCapError("Wick composition of degree " + std::to_string(D) +
                                    " exceeds the cap " + std::to_string(max_degree));
    }
    const auto x = first_chaos(h, max_degree);
    chaos::ChaosExpansion power = chaos::ChaosExpansion::constant(K, 1.0, max_degree);
    chaos::ChaosExpansion out(K, max_degree);
    for (int n = 0; n <= D; ++n) {
        if (n > 0) power = chaos::wick(power, x);
        for (const auto& [alpha, c] : power.terms()) out.add(alpha, coeffs.d[static_cast<std::size_t>(n)] * c);
    }
    return out.prune();
}

PropositionReport proposition_check(const ScalarFunction& phi, const Eigen::VectorXd& h, double p, int D,
                                    int order) {
    PropositionReport out;
    out.p = p;
    out.variance = smoothed_norm_sq(h, p);
    if (!(out.variance > 0.0)) throw std::invalid_argument("proposition check needs |A^{-p} h| > 0");
    const int cap = std::max(chaos::kDefaultMaxDegree, D);
    chaos::Projection proj;
    proj.degree = D;
    proj.order = order;
    out.lhs = chaos::phi_tilde(phi, first_chaos(h, cap), p, proj).value;
    const auto coeffs = heat_semigroup_coeffs(phi, out.variance, D, order, std::numeric_limits<double>::infinity());
    out.kuo_residual = coeffs.kuo_residual;
    out.order = coeffs.order;
    out.rhs = wick_compose(coeffs, h, cap);
    out.discrepancy = chaos::max_abs_difference(out.lhs, out.rhs);
    out.pass = out.discrepancy < 1e-8 && out.kuo_residual < kKuoTolerance;
    return out;
}

ErrorBoundReport error_bound_check(const ScalarFunction& phi, const Eigen::VectorXd& h, double p, int D,
                                   int sweep_points) {
    if (!(p >= 0.0)) throw std::invalid_argument("error bound needs p >= 0");
    ErrorBoundReport out;
    out.p = p;
    out.h_norm_sq = h.squaredNorm();
    out.smoothed_norm_sq = smoothed_norm_sq(h, p);
    out.sup_second_derivative = phi.sup_second_derivative();
    if (!std::isfinite(out.sup_second_derivative)) {
        throw std::invalid_argument("error bound needs a bounded second derivative; " + phi.spec() + " has none");
    }
    const int cap = std::max(chaos::kDefaultMaxDegree, D);
    chaos::Projection proj;
    proj.degree = D;
    const auto x = first_chaos(h, cap);
    const auto plain = chaos::phi_tilde(phi, x, 0.0, proj).value;
    const auto renormalized = chaos::phi_tilde(phi, x, p, proj).value;
    out.lhs = chaos::norm(plain - renormalized, -p);

    const double gap = 0.5 * (out.h_norm_sq - out.smoothed_norm_sq);
    out.vacuous = !(out.smoothed_norm_sq < out.h_norm_sq);
    if (out.vacuous) {
        out.pass = out.lhs <= 1e-12;
        return out;
    }
    auto constant = [&](double tau) { return 1.0 / std::sqrt(1.0 - out.smoothed_norm_sq / tau); };
    out.constant = constant(out.h_norm_sq);
    out.rhs = out.constant * out.sup_second_derivative * gap;
    for (int i = 1; i <= sweep_points; ++i) {
        const double tau = out.smoothed_norm_sq + (out.h_norm_sq - out.smoothed_norm_sq) * i / sweep_points;
        const double c = constant(tau);
        out.sweep.push_back({tau, c, c * out.sup_second_derivative * gap});
    }
    out.pass = out.lhs <= out.rhs * (1.0 + 1e-12) + 1e-14;
    return out;
}

}  // namespace wickforge::renorm

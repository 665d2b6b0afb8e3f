#include "wickforge/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace wickforge::quadrature {

namespace {

Rule build_legendre(int n) {
    Rule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

// Jacobi-matrix eigenvalues as starting points, Newton on orthonormal
// physicists' Hermite polynomials, then x -> sqrt(2) x, w -> w / sqrt(pi).
Rule build_hermite(int n) {
    if (n > 600) throw std::invalid_argument("Gauss-Hermite order above 600 overflows the recurrence");
    Rule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const int half = (n + 1) / 2;
    Eigen::VectorXd guess(1);
    guess[0] = 0.0;
    if (n > 1) {
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd off(n - 1);
        for (int j = 1; j < n; ++j) off[j - 1] = std::sqrt(0.5 * j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
        eig.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
        guess = eig.eigenvalues().reverse();  // descending
    }
    for (int i = 0; i < half; ++i) {
        double z = guess[i];
        double pp = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        const double w = 2.0 / (pp * pp);
        const double x = std::sqrt(2.0) * z;
        const double wn = w / std::sqrt(std::numbers::pi);
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -x;
        rule.weights[static_cast<std::size_t>(i)] = wn;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = wn;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

template <class Build>
const Rule& cached(std::map<int, std::unique_ptr<Rule>>& cache, std::mutex& mutex, int n,
                   Build&& build) {
    if (n < 1) throw std::invalid_argument("quadrature order must be positive");
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Rule>(build(n))).first;
    return *it->second;
}

}  // namespace

const Rule& gauss_legendre(int n) {
    static std::map<int, std::unique_ptr<Rule>> cache;
    static std::mutex mutex;
    return cached(cache, mutex, n, build_legendre);
}

const Rule& gauss_hermite(int n) {
    static std::map<int, std::unique_ptr<Rule>> cache;
    static std::mutex mutex;
    return cached(cache, mutex, n, build_hermite);
}

}  // namespace wickforge::quadrature

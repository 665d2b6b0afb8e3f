#include "wickforge/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wickforge::basis {

namespace {

void check_time(double t) {
    if (!std::isfinite(t) || t < 0.0) {
        throw std::domain_error("Laguerre functions are defined for finite t >= 0, got t = " +
                                std::to_string(t));
    }
}

// log of the rising factorial s (s+1) ... (s+n-1)
double log_rising(double s, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::log(s + i);
    return acc;
}

}  // namespace

double laguerre_eval(int k, double t) {
    if (k < 0) throw std::domain_error("Laguerre degree must be non-negative");
    check_time(t);
    double prev = std::exp(-0.5 * t);
    if (k == 0) return prev;
    double cur = (1.0 - t) * prev;
    for (int n = 1; n < k; ++n) {
        const double next = ((2.0 * n + 1.0 - t) * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

void laguerre_all(double t, std::span<double> out) {
    check_time(t);
    if (out.empty()) return;
    out[0] = std::exp(-0.5 * t);
    if (out.size() == 1) return;
    out[1] = (1.0 - t) * out[0];
    for (std::size_t n = 1; n + 1 < out.size(); ++n) {
        const double dn = static_cast<double>(n);
        out[n + 1] = ((2.0 * dn + 1.0 - t) * out[n] - dn * out[n - 1]) / (dn + 1.0);
    }
}

SeriesTail spectral_tail(int K, double p) {
    SeriesTail tail;
    const double s = 2.0 * p;
    if (s <= 1.0) {
        tail.divergent = true;
        tail.estimate = tail.error = tail.upper = std::numeric_limits<double>::infinity();
        tail.lower = std::numeric_limits<double>::infinity();
        return tail;
    }
    const double x = K + 1.5;
    const double log_x = std::log(x);
    // integral_K^inf (u + 3/2)^{-s} du and g(K)
    const double integral = std::exp((1.0 - s) * log_x - std::log(s - 1.0));
    const double g0 = std::exp(-s * log_x);
    tail.lower = integral;
    tail.upper = integral + g0;

    // explicit head, Euler-Maclaurin from x_em on
    constexpr int head_terms = 16;
    double head = 0.0;
    for (int i = head_terms - 1; i >= 0; --i) head += std::exp(-s * std::log(x + i));
    const double x_em = x + head_terms;
    const double log_xe = std::log(x_em);

    // Euler-Maclaurin: sum_{k>=n} g(k) = int + g(n)/2 - sum_j B_2j/(2j)! g^{(2j-1)}(n).
    // g^{(n)}(x) = (-1)^n s(s+1)...(s+n-1) x^{-s-n}, so every correction is
    // B_2j/(2j)! * rising(s, 2j-1) * x^{-s-2j+1} in magnitude with sign of B_2j.
    static constexpr double bernoulli[] = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
                                           5.0 / 66.0};
    double estimate = head + std::exp((1.0 - s) * log_xe - std::log(s - 1.0)) + 0.5 * std::exp(-s * log_xe);
    double log_fact = 0.0;  // log (2j)!
    double previous = std::numeric_limits<double>::infinity();
    double error = 0.0;
    for (int j = 1; j <= 5; ++j) {
        log_fact += std::log(2.0 * j - 1.0) + std::log(2.0 * j);
        const int order = 2 * j - 1;
        const double magnitude =
            std::exp(std::log(std::abs(bernoulli[j - 1])) - log_fact + log_rising(s, order) -
                     (s + order) * log_xe);
        if (magnitude >= previous) {  // asymptotic series started to grow
            error = previous;
            break;
        }
        if (j == 5 || magnitude < 1e-17 * estimate) {
            error = magnitude;
            break;
        }
        // -B_2j/(2j)! g^{(2j-1)}(n) with g^{(odd)} < 0 carries the sign of B_2j
        estimate += (bernoulli[j - 1] > 0 ? 1.0 : -1.0) * magnitude;
        previous = magnitude;
    }
    if (!(error < 0.5 * (tail.upper - tail.lower))) {
        estimate = 0.5 * (tail.lower + tail.upper);
        error = 0.5 * (tail.upper - tail.lower);
    }
    tail.estimate = std::clamp(estimate, tail.lower, tail.upper);
    tail.error = error;
    return tail;
}

SpectralBasis::SpectralBasis(int K) : K_(K) {
    if (K <= 0) throw std::invalid_argument("basis truncation K must be positive");
    log_lambda_.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) log_lambda_[static_cast<std::size_t>(k)] = std::log(k + 1.5);
}

double SpectralBasis::power(int k, double s) const {
    return std::exp(s * log_eigenvalue(k));
}

Eigen::VectorXd SpectralBasis::powers(double s) const {
    Eigen::VectorXd out(K_);
    for (int k = 0; k < K_; ++k) out[k] = power(k, s);
    return out;
}

double SpectralBasis::spectral_sum(double p) const {
    double acc = 0.0;
    // smallest terms first
    for (int k = K_ - 1; k >= 0; --k) acc += power(k, -2.0 * p);
    return acc;
}

void SpectralBasis::evaluate(double t, std::span<double> out) const {
    laguerre_all(t, out.first(static_cast<std::size_t>(K_)));
}

Eigen::VectorXd SpectralBasis::evaluate(double t) const {
    Eigen::VectorXd out(K_);
    laguerre_all(t, std::span<double>(out.data(), static_cast<std::size_t>(K_)));
    return out;
}

DeltaVector delta(const SpectralBasis& basis, double t, double p) {
    DeltaVector d{t, p, basis.evaluate(t)};
    d.coords.array() *= basis.powers(-p).array();
    return d;
}

DeltaNorm delta_norm_sq(const SpectralBasis& basis, double t, double p) {
    DeltaNorm out;
    const Eigen::VectorXd xi = basis.evaluate(t);
    double acc = 0.0;
    for (int k = basis.size() - 1; k >= 0; --k) acc += basis.power(k, -2.0 * p) * xi[k] * xi[k];
    out.value = acc;
    out.tail = spectral_tail(basis.size(), p);
    out.divergent = out.tail.divergent;
    out.slow_tail = out.divergent || out.tail.upper > 0.01 * basis.spectral_sum(p);
    return out;
}

double kernel_Kp(const SpectralBasis& basis, double r, double s, double p) {
    const Eigen::VectorXd xr = basis.evaluate(r);
    const Eigen::VectorXd xs = basis.evaluate(s);
    double acc = 0.0;
    for (int k = basis.size() - 1; k >= 0; --k) acc += basis.power(k, -2.0 * p) * xr[k] * xs[k];
    return acc;
}

SupDeltaNorm sup_delta_norm(const SpectralBasis& basis, double p, SupSearch search) {
    if (search.points < 2 || !(search.t_max > 0.0)) {
        throw std::invalid_argument("sup search needs t_max > 0 and at least two points");
    }
    SupDeltaNorm out;
    const Eigen::VectorXd weights = basis.powers(-2.0 * p);
    Eigen::VectorXd xi(basis.size());
    const double h = search.t_max / (search.points - 1);
    out.value = -1.0;
    for (int i = 0; i < search.points; ++i) {
        const double t = i * h;
        basis.evaluate(t, std::span<double>(xi.data(), static_cast<std::size_t>(xi.size())));
        const double v = (weights.array() * xi.array().square()).sum();
        if (v > out.value) {
            out.value = v;
            out.argmax = t;
        }
    }
    out.tail = spectral_tail(basis.size(), p);
    out.divergent = out.tail.divergent;
    out.slow_tail = out.divergent || out.tail.upper > 0.01 * out.value;
    return out;
}

}  // namespace wickforge::basis

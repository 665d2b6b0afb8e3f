#pragma once

// Elements f of S in the truncated Laguerre basis: f(s) = sum_{k<K} f_k xi_k(s).

#include "wickforge/basis.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>

namespace wickforge {

struct Bump {
    double a = 0.0;
    double b = 1.0;
    double height = 1.0;

    /// height * exp(1 - 1/(1 - u^2)) for u in (-1, 1) the rescaled position in (a, b).
    double operator()(double s) const;
    double l2_norm_sq() const;
};

class TestFunction {
public:
    TestFunction() = default;
    explicit TestFunction(Eigen::VectorXd coeffs, std::string tag = {});

    /// Laguerre coefficients of a bump by composite Gauss-Legendre over its support.
    static TestFunction from_bump(const Bump& bump, int K);
    /// {"coeffs":[...]} (zero padded to K) or {"bump":{"a":..,"b":..,"height":..}}
    static TestFunction from_json(const nlohmann::json& j, int K);
    nlohmann::json to_json() const;

    int size() const { return static_cast<int>(coeffs_.size()); }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    std::span<const double> span() const { return {coeffs_.data(), static_cast<std::size_t>(coeffs_.size())}; }
    const std::string& tag() const { return tag_; }
    const std::optional<Bump>& bump() const { return bump_; }

    double operator()(double s) const;
    /// |f|_q^2 = sum lambda_k^{2q} f_k^2
    double norm_sq(double q = 0.0) const;
    /// (A^p f)_k = lambda_k^p f_k
    TestFunction scaled(double p) const;

    /// For a bump: |g|^2 minus the captured sum g_k^2, the L^2 mass lost to truncation.
    double truncation_mass() const { return truncation_mass_; }

    TestFunction operator+(const TestFunction& other) const;
    TestFunction operator-(const TestFunction& other) const;
    TestFunction operator*(double s) const;

private:
    Eigen::VectorXd coeffs_;
    std::string tag_;
    std::optional<Bump> bump_;
    double truncation_mass_ = 0.0;
};

}  // namespace wickforge

#pragma once

// Scalar nonlinearities phi with their first three derivatives.

#include <string>
#include <string_view>
#include <vector>

namespace wickforge {

class ScalarFunction {
public:
    enum class Kind { Cos, Sin, Tanh, Polynomial };

    /// "cos", "sin", "tanh", "id", "square" or "poly:c0,c1,..." (coefficients of 1, x, x^2, ...).
    static ScalarFunction parse(std::string_view spec);
    static ScalarFunction polynomial(std::vector<double> coeffs);

    Kind kind() const { return kind_; }
    const std::string& spec() const { return spec_; }

    double operator()(double x) const { return derivative(0, x); }
    /// n-th derivative, any n >= 0.
    double derivative(int n, double x) const;

    bool bounded() const { return kind_ != Kind::Polynomial || degree() == 0; }
    /// Polynomial degree, or 0 for the bounded kinds.
    int degree() const;
    /// sup |phi''| over the real line (infinite for polynomials of degree > 2).
    double sup_second_derivative() const;

private:
    Kind kind_ = Kind::Polynomial;
    std::string spec_;
    std::vector<double> coeffs_;
};

}  // namespace wickforge

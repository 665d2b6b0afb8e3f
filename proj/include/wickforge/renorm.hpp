#pragma once

// First-chaos renormalization: heat-semigroup coefficients, Wick composition,
// and the two identities relating phi~_p(I_1(h)) to them.

#include "wickforge/chaos.hpp"
#include "wickforge/functions.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace wickforge::renorm {

inline constexpr double kKuoTolerance = 1e-9;

class QuadratureInconsistency : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HeatCoeffs {
    double t = 0.0;
    std::vector<double> d;      // d_n = (P_t phi)^{(n)}(0) / n!, n = 0..D
    int order = 0;              // Gauss-Hermite points
    double quad_error = 0.0;    // max_n |d_n(order) - d_n(order + 8)| t^{n/2} sqrt(n!)
    double second_moment = 0.0; // E[phi(X(t))^2] by an independent finer rule
    double kuo_residual = 0.0;  // |second_moment - sum_n t^n n! d_n^2|

    int degree() const { return static_cast<int>(d.size()) - 1; }
};

/// order 0 -> 4 D (at least 16).  Throws QuadratureInconsistency when the
/// self-consistency residual exceeds `tolerance`.
HeatCoeffs heat_semigroup_coeffs(const ScalarFunction& phi, double t, int D, int order = 0,
                                 double tolerance = kKuoTolerance);

/// sum_n d_n I_1(h)^{<>n}
chaos::ChaosExpansion wick_compose(const HeatCoeffs& coeffs, const Eigen::VectorXd& h,
                                   int max_degree = chaos::kDefaultMaxDegree);

struct PropositionReport {
    double p = 0.0;
    double variance = 0.0;  // |A^{-p} h|^2
    double discrepancy = 0.0;
    double kuo_residual = 0.0;
    int order = 0;
    chaos::ChaosExpansion lhs{1};
    chaos::ChaosExpansion rhs{1};
    bool pass = false;  // discrepancy < 1e-8 and kuo residual < 1e-9
};

/// phi~_p(I_1(h)) against (P_{|A^{-p}h|^2} phi)^<> (I_1(h)), truncated at degree D.
PropositionReport proposition_check(const ScalarFunction& phi, const Eigen::VectorXd& h, double p,
                                    int D = 10, int order = 0);

struct TauPoint {
    double tau = 0.0;
    double constant = 0.0;
    double bound = 0.0;
};

struct ErrorBoundReport {
    double p = 0.0;
    double h_norm_sq = 0.0;
    double smoothed_norm_sq = 0.0;
    double lhs = 0.0;
    double sup_second_derivative = 0.0;
    double constant = 0.0;  // C at tau = |h|^2
    double rhs = 0.0;       // bound with that constant
    std::vector<TauPoint> sweep;
    bool vacuous = false;   // |A^{-p} h| = |h|
    bool pass = false;
};

/// ||phi(I_1(h)) - phi~_p(I_1(h))||_{-p} against C sup|phi''| (|h|^2 - |A^{-p}h|^2)/2
/// with C(tau) = (1 - |A^{-p}h|^2/tau)^{-1/2}.  C decreases in tau, so tau = |h|^2
/// gives the smallest right-hand side; the check is made there and the sweep is reported.
ErrorBoundReport error_bound_check(const ScalarFunction& phi, const Eigen::VectorXd& h, double p,
                                   int D = 10, int sweep_points = 8);

}  // namespace wickforge::renorm

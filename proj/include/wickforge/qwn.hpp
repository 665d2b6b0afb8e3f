#pragma once

// The quadratic white noise: W_t = I_1(delta_t), W_t^{<>2}, and
// X_t = int_0^t W_s^{<>2} ds = z^T G(t) z - tr G(t) in the truncated model.

#include "wickforge/basis.hpp"
#include "wickforge/chaos.hpp"
#include "wickforge/ensemble.hpp"
#include "wickforge/functions.hpp"
#include "wickforge/gram_cache.hpp"
#include "wickforge/test_function.hpp"

#include <Eigen/Dense>

#include <vector>

namespace wickforge::qwn {

/// Lambda^{-p} G Lambda^{-p}
Eigen::MatrixXd smoothed_gram(const Eigen::MatrixXd& G, const basis::SpectralBasis& basis, double p);

struct QwnProcess {
    double t = 0.0;
    double p = 0.0;
    Eigen::MatrixXd G;  // G(t)
    Eigen::MatrixXd M;  // M_p(t) = Lambda^{-p} G(t) Lambda^{-p}

    QwnProcess(const gram::GramCache& cache, double t, double p);
};

chaos::ChaosExpansion white_noise(const basis::SpectralBasis& basis, double t,
                                  int max_degree = chaos::kDefaultMaxDegree);
chaos::ChaosExpansion wick_square_wn(const basis::SpectralBasis& basis, double t,
                                     int max_degree = chaos::kDefaultMaxDegree);
chaos::ChaosExpansion x_process(const gram::GramCache& cache, double t,
                                int max_degree = chaos::kDefaultMaxDegree);

struct SquareCheck {
    double t = 0.0;
    double p = 0.0;
    double constant_lhs = 0.0;   // constant of X^{*_p 2} - X^{<>2}
    double constant_rhs = 0.0;   // 2 tr(M^2)
    double discrepancy = 0.0;    // max coefficient difference
    double rhs_scale = 0.0;      // max |coefficient| of the right-hand side
    chaos::ChaosExpansion lhs;
    chaos::ChaosExpansion rhs;
};

/// X_t^{*_p 2} - X_t^{<>2} against 2 tr(M^2) + :z^T (4 Lambda^p M^2 Lambda^p) z:.
SquareCheck ito_square_check(const gram::GramCache& cache, double t, double p, int max_degree = 4);

struct NormBound {
    double t = 0.0;
    double p = 0.0;
    double integral = 0.0;     // int_0^t ||W_s^{<>2}||_{-p} ds, chaos norms under Gauss-Legendre
    double trace_form = 0.0;   // sqrt(2) tr M_p(t)
    double bound = 0.0;        // sqrt(2) sum_{k<K} lambda_k^{-2p}
    double quad_error = 0.0;
};

NormBound norm_integral_bound(const gram::GramCache& cache, double t, double p, int panels = 4);

struct FdPoint {
    double s = 0.0;
    double derivative = 0.0;   // A + B + C at s
    double a = 0.0, b = 0.0, c = 0.0;
    double direct = 0.0;       // E[phi'(Y_s) Y'_s], the chain-rule form before integration by parts
    double fd = 0.0;           // Richardson central difference of E[phi(Y_s)]
    double fd_bound = 0.0;
    double sigma = 0.0;        // standard error of the paired difference
    bool pass = false;
};

struct ItoReport {
    double t = 0.0;
    double p = 0.0;
    double lhs = 0.0;         // E[phi(Y_t)]
    double rhs = 0.0;         // phi(0) + int_0^t (A + B + C) ds
    double diff = 0.0;
    double mc_stderr = 0.0;   // paired, lhs - rhs per sample
    double quad_bound = 0.0;  // |Q_n - Q_{n/2}| of the time integral
    bool pass = false;
    std::vector<FdPoint> fd;
};

struct ItoSettings {
    int nodes = 16;          // Gauss-Legendre nodes on [0, t]
    int fd_points = 5;       // interior times k t / (fd_points + 1)
    double fd_step = 1e-3;   // relative to t
};

/// The S-transform form of the Ito-type formula at f.  A, B, C are the
/// integrated-by-parts expectations
///   A = E[phi'''(Y) (2 a^T M z')^2] + 2 a^T M a E[phi''(Y)],
///   B = 4 f(s) E[phi''(Y) a^T M z'],  C = f(s)^2 E[phi'(Y)],
/// with a = a(s) = (lambda^{-p} xi(s)), M = M_p(s), z' = z + Lambda^p f and
/// Y = z'^T M z' - tr M.  Requires p > 1.
ItoReport ito_formula_check(const ScalarFunction& phi, const gram::GramCache& cache, double p,
                            double t, const TestFunction& f, const mc::PathEnsemble& ensemble,
                            const ItoSettings& settings = {});

}  // namespace wickforge::qwn

#pragma once

// dY/dt = b~_p(Y) + Y *_p W_t^{<>2}, Y_0 = x, solved through the random ODE
//   dV/ds = b(V e^zeta) e^{-zeta},  zeta_s = int_0^s (W_r^p)^2 - |delta_r^p|^2 dr,
// with Y_t = Gamma(A^p)(V_t e^{zeta_t}).  Under the S-transform at f every
// expectation is taken over translated paths z' = z + Lambda^p f, for which
// W^p becomes W^p + f.
//
// zeta is carried as a second ODE component.  The quadratic form
// z'^T M_p(t) z' - tr M_p(t) is kept as an independent cross-check.

#include "wickforge/basis.hpp"
#include "wickforge/ensemble.hpp"
#include "wickforge/gram_cache.hpp"
#include "wickforge/test_function.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wickforge::sde {

struct DriftSpec {
    std::string name;
    std::function<double(double)> b;
    double C = 0.0;  // Lipschitz and linear-growth constant
    std::optional<double> linear;  // beta when b(y) = beta y

    /// "zero", "id", "tanh" or "tanh:<s>" (b(y) = s tanh y).
    static DriftSpec parse(const std::string& spec);
};

/// Spot check |b(x)-b(y)| <= C|x-y| and |b(x)| <= C(1+|x|) on random pairs.
bool check_drift(const DriftSpec& drift, int pairs = 1000, std::uint64_t seed = 7);

class BeyondLifetime : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Method { RK4, RK45 };

struct SolverConfig {
    Method method = Method::RK4;
    double step = 1e-3;   // RK4 step (rounded so the step count is even)
    double rtol = 1e-8;   // RK45
    double atol = 1e-12;  // RK45
    int record = 0;       // samples whose paths are kept on the output grid
    int output_points = 0;  // output grid size - 1; 0 -> every RK4 step, 100 for RK45
};

struct Problem {
    DriftSpec drift;
    double x0 = 1.0;
    double p = 1.5;
    double t = 0.1;
    std::optional<TestFunction> f;
    bool allow_beyond_T = false;
    bool allow_low_p = false;
};

struct SampleResult {
    double V = 0.0;
    double zeta = 0.0;
    double U = 0.0;               // V e^zeta at t
    double drift_integral = 0.0;  // int_0^t b(V e^zeta) ds
    double noise_integral = 0.0;  // int_0^t V e^zeta ((W^p+f)^2 - |delta^p|^2) ds
    double residual = 0.0;        // U - x - drift_integral - noise_integral
    double gronwall_margin = 0.0; // min over the grid of (envelope - |V|)
};

struct Solution {
    std::vector<double> grid;          // output times
    std::vector<SampleResult> samples;
    Eigen::MatrixXd V_paths;           // record x grid
    Eigen::MatrixXd zeta_paths;
    double lifetime_T = 0.0;
    bool beyond_T = false;
    double zeta_crosscheck = 0.0;      // max |zeta_t - (z'^T M z' - tr M)|
    double mean_steps = 0.0;           // accepted steps per path
    int gronwall_violations = 0;
};

/// Life time (4 sup|delta^p|^2)^{-1} for the truncated basis.
double lifetime(const basis::SpectralBasis& basis, double p);

Solution solve_paths(const gram::GramCache& cache, const Problem& problem,
                     const mc::PathEnsemble& ensemble, const SolverConfig& config = {});

struct STransform {
    double value = 0.0;
    double std_error = 0.0;
    double cv = 0.0;         // coefficient of variation of V e^zeta
    bool variance_flag = false;
};

inline constexpr double kVarianceFlagCV = 50.0;

STransform s_transform_solution(const gram::GramCache& cache, const Problem& problem,
                                const mc::PathEnsemble& ensemble, const SolverConfig& config = {});

struct IdentityReport {
    // expectation level, RK4 over the full ensemble
    double s_transform = 0.0;
    double drift_term = 0.0;
    double noise_term = 0.0;
    double residual = 0.0;
    double sigma = 0.0;          // combined standard error of the three estimates
    double sigma_paired = 0.0;   // standard error of the per-sample residual
    bool expectation_pass = false;
    // pathwise, RK45 over a subset
    int pathwise_samples = 0;
    double pathwise_max = 0.0;
    bool pathwise_pass = false;
    int gronwall_violations = 0;
};

IdentityReport verify_integral_identity(const gram::GramCache& cache, const Problem& problem,
                                        const mc::PathEnsemble& ensemble, int pathwise_samples,
                                        const SolverConfig& rk4 = {}, const SolverConfig& rk45 = {Method::RK45});

struct Agreement {
    int samples = 0;
    double max_diff = 0.0;   // max over samples and output grid of |V_rk4 - V_rk45|
    double t_end = 0.0;
    bool pass = false;
};

/// RK4 against RK45 on [0, problem.t] at a shared output grid.
Agreement integrator_agreement(const gram::GramCache& cache, const Problem& problem,
                               const mc::PathEnsemble& ensemble, double tolerance = 1e-6,
                               double rk4_step = 1e-3);

struct ConvergenceStudy {
    std::vector<double> steps;
    std::vector<double> residuals;  // max pathwise |residual| per step size
    std::vector<double> orders;     // log2 of successive ratios
};

ConvergenceStudy rk4_convergence(const gram::GramCache& cache, const Problem& problem,
                                 const mc::PathEnsemble& ensemble, std::vector<double> steps);

struct AdaptednessReport {
    double difference = 0.0;  // S(Y_t)(f+g) - S(Y_t)(f), paired
    double sigma = 0.0;
    double leakage = 0.0;     // bound on the effect of g's truncated tail on [0, t]
    double g_mass_on_window = 0.0;  // int_0^t g_K(s)^2 ds
    bool pass = false;        // |difference| <= 3 sigma + leakage
    bool exceeds_3sigma = false;
};

AdaptednessReport adaptedness_check(const gram::GramCache& cache, const Problem& problem,
                                    const TestFunction& g, const mc::PathEnsemble& ensemble,
                                    const SolverConfig& config = {});

struct LifetimeReport {
    double p = 0.0;
    double sup = 0.0;            // truncated sup |delta^p|^2
    double sup_with_tail = 0.0;
    double T = 0.0;              // (4 sup)^{-1}
    double T_untruncated = 0.0;  // (4 (sup + tail))^{-1}
    double t_star = 0.0;         // inf{t : lambda_max(M_p(t)) >= 1/4}, +inf when never reached
    double lambda_max_limit = 0.0;  // lambda_max(M_p(infinity)) = (3/2)^{-2p}
    bool pass = false;           // T <= t*
};

LifetimeReport lifetime_threshold(const gram::GramCache& cache, double p);

/// E[exp(2 zeta_t)] in the truncated model; empty when lambda_max(M_p(t)) >= 1/4.
std::optional<double> second_moment_closed_form(const gram::GramCache& cache, double p, double t);

struct MomentStudy {
    double t = 0.0;
    std::optional<double> closed_form;
    double lambda_max = 0.0;
    double tail_index = 0.0;      // 1 / (4 lambda_max): P(e^{2 zeta} > x) ~ x^{-tail_index}
    double hill_index = 0.0;      // Hill estimate from the top sqrt(N) samples
    double hill_error = 0.0;
    std::vector<int> sizes;       // nested sample sizes
    std::vector<double> means;    // MC estimates at those sizes
    std::vector<double> errors;   // their standard errors
    bool finite_mean = false;     // judged from the Hill estimate: hill_index - 2 hill_error > 1
    bool infinite_mean = false;   // hill_index + 2 hill_error < 1
};

MomentStudy moment_study(const gram::GramCache& cache, double p, double t,
                         const mc::PathEnsemble& ensemble);

/// S(Y_t)(c f) for b(y) = beta y in closed form, complex scale c allowed:
///   x e^{beta t - tr M + a^T M a} det(I-2M)^{-1/2} exp(b^T (I-2M)^{-1} b / 2),
/// a = c Lambda^p f, and b = 2 M a the linear coefficient of the translated
/// quadratic form.  Throws BeyondLifetime when I - 2M is not positive definite.
std::complex<double> closed_form_linear(const gram::GramCache& cache, double x0, double p, double t,
                                        const TestFunction& f, std::complex<double> scale = 1.0,
                                        double beta = 1.0);

struct PositivityReport {
    Eigen::MatrixXd F;
    double min_eigenvalue = 0.0;
    double norm = 0.0;
    double max_imag = 0.0;  // largest |Im F_jl|, should vanish
    bool pass = false;      // min eig >= -1e-8 ||F||
};

/// F_jl = (S Y_t)(i(f_j - f_l)) exp(-|f_j - f_l|_0^2 / 2) for the linear example.
PositivityReport positivity_certificate(const gram::GramCache& cache, double x0, double p, double t,
                                        const std::vector<TestFunction>& family, double beta = 1.0);

}  // namespace wickforge::sde

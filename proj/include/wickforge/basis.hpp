#pragma once

// Laguerre eigenbasis of A = -d/dt t d/dt + t/4 + 1 on L^2(R_+).
//
// The eigenfunctions are the Laguerre functions xi_k(t) = exp(-t/2) L_k(t)
// with eigenvalues lambda_k = k + 3/2.  Everything downstream (smoothed
// deltas, the kernel K_p, Gram matrices, life times) is expressed in this
// basis truncated to its first K elements.

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace wickforge::basis {

/// xi_k(t), evaluated by running the three-term recurrence on the damped
/// sequence directly.  Throws std::domain_error for t < 0 or non-finite t.
double laguerre_eval(int k, double t);

/// Fills out[k] = xi_k(t) for k < out.size().
void laguerre_all(double t, std::span<double> out);

/// Estimate and rigorous bracket of the spectral tail sum_{k>=K} (k+3/2)^{-2p}.
struct SeriesTail {
    double estimate = 0.0;  // Euler-Maclaurin value
    double error = 0.0;     // magnitude of the first omitted correction
    double lower = 0.0;     // integral comparison, always <= true tail
    double upper = 0.0;     // integral comparison, always >= true tail
    bool divergent = false; // 2p <= 1
};

SeriesTail spectral_tail(int K, double p);

class SpectralBasis {
public:
    explicit SpectralBasis(int K);

    int size() const { return K_; }
    double eigenvalue(int k) const { return k + 1.5; }
    double log_eigenvalue(int k) const { return log_lambda_[static_cast<std::size_t>(k)]; }

    /// lambda_k^s, computed as exp(s log lambda_k) so large |s| does not overflow early.
    double power(int k, double s) const;
    Eigen::VectorXd powers(double s) const;

    /// sum_{k<K} lambda_k^{-2p}
    double spectral_sum(double p) const;

    void evaluate(double t, std::span<double> out) const;
    Eigen::VectorXd evaluate(double t) const;

private:
    int K_;
    std::vector<double> log_lambda_;
};

/// delta_t^p = A^{-p} delta_t in coordinates: (lambda_k^{-p} xi_k(t))_k.
struct DeltaVector {
    double t = 0.0;
    double p = 0.0;
    Eigen::VectorXd coords;

    double norm_sq() const { return coords.squaredNorm(); }
};

DeltaVector delta(const SpectralBasis& basis, double t, double p);

struct DeltaNorm {
    double value = 0.0;      // truncated sum over k < K
    SeriesTail tail;         // sum_{k>=K} lambda_k^{-2p}; bounds the missing part since |xi_k| <= 1
    bool divergent = false;  // p <= 1/2: no uniform convergence, value depends on K
    bool slow_tail = false;  // tail upper bound exceeds 1% of the value

    /// Upper bound on the untruncated series.
    double upper() const { return value + tail.upper; }
};

DeltaNorm delta_norm_sq(const SpectralBasis& basis, double t, double p);

/// K_p(r,s) = <delta_r^p, delta_s^p>, truncated.
double kernel_Kp(const SpectralBasis& basis, double r, double s, double p);

struct SupDeltaNorm {
    double value = 0.0;   // truncated supremum
    double argmax = 0.0;
    SeriesTail tail;      // add to value for the untruncated sup (attained at t = 0)
    bool divergent = false;
    bool slow_tail = false;

    double with_tail() const { return value + tail.estimate; }
};

struct SupSearch {
    double t_max = 50.0;
    int points = 5001;
};

/// sup_r |delta_r^p|^2 by grid search on [0, t_max] (t = 0 always included).
SupDeltaNorm sup_delta_norm(const SpectralBasis& basis, double p, SupSearch search = {});

/// (4 sup)^{-1}; the life-time bound for the quadratic-noise equation.
inline double lifetime_bound(double sup_value) { return 1.0 / (4.0 * sup_value); }

}  // namespace wickforge::basis

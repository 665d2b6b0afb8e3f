#pragma once

// The renormalized map phi~_p(X) = Gamma(A^p) phi(Gamma(A^{-p}) X).

#include "wickforge/chaos.hpp"
#include "wickforge/ensemble.hpp"
#include "wickforge/functions.hpp"

#include <optional>
#include <string>

namespace wickforge::chaos {

struct Projection {
    int degree = 10;             // D_proj, highest chaos kept in phi(Gamma(A^{-p}) X)
    int order = 0;               // Gauss-Hermite order, 0 -> 4 * degree; must be >= 2 * degree
    const mc::PathEnsemble* ensemble = nullptr;  // needed when X has degree >= 2
    std::optional<double> growth_bound;          // declared |phi(x)| <= C(1+|x|^deg) for unbounded phi
};

struct PhiTildeResult {
    ChaosExpansion value;
    ChaosExpansion std_error;  // per-coefficient standard errors (zero on the exact path)
    std::string method;        // "gauss-hermite" or "monte-carlo"
    int order = 0;
};

/// Exact path for X = c + I_1(h): Gamma(A^{-p}) X = c + sigma G with G standard
/// normal along u = A^{-p}h / sigma, so phi(c + sigma G) = sum_n beta_n He_n(G) and
/// He_n(G) = I_1(u)^{<>n}.  Other X go through Monte Carlo projection onto the
/// Hermite basis over the coordinates X uses.
PhiTildeResult phi_tilde(const ScalarFunction& phi, const ChaosExpansion& X, double p,
                         const Projection& proj = {});

}  // namespace wickforge::chaos

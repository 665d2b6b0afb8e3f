#pragma once

// Truncated Wiener-chaos algebra.
//
// An element is X = sum_alpha c_alpha H_alpha with
//   H_alpha = prod_k He_{alpha_k}(Z_k),
// He the probabilists' Hermite polynomials and Z_k = I_1(xi_k) i.i.d. N(0,1).
// With unnormalized H_alpha, E[H_alpha H_beta] = delta_{alpha beta} alpha!, the
// Wick product is index addition and the S-transform at f is the monomial
// sum_alpha c_alpha prod_k f_k^{alpha_k}.

#include "wickforge/basis.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <compare>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wickforge::chaos {

inline constexpr int kDefaultMaxDegree = 12;
inline constexpr double kPruneThreshold = 1e-15;

class MultiIndex {
public:
    using Entry = std::pair<int, int>;  // (coordinate, degree >= 1)

    MultiIndex() = default;
    /// Entries may come in any order; zero degrees are dropped, duplicates summed.
    explicit MultiIndex(std::vector<Entry> entries);

    static MultiIndex unit(int k, int degree = 1);

    std::span<const Entry> entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    int degree(int k) const;
    int total_degree() const;
    double factorial() const;  // alpha! = prod alpha_k!
    int max_coordinate() const { return entries_.empty() ? -1 : entries_.back().first; }

    MultiIndex operator+(const MultiIndex& other) const;

    /// Lexicographic order of the dense exponent vectors.
    std::strong_ordering operator<=>(const MultiIndex& other) const;
    bool operator==(const MultiIndex& other) const = default;

    std::string to_string() const;

private:
    std::vector<Entry> entries_;  // sorted by coordinate
};

class DegreeCapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChaosExpansion {
public:
    using TermMap = std::map<MultiIndex, double>;

    explicit ChaosExpansion(int K, int max_degree = kDefaultMaxDegree);

    static ChaosExpansion constant(int K, double c, int max_degree = kDefaultMaxDegree);
    /// c * Z_k
    static ChaosExpansion coordinate(int K, int k, double c = 1.0, int max_degree = kDefaultMaxDegree);
    static ChaosExpansion hermite(int K, const MultiIndex& alpha, double c = 1.0,
                                  int max_degree = kDefaultMaxDegree);
    /// I_1(h) = sum_k h_k Z_k
    static ChaosExpansion first_chaos(std::span<const double> h, int max_degree = kDefaultMaxDegree);
    /// :z^T B z: = sum_j B_jj H_{2e_j} + 2 sum_{j<k} B_jk H_{e_j+e_k}, B symmetric.
    static ChaosExpansion second_chaos(const Eigen::MatrixXd& B, int max_degree = kDefaultMaxDegree);

    int dimension() const { return K_; }
    int max_degree() const { return max_degree_; }
    /// Largest |alpha| with a stored term (0 for the zero element).
    int degree() const;
    std::size_t size() const { return terms_.size(); }
    const TermMap& terms() const { return terms_; }

    double coefficient(const MultiIndex& alpha) const;
    void add(const MultiIndex& alpha, double c);
    void set(const MultiIndex& alpha, double c);

    ChaosExpansion& prune(double threshold = kPruneThreshold);

    ChaosExpansion& operator+=(const ChaosExpansion& other);
    ChaosExpansion& operator-=(const ChaosExpansion& other);
    ChaosExpansion& operator*=(double s);

    friend ChaosExpansion operator+(ChaosExpansion a, const ChaosExpansion& b) { return a += b; }
    friend ChaosExpansion operator-(ChaosExpansion a, const ChaosExpansion& b) { return a -= b; }
    friend ChaosExpansion operator*(ChaosExpansion a, double s) { return a *= s; }
    friend ChaosExpansion operator*(double s, ChaosExpansion a) { return a *= s; }

private:
    void check_index(const MultiIndex& alpha) const;
    void check_compatible(const ChaosExpansion& other) const;

    int K_;
    int max_degree_;
    TermMap terms_;
};

/// Gamma(A^p): c_alpha -> c_alpha prod_k lambda_k^{p alpha_k}.  Not pruned, so
/// gamma(gamma(X, p), -p) recovers X up to rounding.
ChaosExpansion gamma(const ChaosExpansion& X, double p);

ChaosExpansion wick(const ChaosExpansion& X, const ChaosExpansion& Y);

/// Ordinary product, via He_m He_n = sum_r C(m,r) C(n,r) r! He_{m+n-2r} per coordinate.
ChaosExpansion multiply(const ChaosExpansion& X, const ChaosExpansion& Y);

/// X *_p Y = Gamma(A^p)(Gamma(A^{-p})X . Gamma(A^{-p})Y).  Only the result is
/// pruned: intermediate smoothed coefficients can be far below the pruning
/// threshold and still be of order one after Gamma(A^p).
ChaosExpansion star_p(const ChaosExpansion& X, const ChaosExpansion& Y, double p);

/// The product is defined for p > q when X, Y live in (S_{-q}); p <= q is outside that range.
inline bool star_p_within_hypothesis(double p, double q) { return p > q; }

/// Wick power X^{<>n} by repeated wick().
ChaosExpansion wick_power(const ChaosExpansion& X, int n);

double s_transform(const ChaosExpansion& X, std::span<const double> f);
double expectation(const ChaosExpansion& X);
/// X evaluated at Z = z, i.e. sum_alpha c_alpha prod_k He_{alpha_k}(z_k).
double evaluate(const ChaosExpansion& X, std::span<const double> z);
/// He_n(x) by the three-term recurrence.
double hermite_he(int n, double x);
/// ||X||_q = (sum_alpha alpha! prod lambda_k^{2 q alpha_k} c_alpha^2)^{1/2}
double norm(const ChaosExpansion& X, double q);

/// max_alpha |c_alpha(X) - c_alpha(Y)|
double max_abs_difference(const ChaosExpansion& X, const ChaosExpansion& Y);

nlohmann::json to_json(const ChaosExpansion& X);
ChaosExpansion chaos_from_json(const nlohmann::json& j);

}  // namespace wickforge::chaos

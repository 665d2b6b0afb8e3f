#pragma once

// Time integrals G_jk(t) = int_0^t xi_j(s) xi_k(s) ds on a uniform time grid.
//
// The table is filled interval by interval with composite Gauss-Legendre
// panels; each interval is refined by panel doubling until two successive
// resolutions agree to the configured tolerance.  Entries are prefix sums
// of the interval contributions, so rebuilding with the same settings
// reproduces every entry bit for bit.

#include "wickforge/basis.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wickforge::gram {

struct TimeGrid {
    double t_end = 1.0;
    int intervals = 100;

    int size() const { return intervals + 1; }
    double step() const { return t_end / intervals; }
    double node(int m) const { return m == intervals ? t_end : m * step(); }
    std::string spec() const;

    /// "<t_end>:<intervals>" or "uniform:<t_end>:<intervals>"
    static TimeGrid parse(std::string_view spec);
};

struct GramSettings {
    int order = 16;
    double tolerance = 1e-12;
    int max_doublings = 12;
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Panel width used for a K-term basis: min(0.5, 4/(2K-1)), i.e. the
/// oscillation-resolving width for the highest product xi_{K-1}^2.
double panel_width(int K);

struct IntervalIntegral {
    Eigen::MatrixXd value;  // symmetric K x K
    double error = 0.0;     // max |finest - previous| over entries
    int panels = 0;
};

/// int_a^b xi_j xi_k ds for all j, k < K.  Throws QuadratureError when the
/// refinement does not reach the tolerance.
IntervalIntegral integrate_products(const basis::SpectralBasis& basis, double a, double b,
                                    const GramSettings& settings = {});

struct CacheStats {
    int hits = 0;
    int misses = 0;
    std::string last_path;
};

class GramCache {
public:
    GramCache(const basis::SpectralBasis& basis, TimeGrid grid, GramSettings settings = {});

    int dimension() const { return K_; }
    const TimeGrid& grid() const { return grid_; }
    const GramSettings& settings() const { return settings_; }
    const basis::SpectralBasis& basis() const { return basis_; }

    double at(int j, int k, int m) const;
    Eigen::MatrixXd matrix(int m) const;

    /// G(t) for any t >= 0: the last grid node at or below t plus the remainder.
    Eigen::MatrixXd matrix_at(double t) const;
    double gram(int j, int k, double t) const;

    /// Accumulated refinement error over all intervals.
    double error_bound() const { return error_bound_; }
    int panels() const { return panels_; }

    /// Little-endian "WFG1" binary plus a JSON sidecar (<path>.json).
    void save(const std::filesystem::path& path) const;
    static GramCache load(const std::filesystem::path& path, const basis::SpectralBasis& basis);

    /// git-style blob SHA-1 of the binary serialization.
    std::string content_hash() const;

    /// Loads <dir>/gram_K<K>_<grid>_o<order>.wfg when present, otherwise builds and saves it.
    static GramCache load_or_build(const std::filesystem::path& dir,
                                   const basis::SpectralBasis& basis, TimeGrid grid,
                                   GramSettings settings = {}, CacheStats* stats = nullptr);

private:
    GramCache(const basis::SpectralBasis& basis, TimeGrid grid, GramSettings settings,
              std::vector<double> table, double error_bound, int panels);

    std::size_t packed(int j, int k) const;
    std::vector<std::uint8_t> serialize() const;

    const basis::SpectralBasis& basis_;
    int K_;
    TimeGrid grid_;
    GramSettings settings_;
    std::vector<double> table_;  // (M+1) blocks of K(K+1)/2 upper-triangular entries
    double error_bound_ = 0.0;
    int panels_ = 0;
};

}  // namespace wickforge::gram

#pragma once

// Monte Carlo plumbing: the sample ensemble z_i ~ N(0, I_K), estimates with
// standard errors, and a deterministic chunked parallel loop.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace wickforge::mc {

/// splitmix64 finalizer; derives the seed of sample i from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

class PathEnsemble {
public:
    PathEnsemble(int samples, int K, std::uint64_t master_seed);

    int samples() const { return static_cast<int>(z_.cols()); }
    int dimension() const { return static_cast<int>(z_.rows()); }
    std::uint64_t master_seed() const { return seed_; }

    /// K x N, one column per sample.
    const Eigen::MatrixXd& matrix() const { return z_; }
    Eigen::VectorXd sample(int i) const { return z_.col(i); }

    /// Regenerates sample i from (master seed, i) alone.
    static Eigen::VectorXd generate(std::uint64_t master_seed, int index, int K);

    /// First n samples as a new ensemble (same per-sample seeds).
    PathEnsemble head(int n) const;

private:
    PathEnsemble(Eigen::MatrixXd z, std::uint64_t seed) : z_(std::move(z)), seed_(seed) {}

    Eigen::MatrixXd z_;
    std::uint64_t seed_;
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    int samples = 0;
};

/// Sample mean and standard error, summed in index order.
Estimate estimate(std::span<const double> values);

/// Worker threads used by parallel_for (default: hardware concurrency).
void set_threads(int n);
int threads();

/// Calls body(begin, end) over fixed chunks of [0, n).  Chunk boundaries do
/// not depend on the thread count; bodies must write only to their own slots.
void parallel_for(int n, const std::function<void(int, int)>& body, int chunk = 1024);

}  // namespace wickforge::mc

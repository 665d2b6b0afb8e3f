#include "wickforge/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace wickforge::mc {

namespace {

std::atomic<int> g_threads{0};

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Eigen::VectorXd PathEnsemble::generate(std::uint64_t master_seed, int index, int K) {
    std::mt19937_64 rng(derive_seed(master_seed, static_cast<std::uint64_t>(index)));
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(K);
    for (int k = 0; k < K; ++k) z[k] = normal(rng);
    return z;
}

PathEnsemble::PathEnsemble(int samples, int K, std::uint64_t master_seed) : seed_(master_seed) {
    if (samples < 1 || K < 1) throw std::invalid_argument("ensemble needs N >= 1 and K >= 1");
    z_.resize(K, samples);
    parallel_for(samples, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) z_.col(i) = generate(master_seed, i, K);
    });
}

PathEnsemble PathEnsemble::head(int n) const {
    if (n < 1 || n > samples()) throw std::out_of_range("ensemble head size out of range");
    return PathEnsemble(z_.leftCols(n), seed_);
}

Estimate estimate(std::span<const double> values) {
    Estimate e;
    e.samples = static_cast<int>(values.size());
    if (values.empty()) return e;
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / values.size();
    if (values.size() < 2) return e;
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / (values.size() - 1) / values.size());
    return e;
}

void set_threads(int n) { g_threads = std::max(0, n); }

int threads() {
    const int n = g_threads.load();
    if (n > 0) return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, const std::function<void(int, int)>& body, int chunk) {
    if (n <= 0) return;
    chunk = std::max(1, chunk);
    const int chunks = (n + chunk - 1) / chunk;
    const int workers = std::min(threads(), chunks);
    if (workers <= 1) {
        for (int c = 0; c < chunks; ++c) body(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (int c = next++; c < chunks; c = next++) {
            try {
                body(c * chunk, std::min(n, (c + 1) * chunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace wickforge::mc

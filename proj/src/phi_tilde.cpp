#include "wickforge/phi_tilde.hpp"

#include "wickforge/quadrature.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace wickforge::chaos {

namespace {

constexpr std::size_t kMaxProjectionTerms = 200000;

// all multi-indices over `coords` with 1 <= |alpha| <= degree
void enumerate(const std::vector<int>& coords, std::size_t pos, int left,
               std::vector<MultiIndex::Entry>& current, std::vector<MultiIndex>& out) {
    if (pos == coords.size()) {
        if (!current.empty()) out.emplace_back(current);
        if (out.size() > kMaxProjectionTerms) {
            throw std::runtime_error("Monte Carlo projection needs too many Hermite terms; lower the degree");
        }
        return;
    }
    enumerate(coords, pos + 1, left, current, out);
    for (int d = 1; d <= left; ++d) {
        current.emplace_back(coords[pos], d);
        enumerate(coords, pos + 1, left - d, current, out);
        current.pop_back();
    }
}

PhiTildeResult exact_path(const ScalarFunction& phi, const ChaosExpansion& X, double p,
                          const Projection& proj, int order) {
    const int K = X.dimension();
    const int cap = std::max(X.max_degree(), proj.degree);
    const double c = expectation(X);
    ChaosExpansion smooth_h = gamma(X, -p);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(K);
    for (const auto& [alpha, coef] : smooth_h.terms()) {
        if (!alpha.empty()) a[alpha.entries()[0].first] = coef;
    }
    const double sigma = a.norm();
    PhiTildeResult out{ChaosExpansion(K, cap), ChaosExpansion(K, cap), "gauss-hermite", order};
    if (sigma == 0.0) {
        out.value.add(MultiIndex{}, phi(c));
        return out;
    }
    const auto& rule = quadrature::gauss_hermite(order);
    std::vector<double> beta(static_cast<std::size_t>(proj.degree) + 1, 0.0);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double g = rule.nodes[i];
        const double v = rule.weights[i] * phi(c + sigma * g);
        double prev = 1.0;
        double cur = g;
        beta[0] += v;
        for (int n = 1; n <= proj.degree; ++n) {
            beta[static_cast<std::size_t>(n)] += v * cur;
            const double next = g * cur - n * prev;
            prev = cur;
            cur = next;
        }
    }
    // sum_n beta_n / n! I_1(u)^{<>n} in the smoothed coordinates, then Gamma(A^p)
    const Eigen::VectorXd u = a / sigma;
    const ChaosExpansion unit = ChaosExpansion::first_chaos(std::span<const double>(u.data(), static_cast<std::size_t>(K)), cap);
    ChaosExpansion power = ChaosExpansion::constant(K, 1.0, cap);
    ChaosExpansion smoothed(K, cap);
    double factorial = 1.0;
    for (int n = 0; n <= proj.degree; ++n) {
        if (n > 0) {
            power = wick(power, unit);
            factorial *= n;
        }
        ChaosExpansion term = power;
        term *= beta[static_cast<std::size_t>(n)] / factorial;
        for (const auto& [alpha, coef] : term.terms()) smoothed.add(alpha, coef);
    }
    out.value = gamma(smoothed, p).prune();
    return out;
}

PhiTildeResult mc_path(const ScalarFunction& phi, const ChaosExpansion& X, double p,
                       const Projection& proj) {
    if (!proj.ensemble) throw std::invalid_argument("phi~ of a degree >= 2 element needs a sample ensemble");
    if (!phi.bounded() && !proj.growth_bound) {
        throw std::invalid_argument("unbounded phi on the Monte Carlo path needs a declared growth bound");
    }
    const auto& ens = *proj.ensemble;
    if (ens.dimension() < X.dimension()) throw std::invalid_argument("ensemble dimension below K");
    const int K = X.dimension();
    const int cap = std::max(X.max_degree(), proj.degree);
    const ChaosExpansion smooth = gamma(X, -p);

    std::set<int> active;
    for (const auto& term : smooth.terms())
        for (const auto& e : term.first.entries()) active.insert(e.first);
    std::vector<MultiIndex> indices{MultiIndex{}};
    std::vector<MultiIndex::Entry> current;
    enumerate(std::vector<int>(active.begin(), active.end()), 0, proj.degree, current, indices);

    const int N = ens.samples();
    const std::size_t M = indices.size();
    Eigen::MatrixXd products(static_cast<Eigen::Index>(M), N);
    mc::parallel_for(N, [&](int begin, int end) {
        std::vector<double> he(static_cast<std::size_t>(proj.degree) + 1);
        for (int i = begin; i < end; ++i) {
            const Eigen::VectorXd z = ens.matrix().col(i);
            const std::span<const double> zs(z.data(), static_cast<std::size_t>(z.size()));
            const double v = phi(evaluate(smooth, zs));
            for (std::size_t m = 0; m < M; ++m) {
                double h = v;
                for (const auto& [k, d] : indices[m].entries()) h *= hermite_he(d, zs[static_cast<std::size_t>(k)]);
                products(static_cast<Eigen::Index>(m), i) = h;
            }
        }
    }, 256);

    PhiTildeResult out{ChaosExpansion(K, cap), ChaosExpansion(K, cap), "monte-carlo", 0};
    ChaosExpansion mean(K, cap);
    ChaosExpansion err(K, cap);
    std::vector<double> row(static_cast<std::size_t>(N));
    for (std::size_t m = 0; m < M; ++m) {
        for (int i = 0; i < N; ++i) row[static_cast<std::size_t>(i)] = products(static_cast<Eigen::Index>(m), i);
        const auto e = mc::estimate(row);
        const double f = indices[m].factorial();
        mean.add(indices[m], e.mean / f);
        err.add(indices[m], e.std_error / f);
    }
    out.value = gamma(mean, p).prune();
    out.std_error = gamma(err, p);
    return out;
}

}  // namespace

PhiTildeResult phi_tilde(const ScalarFunction& phi, const ChaosExpansion& X, double p,
                         const Projection& proj) {
    if (proj.degree < 0) throw std::invalid_argument("projection degree must be non-negative");
    const int order = proj.order > 0 ? proj.order : 4 * std::max(1, proj.degree);
    if (X.degree() <= 1) {
        if (order < 2 * proj.degree) {
            throw std::invalid_argument("Gauss-Hermite order " + std::to_string(order) +
                                        " is below twice the projection degree " +
                                        std::to_string(proj.degree));
        }
        return exact_path(phi, X, p, proj, order);
    }
    return mc_path(phi, X, p, proj);
}

}  // namespace wickforge::chaos

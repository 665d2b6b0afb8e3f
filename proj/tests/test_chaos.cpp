#include "doctest.h"

#include "wickforge/chaos.hpp"
#include "wickforge/ensemble.hpp"
#include "wickforge/functions.hpp"
#include "wickforge/phi_tilde.hpp"
#include "wickforge/quadrature.hpp"
#include "wickforge/test_function.hpp"

#include <boost/math/special_functions/factorials.hpp>

#include <cmath>
#include <random>

using namespace wickforge;
using chaos::ChaosExpansion;
using chaos::MultiIndex;

namespace {

ChaosExpansion random_element(std::mt19937_64& rng, int K, int degree, int terms, int cap = 12) {
    std::uniform_int_distribution<int> coord(0, K - 1);
    std::uniform_int_distribution<int> deg(0, degree);
    std::normal_distribution<double> normal;
    ChaosExpansion X(K, cap);
    for (int i = 0; i < terms; ++i) {
        std::vector<MultiIndex::Entry> e;
        const int d = deg(rng);
        for (int j = 0; j < d; ++j) e.emplace_back(coord(rng), 1);
        X.add(MultiIndex(e), normal(rng));
    }
    return X;
}

// E[F(Z_0, Z_1)] by a tensor Gauss-Hermite rule
template <class F>
double gauss2(F&& f, int n = 40) {
    const auto& r = quadrature::gauss_hermite(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < r.size(); ++j) acc += r.weights[i] * r.weights[j] * f(r.nodes[i], r.nodes[j]);
    return acc;
}

}  // namespace

TEST_CASE("Gauss-Hermite rule reproduces normal moments") {
    for (int order : {30, 200, 400}) {
        const auto& r = quadrature::gauss_hermite(order);
        for (int n = 0; n <= 20; n += 2) {
            double m = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) m += r.weights[i] * std::pow(r.nodes[i], n);
            CHECK(m == doctest::Approx(boost::math::double_factorial<double>(static_cast<unsigned>(std::max(n - 1, 0)))).epsilon(1e-12));
        }
    }
}

TEST_CASE("multi-index basics") {
    const MultiIndex a({{2, 1}, {0, 3}, {2, 1}, {5, 0}});
    CHECK(a.degree(0) == 3);
    CHECK(a.degree(2) == 2);
    CHECK(a.degree(5) == 0);
    CHECK(a.total_degree() == 5);
    CHECK(a.factorial() == 12.0);
    CHECK(a.max_coordinate() == 2);
    CHECK((a + MultiIndex::unit(1)).total_degree() == 6);
    CHECK(MultiIndex::unit(0) > MultiIndex::unit(1));  // dense lexicographic order
}

TEST_CASE("Hermite polynomials") {
    CHECK(chaos::hermite_he(0, 0.3) == 1.0);
    CHECK(chaos::hermite_he(3, 0.7) == doctest::Approx(0.343 - 2.1));
    CHECK(chaos::hermite_he(4, 1.1) == doctest::Approx(std::pow(1.1, 4) - 6 * 1.21 + 3));
}

TEST_CASE("ordinary product evaluates pointwise") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        const auto X = random_element(rng, 4, 4, 5);
        const auto Y = random_element(rng, 4, 4, 5);
        const auto P = chaos::multiply(X, Y);
        std::vector<double> z(4);
        for (auto& v : z) v = normal(rng);
        const double expect = chaos::evaluate(X, z) * chaos::evaluate(Y, z);
        CHECK(chaos::evaluate(P, z) == doctest::Approx(expect).epsilon(1e-11).scale(1.0));
    }
}

TEST_CASE("expectations and norms against Gauss-Hermite quadrature") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto X = random_element(rng, 2, 4, 4);
        const auto Y = random_element(rng, 2, 4, 4);
        auto eval = [](const ChaosExpansion& A, double a, double b) {
            const std::vector<double> z{a, b};
            return chaos::evaluate(A, z);
        };
        CHECK(chaos::expectation(X) == doctest::Approx(gauss2([&](double a, double b) { return eval(X, a, b); })).scale(1.0));
        const double exy = gauss2([&](double a, double b) { return eval(X, a, b) * eval(Y, a, b); });
        CHECK(chaos::expectation(chaos::multiply(X, Y)) == doctest::Approx(exy).epsilon(1e-11).scale(1.0));
        const double ex2 = gauss2([&](double a, double b) { return std::pow(eval(X, a, b), 2); });
        CHECK(chaos::norm(X, 0.0) == doctest::Approx(std::sqrt(ex2)).epsilon(1e-11));
    }
}

TEST_CASE("S-transform turns Wick products into products and Gamma into scaling") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    const basis::SpectralBasis b(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto X = random_element(rng, 5, 3, 4);
        const auto Y = random_element(rng, 5, 3, 4);
        std::vector<double> f(5);
        for (auto& v : f) v = 0.5 * normal(rng);
        CHECK(chaos::s_transform(chaos::wick(X, Y), f) ==
              doctest::Approx(chaos::s_transform(X, f) * chaos::s_transform(Y, f)).epsilon(1e-12).scale(1.0));
        const double p = 0.7;
        std::vector<double> fp(5);
        for (int k = 0; k < 5; ++k) fp[static_cast<std::size_t>(k)] = b.power(k, p) * f[static_cast<std::size_t>(k)];
        CHECK(chaos::s_transform(chaos::gamma(X, p), f) == doctest::Approx(chaos::s_transform(X, fp)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("Gamma inverts and star_p interpolates between the products") {
    std::mt19937_64 rng(4);
    const auto X = random_element(rng, 3, 3, 5);
    const auto Y = random_element(rng, 3, 3, 5);
    CHECK(chaos::max_abs_difference(chaos::gamma(chaos::gamma(X, 2.5), -2.5), X) < 1e-12);
    CHECK(chaos::max_abs_difference(chaos::star_p(X, Y, 0.0), chaos::multiply(X, Y)) < 1e-12);
    // first-chaos elements: X *_p Y = X <> Y + <A^{-p} x, A^{-p} y>
    const std::vector<double> h{0.4, -0.2, 0.9}, g{1.0, 0.3, 0.0};
    const auto I = ChaosExpansion::first_chaos(h), J = ChaosExpansion::first_chaos(g);
    const basis::SpectralBasis b(3);
    double inner = 0.0;
    for (int k = 0; k < 3; ++k) inner += h[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)] * b.power(k, -4.0);
    const auto S = chaos::star_p(I, J, 2.0);
    CHECK(chaos::expectation(S) == doctest::Approx(inner).epsilon(1e-13));
    CHECK(chaos::max_abs_difference(S - ChaosExpansion::constant(3, inner), chaos::wick(I, J)) < 1e-14);
    CHECK(chaos::star_p_within_hypothesis(1.0, 0.5));
    CHECK_FALSE(chaos::star_p_within_hypothesis(0.5, 0.5));
}

TEST_CASE("first and second chaos constructors") {
    Eigen::MatrixXd B(2, 2);
    B << 1.0, 0.5, 0.5, 2.0;
    const auto Q = ChaosExpansion::second_chaos(B);
    CHECK(Q.coefficient(MultiIndex::unit(0, 2)) == 1.0);
    CHECK(Q.coefficient(MultiIndex({{0, 1}, {1, 1}})) == 1.0);
    // :z^T B z: = z^T B z - tr B
    const std::vector<double> z{0.3, -1.2};
    CHECK(chaos::evaluate(Q, z) == doctest::Approx(0.09 + 2 * 0.5 * 0.3 * -1.2 + 2.0 * 1.44 - 3.0));
    const auto W = chaos::wick_power(ChaosExpansion::coordinate(2, 1), 4);
    CHECK(W.coefficient(MultiIndex::unit(1, 4)) == 1.0);
}

TEST_CASE("degree cap and pruning") {
    const auto X = ChaosExpansion::hermite(2, MultiIndex::unit(0, 3), 1.0, 4);
    const auto Y = ChaosExpansion::hermite(2, MultiIndex::unit(1, 2), 1.0, 4);
    CHECK_THROWS_AS(chaos::wick(X, Y), chaos::DegreeCapError);
    try {
        (void)chaos::multiply(X, Y);
    } catch (const chaos::DegreeCapError& e) {
        CHECK(std::string(e.what()).find("{0:3}") != std::string::npos);
    }
    ChaosExpansion Z(2);
    Z.add({}, 1e-17);
    Z.add(MultiIndex::unit(0), 1.0);
    Z.prune();
    CHECK(Z.size() == 1);
    CHECK_THROWS(ChaosExpansion::coordinate(2, 5));
}

TEST_CASE("JSON round trip is canonical") {
    std::mt19937_64 rng(5);
    const auto X = random_element(rng, 4, 3, 6);
    const auto j = chaos::to_json(X);
    const auto Y = chaos::chaos_from_json(j);
    CHECK(chaos::max_abs_difference(X, Y) == 0.0);
    CHECK(chaos::to_json(Y).dump() == j.dump());
    CHECK_THROWS(chaos::chaos_from_json(nlohmann::json::parse(R"({"K":2,"terms":[{"alpha":{"7":1},"c":1}]})")));
}

TEST_CASE("scalar functions") {
    const auto c = ScalarFunction::parse("cos");
    CHECK(c.derivative(3, 0.4) == doctest::Approx(std::sin(0.4)));
    const auto p = ScalarFunction::parse("poly:1,0,3");
    CHECK(p(2.0) == 13.0);
    CHECK(p.derivative(2, 5.0) == 6.0);
    CHECK(p.sup_second_derivative() == 6.0);
    CHECK_FALSE(p.bounded());
    CHECK(ScalarFunction::parse("tanh").sup_second_derivative() == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))));
    CHECK_THROWS(ScalarFunction::parse("exp"));
}

TEST_CASE("phi~ on the first chaos: square, exact and Monte Carlo paths") {
    const basis::SpectralBasis b(3);
    const std::vector<double> h{0.6, 0.2, -0.4};
    const auto X = ChaosExpansion::first_chaos(h);
    const double p = 1.0;
    double var = 0.0;
    for (int k = 0; k < 3; ++k) var += std::pow(b.power(k, -p) * h[static_cast<std::size_t>(k)], 2);
    // phi(x) = x^2: phi~_p(I_1(h)) = I_1(h)^{<>2} + |A^{-p} h|^2
    const auto r = chaos::phi_tilde(ScalarFunction::parse("square"), X, p);
    CHECK(r.method == "gauss-hermite");
    CHECK(chaos::max_abs_difference(r.value, chaos::wick(X, X) + ChaosExpansion::constant(3, var)) < 1e-12);

    // a degree-2 element on one coordinate: Monte Carlo projection against Gauss-Hermite
    const basis::SpectralBasis b1(1);
    ChaosExpansion Q(1);
    Q.add(MultiIndex::unit(0), 0.8);
    Q.add(MultiIndex::unit(0, 2), 0.3);
    const mc::PathEnsemble ens(40000, 1, 11);
    chaos::Projection proj;
    proj.degree = 3;
    proj.ensemble = &ens;
    const auto cosine = ScalarFunction::parse("cos");
    const auto mcr = chaos::phi_tilde(cosine, Q, p, proj);
    CHECK(mcr.method == "monte-carlo");
    const double l = b1.power(0, -p);
    const auto& rule = quadrature::gauss_hermite(60);
    for (int n = 0; n <= 3; ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double z = rule.nodes[i];
            acc += rule.weights[i] * cosine(0.8 * l * z + 0.3 * l * l * (z * z - 1.0)) * chaos::hermite_he(n, z);
        }
        const double expect = acc * std::pow(l, -n) / boost::math::factorial<double>(static_cast<unsigned>(n));
        const auto alpha = n == 0 ? MultiIndex{} : MultiIndex::unit(0, n);
        CHECK(std::abs(mcr.value.coefficient(alpha) - expect) <= 4.0 * mcr.std_error.coefficient(alpha) + 1e-12);
    }
    proj.ensemble = nullptr;
    CHECK_THROWS(chaos::phi_tilde(cosine, Q, p, proj));
    proj.ensemble = &ens;
    CHECK_THROWS(chaos::phi_tilde(ScalarFunction::parse("square"), Q, p, proj));  // unbounded without a growth bound
}

TEST_CASE("test functions") {
    const auto g = TestFunction::from_bump({1.0, 2.0, 1.0}, 48);
    // Parseval: the L^2 distance to the bump is the truncated mass
    const auto& bump = *g.bump();
    const int n = 800000;
    const double h = 400.0 / n;
    double dist = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = i * h;
        const double e = g(s) - bump(s);
        dist += (i == 0 || i == n ? 0.5 : 1.0) * e * e * h;
    }
    CHECK(dist == doctest::Approx(g.truncation_mass()).epsilon(1e-6));
    CHECK(g.truncation_mass() > 0.0);
    CHECK(g.truncation_mass() >= 0.0);
    CHECK(g.norm_sq() + g.truncation_mass() == doctest::Approx(g.bump()->l2_norm_sq()).epsilon(1e-10));
    const auto f = TestFunction::from_json(nlohmann::json::parse(R"({"coeffs":[1,2]})"), 4);
    CHECK(f.size() == 4);
    CHECK(f.coeffs()[3] == 0.0);
    CHECK(f.scaled(1.0).coeffs()[1] == 5.0);
    CHECK((f + f).coeffs()[1] == 4.0);
}

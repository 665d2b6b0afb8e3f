#include "doctest.h"

#include "wickforge/qwn.hpp"
#include "wickforge/quadrature.hpp"
#include "wickforge/sde.hpp"

#include <cmath>

using namespace wickforge;

namespace {

struct Fixture {
    int K = 16;
    basis::SpectralBasis basis{16};
    gram::GramCache cache{basis, {3.0, 150}};
    double T = sde::lifetime(basis, 1.5);
};

double log_det_I_minus(const Eigen::MatrixXd& M, double c) {
    const int K = static_cast<int>(M.rows());
    return std::log((Eigen::MatrixXd::Identity(K, K) - c * M).determinant());
}

}  // namespace

TEST_CASE("drift parsing and declared constants") {
    CHECK(sde::DriftSpec::parse("zero").C == 0.0);
    CHECK(sde::DriftSpec::parse("id").linear == 1.0);
    const auto t = sde::DriftSpec::parse("tanh:0.5");
    CHECK(t.C == 0.5);
    CHECK(t.b(100.0) == doctest::Approx(0.5));
    CHECK(sde::check_drift(t));
    auto bad = t;
    bad.C = 0.1;
    CHECK_FALSE(sde::check_drift(bad));
    CHECK_THROWS(sde::DriftSpec::parse("relu"));
}

TEST_CASE("trivial drifts: V stays at x for b = 0 and grows as x e^t for b = id") {
    Fixture fx;
    const mc::PathEnsemble ens(50, fx.K, 1);
    sde::Problem pr{sde::DriftSpec::parse("zero"), 1.3, 1.5, 0.4};
    auto sol = sde::solve_paths(fx.cache, pr, ens);
    for (const auto& s : sol.samples) CHECK(s.V == 1.3);
    pr.drift = sde::DriftSpec::parse("id");
    sol = sde::solve_paths(fx.cache, pr, ens);
    for (const auto& s : sol.samples) CHECK(s.V == doctest::Approx(1.3 * std::exp(0.4)).epsilon(1e-12));
    pr.t = 0.0;
    sol = sde::solve_paths(fx.cache, pr, ens);
    for (const auto& s : sol.samples) CHECK(s.U == 1.3);
}

TEST_CASE("zeta as an ODE state matches the quadratic form") {
    Fixture fx;
    const mc::PathEnsemble ens(200, fx.K, 2);
    sde::Problem pr{sde::DriftSpec::parse("tanh"), 1.0, 1.5, 0.5 * fx.T, TestFunction::from_bump({0.0, 0.3, 0.5}, 16)};
    const auto sol = sde::solve_paths(fx.cache, pr, ens);
    CHECK(sol.zeta_crosscheck < 1e-9);
    const auto fine = sde::solve_paths(fx.cache, pr, ens.head(20), {sde::Method::RK45});
    CHECK(fine.zeta_crosscheck < 1e-8);
}

TEST_CASE("problem validation") {
    Fixture fx;
    const mc::PathEnsemble ens(10, fx.K, 3);
    sde::Problem pr{sde::DriftSpec::parse("id"), 1.0, 1.5, 1.1 * fx.T};
    CHECK_THROWS_AS(sde::solve_paths(fx.cache, pr, ens), sde::BeyondLifetime);
    pr.allow_beyond_T = true;
    CHECK(sde::solve_paths(fx.cache, pr, ens).beyond_T);
    pr = {sde::DriftSpec::parse("id"), 1.0, 0.9, 0.05};
    CHECK_THROWS_AS(sde::solve_paths(fx.cache, pr, ens), std::invalid_argument);
    pr.allow_low_p = true;
    CHECK_NOTHROW(sde::solve_paths(fx.cache, pr, ens));
    pr.p = 0.5;
    CHECK_THROWS(sde::solve_paths(fx.cache, pr, ens));
}

TEST_CASE("S-transform at f = 0, b = 0 against the Gaussian determinant") {
    Fixture fx;
    const double t = 0.5 * fx.T;
    const mc::PathEnsemble ens(40000, fx.K, 4);
    const sde::Problem pr{sde::DriftSpec::parse("zero"), 1.0, 1.5, t};
    const auto s = sde::s_transform_solution(fx.cache, pr, ens);
    const Eigen::MatrixXd M = qwn::smoothed_gram(fx.cache.matrix_at(t), fx.basis, 1.5);
    const double exact = std::exp(-0.5 * log_det_I_minus(M, 2.0) - M.trace());
    CHECK(std::abs(s.value - exact) <= 3.0 * s.std_error);
    CHECK_FALSE(s.variance_flag);
}

TEST_CASE("closed form of the linear example against two-dimensional quadrature") {
    // K = 2: E[x e^{beta t} exp(z'^T M z' - tr M)] over z ~ N(0, I_2) by tensor Gauss-Hermite
    const basis::SpectralBasis b(2);
    const gram::GramCache cache(b, {1.0, 20});
    const double p = 1.5, t = 0.3, x0 = 0.8, beta = 1.0;
    Eigen::VectorXd fc(2);
    fc << 0.4, -0.7;
    const TestFunction f(fc);
    const Eigen::MatrixXd M = qwn::smoothed_gram(cache.matrix_at(t), b, p);
    const Eigen::VectorXd a = b.powers(p).cwiseProduct(fc);
    const auto& rule = quadrature::gauss_hermite(60);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        for (std::size_t j = 0; j < rule.size(); ++j) {
            Eigen::Vector2d z(rule.nodes[i], rule.nodes[j]);
            z += a;
            acc += rule.weights[i] * rule.weights[j] * std::exp(z.dot(M * z) - M.trace());
        }
    }
    const double oracle = x0 * std::exp(beta * t) * acc;
    const auto cf = sde::closed_form_linear(cache, x0, p, t, f, 1.0, beta);
    CHECK(cf.real() == doctest::Approx(oracle).epsilon(1e-11));
    CHECK(cf.imag() == 0.0);
    // an imaginary argument: the same quadrature with exp(i a^T ...) reduces to a real Gaussian integral
    const auto ci = sde::closed_form_linear(cache, x0, p, t, f, {0.0, 1.0}, beta);
    std::complex<double> acc_i = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        for (std::size_t j = 0; j < rule.size(); ++j) {
            const Eigen::Vector2cd z = Eigen::Vector2d(rule.nodes[i], rule.nodes[j]).cast<std::complex<double>>() + std::complex<double>(0.0, 1.0) * a.cast<std::complex<double>>();
            const std::complex<double> q = (z.transpose() * M.cast<std::complex<double>>() * z)(0, 0);
            acc_i += rule.weights[i] * rule.weights[j] * std::exp(q - M.trace());
        }
    }
    CHECK(std::abs(ci - x0 * std::exp(beta * t) * acc_i) < 1e-11);
}

TEST_CASE("Monte Carlo S-transform matches the linear closed form") {
    Fixture fx;
    const double t = 0.5 * fx.T;
    const mc::PathEnsemble ens(20000, fx.K, 5);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(fx.K);
    c[0] = 0.3;
    c[2] = -0.2;
    for (const char* b : {"zero", "id"}) {
        const sde::Problem pr{sde::DriftSpec::parse(b), 1.0, 1.5, t, TestFunction(c)};
        const auto s = sde::s_transform_solution(fx.cache, pr, ens);
        const auto cf = sde::closed_form_linear(fx.cache, 1.0, 1.5, t, *pr.f, 1.0, *pr.drift.linear);
        CHECK(std::abs(s.value - cf.real()) <= 3.0 * s.std_error);
    }
}

TEST_CASE("integral identity: pathwise, in expectation, and RK4 order") {
    Fixture fx;
    const mc::PathEnsemble ens(4000, fx.K, 6);
    const sde::Problem pr{sde::DriftSpec::parse("tanh:0.5"), 1.0, 1.5, 0.5 * fx.T, TestFunction::from_bump({0.0, 0.3, 0.5}, 16)};
    const auto r = sde::verify_integral_identity(fx.cache, pr, ens, 8);
    CHECK(r.expectation_pass);
    CHECK(r.pathwise_pass);
    CHECK(r.gronwall_violations == 0);
    const auto conv = sde::rk4_convergence(fx.cache, pr, ens.head(8), {0.02, 0.01, 0.005});
    for (double o : conv.orders) CHECK(o > 3.5);
    const auto a = sde::integrator_agreement(fx.cache, pr, ens.head(8));
    CHECK(a.pass);
}

TEST_CASE("Gronwall envelope at 0.8 T") {
    Fixture fx;
    const mc::PathEnsemble ens(10000, fx.K, 7);
    for (const char* b : {"id", "tanh"}) {
        const sde::Problem pr{sde::DriftSpec::parse(b), -0.7, 1.5, 0.8 * fx.T};
        CHECK(sde::solve_paths(fx.cache, pr, ens).gronwall_violations == 0);
    }
}

TEST_CASE("adaptedness: g = 0 gives exactly zero, early g is detected") {
    Fixture fx;
    const double t = 0.5 * fx.T;
    const mc::PathEnsemble ens(4000, fx.K, 8);
    const sde::Problem pr{sde::DriftSpec::parse("tanh:0.5"), 1.0, 1.5, t, TestFunction::from_bump({0.0, 0.3, 0.5}, 16)};
    const auto zero = sde::adaptedness_check(fx.cache, pr, TestFunction(Eigen::VectorXd::Zero(16)), ens);
    CHECK(zero.difference == 0.0);
    CHECK(zero.leakage == 0.0);
    const auto early = sde::adaptedness_check(fx.cache, pr, TestFunction::from_bump({0.05, 0.25, 1.0}, 16), ens);
    CHECK(early.exceeds_3sigma);
}

TEST_CASE("life time threshold and second moments") {
    Fixture fx;
    for (double p : {1.0, 1.5}) {
        const auto l = sde::lifetime_threshold(fx.cache, p);
        CHECK(l.pass);
        CHECK(std::isfinite(l.t_star));
        const Eigen::MatrixXd M = qwn::smoothed_gram(fx.cache.matrix_at(l.t_star), fx.basis, p);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
        CHECK(eig.eigenvalues().maxCoeff() == doctest::Approx(0.25).epsilon(1e-6));
    }
    CHECK(std::isinf(sde::lifetime_threshold(fx.cache, 2.0).t_star));
    const double t = 0.1;
    const mc::PathEnsemble ens(50000, fx.K, 9);
    const auto m = sde::moment_study(fx.cache, 1.5, t, ens);
    REQUIRE(m.closed_form);
    const Eigen::MatrixXd M = qwn::smoothed_gram(fx.cache.matrix_at(t), fx.basis, 1.5);
    CHECK(*m.closed_form == doctest::Approx(std::exp(-0.5 * log_det_I_minus(M, 4.0) - 2.0 * M.trace())).epsilon(1e-12));
    CHECK(std::abs(m.means.back() - *m.closed_form) <= 3.0 * m.errors.back());
    CHECK(m.finite_mean);
    CHECK_FALSE(sde::second_moment_closed_form(fx.cache, 1.0, 2.0).has_value());
}

TEST_CASE("positivity certificate") {
    Fixture fx;
    std::vector<TestFunction> family;
    for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(fx.K);
        c[j % 3] = 0.2 * (j + 1);
        family.emplace_back(c);
    }
    const auto r = sde::positivity_certificate(fx.cache, 1.0, 1.5, 0.5 * fx.T, family);
    CHECK(r.pass);
    CHECK(r.max_imag < 1e-12);
    CHECK((r.F - r.F.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS(sde::positivity_certificate(fx.cache, 1.0, 1.5, 0.5, {}));
}

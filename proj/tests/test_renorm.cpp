#include "doctest.h"

#include "wickforge/renorm.hpp"

#include <boost/math/special_functions/factorials.hpp>

#include <cmath>

using namespace wickforge;
using chaos::MultiIndex;

TEST_CASE("heat coefficients of x^2 and cos") {
    const auto sq = renorm::heat_semigroup_coeffs(ScalarFunction::parse("square"), 0.7, 4);
    CHECK(sq.d[0] == doctest::Approx(0.7).epsilon(1e-13));
    CHECK(std::abs(sq.d[1]) < 1e-13);
    CHECK(sq.d[2] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(sq.d[3]) < 1e-13);
    CHECK(std::abs(sq.d[4]) < 1e-13);

    // P_t cos = e^{-t/2} cos
    const double t = 0.5;
    const auto c = renorm::heat_semigroup_coeffs(ScalarFunction::parse("cos"), t, 12);
    for (int n = 0; n <= 12; ++n) {
        const double exact = n % 2 ? 0.0
                                   : std::exp(-t / 2) * ((n / 2) % 2 ? -1.0 : 1.0) /
                                         boost::math::factorial<double>(static_cast<unsigned>(n));
        CHECK(std::abs(c.d[n] - exact) < 1e-13);
    }
    CHECK(c.kuo_residual < 1e-10);
    CHECK(c.quad_error < 1e-12);
}

TEST_CASE("Wick composition expands I_1(h)^<>n multinomially") {
    renorm::HeatCoeffs hc;
    hc.d = {0.5, -1.0, 2.0, 0.25};
    Eigen::VectorXd h(2);
    h << 0.3, -0.8;
    const auto X = renorm::wick_compose(hc, h);
    CHECK(X.coefficient(MultiIndex{}) == doctest::Approx(0.5));
    CHECK(X.coefficient(MultiIndex::unit(1)) == doctest::Approx(0.8));
    CHECK(X.coefficient(MultiIndex::unit(0, 2)) == doctest::Approx(2.0 * 0.09));
    CHECK(X.coefficient(MultiIndex({{0, 1}, {1, 1}})) == doctest::Approx(2.0 * 2 * 0.3 * -0.8));
    CHECK(X.coefficient(MultiIndex({{0, 1}, {1, 2}})) == doctest::Approx(0.25 * 3 * 0.3 * 0.64));
    CHECK(X.coefficient(MultiIndex::unit(1, 3)) == doctest::Approx(0.25 * -0.512));
}

TEST_CASE("S-transform of the composition is the smoothed function at <h, f>") {
    const double t = 0.3;
    const auto hc = renorm::heat_semigroup_coeffs(ScalarFunction::parse("cos"), t, 20);
    Eigen::VectorXd h(3);
    h << 0.4, 0.2, -0.1;
    const auto X = renorm::wick_compose(hc, h, 20);
    const std::vector<double> f{0.5, -1.0, 2.0};
    const double hf = 0.4 * 0.5 - 0.2 - 0.2;
    CHECK(chaos::s_transform(X, f) == doctest::Approx(std::exp(-t / 2) * std::cos(hf)).epsilon(1e-13));
}

TEST_CASE("proposition: polynomial, bounded and p = 0 cases") {
    Eigen::VectorXd h(3);
    h << 0.6, 0.3, -0.2;
    const auto sq = renorm::proposition_check(ScalarFunction::parse("square"), h, 1.5);
    CHECK(sq.discrepancy < 1e-12);
    CHECK(sq.pass);

    const auto c = renorm::proposition_check(ScalarFunction::parse("cos"), h, 1.0);
    CHECK(c.discrepancy < 1e-8);
    CHECK(c.kuo_residual < 1e-9);
    CHECK(c.pass);
    CHECK(c.variance < h.squaredNorm());

    const auto c0 = renorm::proposition_check(ScalarFunction::parse("cos"), h, 0.0);
    CHECK(c0.variance == doctest::Approx(h.squaredNorm()));
    CHECK(c0.pass);

    // a finer rule does not change the answer
    const auto fine = renorm::proposition_check(ScalarFunction::parse("tanh"), h, 1.0, 10, 120);
    const auto coarse = renorm::proposition_check(ScalarFunction::parse("tanh"), h, 1.0, 10, 60);
    CHECK(chaos::max_abs_difference(fine.rhs, coarse.rhs) < 1e-9);
}

TEST_CASE("error bound") {
    Eigen::VectorXd h(1);
    h << 1.0;
    const auto sinf = ScalarFunction::parse("sin");

    const auto zero = renorm::error_bound_check(sinf, h, 0.0);
    CHECK(zero.vacuous);
    CHECK(zero.lhs < 1e-12);
    CHECK(zero.pass);

    const auto lin = renorm::error_bound_check(ScalarFunction::parse("id"), h, 1.0);
    CHECK(lin.lhs < 1e-12);
    CHECK(lin.pass);

    double previous = -1.0;
    for (double p : {0.5, 1.0, 2.0}) {
        const auto r = renorm::error_bound_check(sinf, h, p);
        CHECK(r.pass);
        CHECK(r.lhs <= r.rhs);
        CHECK(r.lhs > previous);
        previous = r.lhs;
        REQUIRE(r.sweep.size() >= 2);
        for (std::size_t i = 1; i < r.sweep.size(); ++i) CHECK(r.sweep[i].constant <= r.sweep[i - 1].constant);
        CHECK(r.sweep.back().bound == doctest::Approx(r.rhs));
    }
}

TEST_CASE("truncation that misses E[phi^2] is reported") {
    CHECK_THROWS_AS(renorm::heat_semigroup_coeffs(ScalarFunction::parse("cos"), 30.0, 4),
                    renorm::QuadratureInconsistency);
    CHECK_THROWS_AS(renorm::heat_semigroup_coeffs(ScalarFunction::parse("cos"), 0.5, 10, 20), std::invalid_argument);
}

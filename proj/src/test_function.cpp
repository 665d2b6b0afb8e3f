#include "wickforge/test_function.hpp"

#include "wickforge/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace wickforge {

namespace {

constexpr int kBumpPanels = 256;

void check_size(const TestFunction& a, const TestFunction& b) {
    if (a.size() != b.size()) throw std::invalid_argument("test functions have different sizes");
}

}  // namespace

double Bump::operator()(double s) const {
    const double u = (2.0 * s - a - b) / (b - a);
    if (!(std::abs(u) < 1.0)) return 0.0;
    return height * std::exp(1.0 - 1.0 / (1.0 - u * u));
}

double Bump::l2_norm_sq() const {
    return quadrature::integrate([this](double s) { const double g = (*this)(s); return g * g; }, a, b,
                                 kBumpPanels);
}

TestFunction::TestFunction(Eigen::VectorXd coeffs, std::string tag)
    : coeffs_(std::move(coeffs)), tag_(std::move(tag)) {}

TestFunction TestFunction::from_bump(const Bump& bump, int K) {
    if (!(bump.b > bump.a) || bump.a < 0.0) throw std::invalid_argument("bump needs 0 <= a < b");
    const auto& rule = quadrature::gauss_legendre(16);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd xi(K);
    const double width = (bump.b - bump.a) / kBumpPanels;
    for (int m = 0; m < kBumpPanels; ++m) {
        const double mid = bump.a + (m + 0.5) * width;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double s = mid + 0.5 * width * rule.nodes[i];
            basis::laguerre_all(s, std::span<double>(xi.data(), static_cast<std::size_t>(K)));
            coeffs += (0.5 * width * rule.weights[i] * bump(s)) * xi;
        }
    }
    TestFunction f(coeffs, "bump");
    f.bump_ = bump;
    f.truncation_mass_ = std::max(0.0, bump.l2_norm_sq() - coeffs.squaredNorm());
    return f;
}

TestFunction TestFunction::from_json(const nlohmann::json& j, int K) {
    if (j.contains("coeffs")) {
        const auto values = j.at("coeffs").get<std::vector<double>>();
        if (static_cast<int>(values.size()) > K) {
            throw std::invalid_argument("test function has " + std::to_string(values.size()) +
                                        " coefficients but K = " + std::to_string(K));
        }
        Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(K);
        for (std::size_t k = 0; k < values.size(); ++k) coeffs[static_cast<Eigen::Index>(k)] = values[k];
        return TestFunction(coeffs, "coeffs");
    }
    if (j.contains("bump")) {
        const auto& b = j.at("bump");
        return from_bump({b.at("a").get<double>(), b.at("b").get<double>(), b.value("height", 1.0)}, K);
    }
    throw std::invalid_argument("test function JSON needs \"coeffs\" or \"bump\"");
}

nlohmann::json TestFunction::to_json() const {
    nlohmann::json j;
    if (bump_) j["bump"] = {{"a", bump_->a}, {"b", bump_->b}, {"height", bump_->height}};
    j["coeffs"] = std::vector<double>(coeffs_.data(), coeffs_.data() + coeffs_.size());
    return j;
}

double TestFunction::operator()(double s) const {
    Eigen::VectorXd xi(coeffs_.size());
    basis::laguerre_all(s, std::span<double>(xi.data(), static_cast<std::size_t>(xi.size())));
    return coeffs_.dot(xi);
}

double TestFunction::norm_sq(double q) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < coeffs_.size(); ++k) {
        acc += std::exp(2.0 * q * std::log(k + 1.5)) * coeffs_[k] * coeffs_[k];
    }
    return acc;
}

TestFunction TestFunction::scaled(double p) const {
    Eigen::VectorXd out = coeffs_;
    for (Eigen::Index k = 0; k < out.size(); ++k) out[k] *= std::exp(p * std::log(k + 1.5));
    return TestFunction(out, tag_);
}

TestFunction TestFunction::operator+(const TestFunction& other) const {
    check_size(*this, other);
    return TestFunction(coeffs_ + other.coeffs_);
}

TestFunction TestFunction::operator-(const TestFunction& other) const {
    check_size(*this, other);
    return TestFunction(coeffs_ - other.coeffs_);
}

TestFunction TestFunction::operator*(double s) const { return TestFunction(coeffs_ * s, tag_); }

}  // namespace wickforge

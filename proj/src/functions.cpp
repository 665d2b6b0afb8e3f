#include "wickforge/functions.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wickforge {

namespace {

// d^n/dx^n tanh x as a polynomial in u = tanh x, using d/dx P(u) = P'(u)(1 - u^2)
double tanh_derivative(int n, double x) {
    std::vector<double> poly{0.0, 1.0};
    for (int i = 0; i < n; ++i) {
        std::vector<double> next(poly.size() + 1, 0.0);
        for (std::size_t k = 1; k < poly.size(); ++k) {
            next[k - 1] += k * poly[k];
            next[k + 1] -= k * poly[k];
        }
        poly = std::move(next);
    }
    const double u = std::tanh(x);
    double acc = 0.0;
    for (std::size_t k = poly.size(); k-- > 0;) acc = acc * u + poly[k];
    return acc;
}

}  // namespace

ScalarFunction ScalarFunction::polynomial(std::vector<double> coeffs) {
    ScalarFunction f;
    f.kind_ = Kind::Polynomial;
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.empty()) coeffs.push_back(0.0);
    std::ostringstream os;
    os.precision(17);
    os << "poly:";
    for (std::size_t i = 0; i < coeffs.size(); ++i) os << (i ? "," : "") << coeffs[i];
    f.spec_ = os.str();
    f.coeffs_ = std::move(coeffs);
    return f;
}

ScalarFunction ScalarFunction::parse(std::string_view spec) {
    ScalarFunction f;
    f.spec_ = std::string(spec);
    if (spec == "cos") {
        f.kind_ = Kind::Cos;
    } else if (spec == "sin") {
        f.kind_ = Kind::Sin;
    } else if (spec == "tanh") {
        f.kind_ = Kind::Tanh;
    } else if (spec == "id") {
        return polynomial({0.0, 1.0});
    } else if (spec == "square") {
        return polynomial({0.0, 0.0, 1.0});
    } else if (spec.starts_with("poly:")) {
        std::vector<double> coeffs;
        std::stringstream ss{std::string(spec.substr(5))};
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                coeffs.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw std::invalid_argument("bad polynomial coefficient '" + item + "' in '" +
                                            std::string(spec) + "'");
            }
        }
        if (coeffs.empty()) throw std::invalid_argument("poly: needs at least one coefficient");
        return polynomial(std::move(coeffs));
    } else {
        throw std::invalid_argument("unknown function '" + std::string(spec) +
                                    "' (expected cos, sin, tanh, id, square or poly:c0,c1,...)");
    }
    return f;
}

int ScalarFunction::degree() const {
    return kind_ == Kind::Polynomial ? static_cast<int>(coeffs_.size()) - 1 : 0;
}

double ScalarFunction::derivative(int n, double x) const {
    if (n < 0) throw std::invalid_argument("derivative order must be non-negative");
    switch (kind_) {
    case Kind::Cos: return std::cos(x + n * 1.5707963267948966);
    case Kind::Sin: return std::sin(x + n * 1.5707963267948966);
    case Kind::Tanh: return n == 0 ? std::tanh(x) : tanh_derivative(n, x);
    case Kind::Polynomial: break;
    }
    // Horner on the n-th derivative coefficients
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > static_cast<std::size_t>(n);) {
        double falling = 1.0;
        for (int i = 0; i < n; ++i) falling *= static_cast<double>(k - static_cast<std::size_t>(i));
        acc = acc * x + falling * coeffs_[k];
    }
    return acc;
}

double ScalarFunction::sup_second_derivative() const {
    switch (kind_) {
    case Kind::Cos:
    case Kind::Sin: return 1.0;
    case Kind::Tanh: return 4.0 / (3.0 * std::sqrt(3.0));  // at tanh x = 1/sqrt 3
    case Kind::Polynomial: break;
    }
    if (degree() <= 1) return 0.0;
    if (degree() == 2) return std::abs(2.0 * coeffs_[2]);
    return std::numeric_limits<double>::infinity();
}

}  // namespace wickforge

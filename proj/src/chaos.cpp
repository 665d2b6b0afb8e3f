#include "wickforge/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wickforge::chaos {

namespace {

double log_lambda(int k) { return std::log(k + 1.5); }

// sum_k alpha_k log lambda_k
double log_weight(const MultiIndex& alpha) {
    double acc = 0.0;
    for (const auto& [k, d] : alpha.entries()) acc += d * log_lambda(k);
    return acc;
}

double binomial(int n, int r) {
    double c = 1.0;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
}

// C(m,r) C(n,r) r!, exact in double for the degrees in use
double linearization(int m, int n, int r) {
    double f = binomial(m, r) * binomial(n, r);
    for (int i = 2; i <= r; ++i) f *= i;
    return f;
}

void check_degree(const MultiIndex& a, const MultiIndex& b, int cap, const char* op) {
    if (a.total_degree() + b.total_degree() > cap) {
        std::ostringstream os;
        os << op << " of H" << a.to_string() << " and H" << b.to_string() << " has degree "
           << a.total_degree() + b.total_degree() << " above the cap " << cap;
        throw DegreeCapError(os.str());
    }
}

// Product without pruning: the smoothed factors inside star_p are tiny.
ChaosExpansion multiply_raw(const ChaosExpansion& X, const ChaosExpansion& Y) {
    if (X.dimension() != Y.dimension()) throw std::invalid_argument("chaos dimensions differ");
    const int cap = std::max(X.max_degree(), Y.max_degree());
    ChaosExpansion out(X.dimension(), cap);

    struct Slot {
        int coord;
        int m;
        int n;
    };
    std::vector<Slot> slots;
    std::vector<int> r;
    std::vector<MultiIndex::Entry> entries;
    for (const auto& [a, ca] : X.terms()) {
        for (const auto& [b, cb] : Y.terms()) {
            check_degree(a, b, cap, "product");
            slots.clear();
            auto ia = a.entries().begin();
            auto ib = b.entries().begin();
            while (ia != a.entries().end() || ib != b.entries().end()) {
                if (ib == b.entries().end() || (ia != a.entries().end() && ia->first < ib->first)) {
                    slots.push_back({ia->first, ia->second, 0});
                    ++ia;
                } else if (ia == a.entries().end() || ib->first < ia->first) {
                    slots.push_back({ib->first, 0, ib->second});
                    ++ib;
                } else {
                    slots.push_back({ia->first, ia->second, ib->second});
                    ++ia;
                    ++ib;
                }
            }
            r.assign(slots.size(), 0);
            while (true) {
                double c = ca * cb;
                entries.clear();
                for (std::size_t i = 0; i < slots.size(); ++i) {
                    const auto& s = slots[i];
                    if (s.m > 0 && s.n > 0) c *= linearization(s.m, s.n, r[i]);
                    const int d = s.m + s.n - 2 * r[i];
                    if (d > 0) entries.emplace_back(s.coord, d);
                }
                out.add(MultiIndex(entries), c);
                // odometer over the shared coordinates
                std::size_t i = 0;
                for (; i < slots.size(); ++i) {
                    if (r[i] < std::min(slots[i].m, slots[i].n)) {
                        ++r[i];
                        break;
                    }
                    r[i] = 0;
                }
                if (i == slots.size()) break;
            }
        }
    }
    return out;
}

}  // namespace

MultiIndex::MultiIndex(std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end());
    for (const auto& [k, d] : entries) {
        if (k < 0) throw std::invalid_argument("multi-index coordinate must be non-negative");
        if (d < 0) throw std::invalid_argument("multi-index degree must be non-negative");
        if (d == 0) continue;
        if (!entries_.empty() && entries_.back().first == k) {
            entries_.back().second += d;
        } else {
            entries_.emplace_back(k, d);
        }
    }
}

MultiIndex MultiIndex::unit(int k, int degree) { return MultiIndex({{k, degree}}); }

int MultiIndex::degree(int k) const {
    for (const auto& [c, d] : entries_) {
        if (c == k) return d;
    }
    return 0;
}

int MultiIndex::total_degree() const {
    int n = 0;
    for (const auto& e : entries_) n += e.second;
    return n;
}

double MultiIndex::factorial() const {
    double f = 1.0;
    for (const auto& [k, d] : entries_) {
        for (int i = 2; i <= d; ++i) f *= i;
    }
    return f;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
    std::vector<Entry> merged(entries_);
    merged.insert(merged.end(), other.entries_.begin(), other.entries_.end());
    return MultiIndex(std::move(merged));
}

std::strong_ordering MultiIndex::operator<=>(const MultiIndex& other) const {
    // first coordinate where the dense vectors differ decides
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
        if (a->first != b->first) {
            return a->first < b->first ? std::strong_ordering::greater : std::strong_ordering::less;
        }
        if (a->second != b->second) return a->second <=> b->second;
        ++a;
        ++b;
    }
    if (a != entries_.end()) return std::strong_ordering::greater;
    if (b != other.entries_.end()) return std::strong_ordering::less;
    return std::strong_ordering::equal;
}

std::string MultiIndex::to_string() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (i) os << ',';
        os << entries_[i].first << ':' << entries_[i].second;
    }
    os << '}';
    return os.str();
}

ChaosExpansion::ChaosExpansion(int K, int max_degree) : K_(K), max_degree_(max_degree) {
    if (K < 1) throw std::invalid_argument("chaos dimension K must be positive");
    if (max_degree < 0) throw std::invalid_argument("degree cap must be non-negative");
}

ChaosExpansion ChaosExpansion::constant(int K, double c, int max_degree) {
    ChaosExpansion X(K, max_degree);
    X.add(MultiIndex{}, c);
    return X;
}

ChaosExpansion ChaosExpansion::coordinate(int K, int k, double c, int max_degree) {
    return hermite(K, MultiIndex::unit(k), c, max_degree);
}

ChaosExpansion ChaosExpansion::hermite(int K, const MultiIndex& alpha, double c, int max_degree) {
    ChaosExpansion X(K, max_degree);
    X.add(alpha, c);
    return X;
}

ChaosExpansion ChaosExpansion::first_chaos(std::span<const double> h, int max_degree) {
    ChaosExpansion X(static_cast<int>(h.size()), max_degree);
    for (std::size_t k = 0; k < h.size(); ++k) X.add(MultiIndex::unit(static_cast<int>(k)), h[k]);
    return X;
}

ChaosExpansion ChaosExpansion::second_chaos(const Eigen::MatrixXd& B, int max_degree) {
    if (B.rows() != B.cols()) throw std::invalid_argument("second chaos needs a square matrix");
    const int K = static_cast<int>(B.rows());
    ChaosExpansion X(K, max_degree);
    for (int j = 0; j < K; ++j) {
        X.add(MultiIndex::unit(j, 2), B(j, j));
        for (int k = j + 1; k < K; ++k) X.add(MultiIndex({{j, 1}, {k, 1}}), B(j, k) + B(k, j));
    }
    return X;
}

int ChaosExpansion::degree() const {
    int d = 0;
    for (const auto& term : terms_) d = std::max(d, term.first.total_degree());
    return d;
}

double ChaosExpansion::coefficient(const MultiIndex& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second;
}

void ChaosExpansion::check_index(const MultiIndex& alpha) const {
    if (alpha.max_coordinate() >= K_) {
        throw std::out_of_range("multi-index " + alpha.to_string() + " uses a coordinate >= K = " +
                                std::to_string(K_));
    }
    if (alpha.total_degree() > max_degree_) {
        throw DegreeCapError("multi-index " + alpha.to_string() + " exceeds the degree cap " +
                             std::to_string(max_degree_));
    }
}

void ChaosExpansion::check_compatible(const ChaosExpansion& other) const {
    if (other.K_ != K_) {
        throw std::invalid_argument("chaos dimensions differ: " + std::to_string(K_) + " vs " +
                                    std::to_string(other.K_));
    }
}

void ChaosExpansion::add(const MultiIndex& alpha, double c) {
    check_index(alpha);
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(alpha, c);
    if (!inserted) it->second += c;
}

void ChaosExpansion::set(const MultiIndex& alpha, double c) {
    check_index(alpha);
    terms_[alpha] = c;
}

ChaosExpansion& ChaosExpansion::prune(double threshold) {
    std::erase_if(terms_, [threshold](const auto& term) { return !(std::abs(term.second) >= threshold); });
    return *this;
}

ChaosExpansion& ChaosExpansion::operator+=(const ChaosExpansion& other) {
    check_compatible(other);
    max_degree_ = std::max(max_degree_, other.max_degree_);
    for (const auto& [alpha, c] : other.terms_) add(alpha, c);
    return prune();
}

ChaosExpansion& ChaosExpansion::operator-=(const ChaosExpansion& other) {
    check_compatible(other);
    max_degree_ = std::max(max_degree_, other.max_degree_);
    for (const auto& [alpha, c] : other.terms_) add(alpha, -c);
    return prune();
}

ChaosExpansion& ChaosExpansion::operator*=(double s) {
    for (auto& term : terms_) term.second *= s;
    return *this;
}

ChaosExpansion gamma(const ChaosExpansion& X, double p) {
    ChaosExpansion out(X.dimension(), X.max_degree());
    for (const auto& [alpha, c] : X.terms()) {
        const double scaled = c * std::exp(p * log_weight(alpha));
        if (!std::isfinite(scaled)) {
            throw std::overflow_error("Gamma(A^p) overflows on H" + alpha.to_string() +
                                      " at p = " + std::to_string(p));
        }
        out.add(alpha, scaled);
    }
    return out;
}

ChaosExpansion wick(const ChaosExpansion& X, const ChaosExpansion& Y) {
    if (X.dimension() != Y.dimension()) throw std::invalid_argument("chaos dimensions differ");
    const int cap = std::max(X.max_degree(), Y.max_degree());
    ChaosExpansion out(X.dimension(), cap);
    for (const auto& [a, ca] : X.terms()) {
        for (const auto& [b, cb] : Y.terms()) {
            check_degree(a, b, cap, "Wick product");
            out.add(a + b, ca * cb);
        }
    }
    return out.prune();
}

ChaosExpansion multiply(const ChaosExpansion& X, const ChaosExpansion& Y) {
    return multiply_raw(X, Y).prune();
}

ChaosExpansion star_p(const ChaosExpansion& X, const ChaosExpansion& Y, double p) {
    if (p < 0.0) throw std::invalid_argument("star_p needs p >= 0");
    return gamma(multiply_raw(gamma(X, -p), gamma(Y, -p)), p).prune();
}

ChaosExpansion wick_power(const ChaosExpansion& X, int n) {
    if (n < 0) throw std::invalid_argument("Wick power needs n >= 0");
    ChaosExpansion out = ChaosExpansion::constant(X.dimension(), 1.0, X.max_degree());
    for (int i = 0; i < n; ++i) out = wick(out, X);
    return out;
}

double s_transform(const ChaosExpansion& X, std::span<const double> f) {
    if (static_cast<int>(f.size()) < X.dimension()) {
        throw std::invalid_argument("test function has fewer coefficients than the chaos dimension");
    }
    double acc = 0.0;
    for (const auto& [alpha, c] : X.terms()) {
        double term = c;
        for (const auto& [k, d] : alpha.entries()) term *= std::pow(f[static_cast<std::size_t>(k)], d);
        acc += term;
    }
    return acc;
}

double expectation(const ChaosExpansion& X) { return X.coefficient(MultiIndex{}); }

double hermite_he(int n, double x) {
    if (n < 0) throw std::invalid_argument("Hermite degree must be non-negative");
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double evaluate(const ChaosExpansion& X, std::span<const double> z) {
    if (static_cast<int>(z.size()) < X.dimension()) {
        throw std::invalid_argument("evaluation point has fewer coordinates than the chaos dimension");
    }
    double acc = 0.0;
    for (const auto& [alpha, c] : X.terms()) {
        double term = c;
        for (const auto& [k, d] : alpha.entries()) term *= hermite_he(d, z[static_cast<std::size_t>(k)]);
        acc += term;
    }
    return acc;
}

double norm(const ChaosExpansion& X, double q) {
    // log of each weighted term, then a scaled sum
    std::vector<double> logs;
    logs.reserve(X.size());
    for (const auto& [alpha, c] : X.terms()) {
        if (c == 0.0) continue;
        logs.push_back(std::log(std::abs(c)) + 0.5 * std::log(alpha.factorial()) +
                       q * log_weight(alpha));
    }
    if (logs.empty()) return 0.0;
    const double top = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (double l : logs) acc += std::exp(2.0 * (l - top));
    const double value = std::exp(top) * std::sqrt(acc);
    if (!std::isfinite(value)) throw std::overflow_error("chaos norm overflows at q = " + std::to_string(q));
    return value;
}

double max_abs_difference(const ChaosExpansion& X, const ChaosExpansion& Y) {
    double worst = 0.0;
    for (const auto& [alpha, c] : X.terms()) worst = std::max(worst, std::abs(c - Y.coefficient(alpha)));
    for (const auto& [alpha, c] : Y.terms()) {
        if (!X.terms().contains(alpha)) worst = std::max(worst, std::abs(c));
    }
    return worst;
}

nlohmann::json to_json(const ChaosExpansion& X) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [alpha, c] : X.terms()) {
        nlohmann::json a = nlohmann::json::object();
        for (const auto& [k, d] : alpha.entries()) a[std::to_string(k)] = d;
        terms.push_back({{"alpha", a}, {"c", c}});
    }
    return {{"K", X.dimension()}, {"max_degree", X.max_degree()}, {"terms", terms}};
}

ChaosExpansion chaos_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("K")) throw std::invalid_argument("chaos JSON needs a \"K\" field");
    const int K = j.at("K").get<int>();
    const int cap = j.value("max_degree", kDefaultMaxDegree);
    ChaosExpansion X(K, cap);
    if (!j.contains("terms")) return X;
    for (const auto& term : j.at("terms")) {
        std::vector<MultiIndex::Entry> entries;
        for (const auto& [key, deg] : term.at("alpha").items()) {
            std::size_t used = 0;
            const int k = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument("bad coordinate key '" + key + "'");
            entries.emplace_back(k, deg.get<int>());
        }
        X.add(MultiIndex(std::move(entries)), term.at("c").get<double>());
    }
    return X;
}

}  // namespace wickforge::chaos

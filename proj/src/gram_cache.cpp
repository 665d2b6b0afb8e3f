#include "wickforge/gram_cache.hpp"

#include "wickforge/quadrature.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace wickforge::gram {

namespace {

constexpr char kMagic[4] = {'W', 'F', 'G', '1'};

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <class T>
T take(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("truncated Gram cache file");
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

// Upper triangle of sum over panels of w * xi xi^T.
Eigen::MatrixXd panel_sum(const basis::SpectralBasis& basis, double a, double b, int panels,
                          int order) {
    const int K = basis.size();
    const auto& rule = quadrature::gauss_legendre(order);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd xi(K);
    const double width = (b - a) / panels;
    for (int m = 0; m < panels; ++m) {
        const double mid = a + (m + 0.5) * width;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double s = mid + 0.5 * width * rule.nodes[i];
            basis.evaluate(s, std::span<double>(xi.data(), static_cast<std::size_t>(K)));
            const double w = 0.5 * width * rule.weights[i];
            acc.selfadjointView<Eigen::Upper>().rankUpdate(xi, w);
        }
    }
    return acc;
}

}  // namespace

std::string TimeGrid::spec() const {
    std::ostringstream os;
    os << std::setprecision(17) << t_end << ':' << intervals;
    return os.str();
}

TimeGrid TimeGrid::parse(std::string_view spec) {
    std::string text(spec);
    if (text.rfind("uniform:", 0) == 0) text = text.substr(8);
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("grid spec must be <t_end>:<intervals>, got '" +
                                    std::string(spec) + "'");
    }
    TimeGrid grid;
    try {
        grid.t_end = std::stod(text.substr(0, colon));
        grid.intervals = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw std::invalid_argument("grid spec must be <t_end>:<intervals>, got '" +
                                    std::string(spec) + "'");
    }
    if (!(grid.t_end > 0.0) || grid.intervals < 1) {
        throw std::invalid_argument("grid needs t_end > 0 and at least one interval");
    }
    return grid;
}

double panel_width(int K) { return std::min(0.5, 4.0 / (2.0 * K - 1.0)); }

IntervalIntegral integrate_products(const basis::SpectralBasis& basis, double a, double b,
                                    const GramSettings& settings) {
    const int K = basis.size();
    IntervalIntegral out;
    if (!(b > a)) {
        out.value = Eigen::MatrixXd::Zero(K, K);
        return out;
    }
    int panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel_width(K) - 1e-9)));
    Eigen::MatrixXd coarse = panel_sum(basis, a, b, panels, settings.order);
    for (int d = 0; d < settings.max_doublings; ++d) {
        panels *= 2;
        Eigen::MatrixXd fine = panel_sum(basis, a, b, panels, settings.order);
        const double diff =
            (fine - coarse).triangularView<Eigen::Upper>().toDenseMatrix().cwiseAbs().maxCoeff();
        if (diff <= settings.tolerance) {
            out.value = fine.selfadjointView<Eigen::Upper>();
            out.error = diff;
            out.panels = panels;
            return out;
        }
        coarse = std::move(fine);
    }
    std::ostringstream os;
    os << "Gram quadrature on [" << a << ", " << b << "] did not reach tolerance "
       << settings.tolerance << " after " << settings.max_doublings << " doublings (K=" << K
       << ", order=" << settings.order << ", panels=" << panels << ")";
    throw QuadratureError(os.str());
}

GramCache::GramCache(const basis::SpectralBasis& basis, TimeGrid grid, GramSettings settings)
    : basis_(basis), K_(basis.size()), grid_(grid), settings_(settings) {
    const std::size_t block = static_cast<std::size_t>(K_) * (K_ + 1) / 2;
    table_.assign(block * static_cast<std::size_t>(grid_.size()), 0.0);
    Eigen::MatrixXd running = Eigen::MatrixXd::Zero(K_, K_);
    for (int m = 1; m < grid_.size(); ++m) {
        const auto piece = integrate_products(basis_, grid_.node(m - 1), grid_.node(m), settings_);
        running += piece.value;
        error_bound_ += piece.error;
        panels_ += piece.panels;
        double* dst = table_.data() + block * static_cast<std::size_t>(m);
        for (int j = 0; j < K_; ++j)
            for (int k = j; k < K_; ++k) *dst++ = running(j, k);
    }
}

GramCache::GramCache(const basis::SpectralBasis& basis, TimeGrid grid, GramSettings settings,
                     std::vector<double> table, double error_bound, int panels)
    : basis_(basis),
      K_(basis.size()),
      grid_(grid),
      settings_(settings),
      table_(std::move(table)),
      error_bound_(error_bound),
      panels_(panels) {}

std::size_t GramCache::packed(int j, int k) const {
    if (j > k) std::swap(j, k);
    // row-major upper triangle offset
    return static_cast<std::size_t>(j) * K_ - static_cast<std::size_t>(j) * (j - 1) / 2 +
           static_cast<std::size_t>(k - j);
}

double GramCache::at(int j, int k, int m) const {
    if (j < 0 || k < 0 || j >= K_ || k >= K_ || m < 0 || m >= grid_.size()) {
        throw std::out_of_range("Gram index out of range");
    }
    const std::size_t block = static_cast<std::size_t>(K_) * (K_ + 1) / 2;
    return table_[block * static_cast<std::size_t>(m) + packed(j, k)];
}

Eigen::MatrixXd GramCache::matrix(int m) const {
    if (m < 0 || m >= grid_.size()) throw std::out_of_range("Gram grid index out of range");
    const std::size_t block = static_cast<std::size_t>(K_) * (K_ + 1) / 2;
    const double* src = table_.data() + block * static_cast<std::size_t>(m);
    Eigen::MatrixXd out(K_, K_);
    for (int j = 0; j < K_; ++j) {
        for (int k = j; k < K_; ++k) {
            out(j, k) = *src;
            out(k, j) = *src;
            ++src;
        }
    }
    return out;
}

Eigen::MatrixXd GramCache::matrix_at(double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("Gram time must be finite and >= 0");
    int m = std::min(grid_.intervals, static_cast<int>(std::floor(t / grid_.step())));
    while (m > 0 && grid_.node(m) > t) --m;
    Eigen::MatrixXd out = matrix(m);
    const double tm = grid_.node(m);
    if (t > tm) out += integrate_products(basis_, tm, t, settings_).value;
    return out;
}

double GramCache::gram(int j, int k, double t) const {
    const int m = static_cast<int>(std::llround(t / grid_.step()));
    if (m >= 0 && m < grid_.size() && grid_.node(m) == t) return at(j, k, m);
    return matrix_at(t)(j, k);
}

std::vector<std::uint8_t> GramCache::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(64 + table_.size() * sizeof(double));
    out.insert(out.end(), kMagic, kMagic + 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(K_));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid_.intervals));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(settings_.order));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(settings_.max_doublings));
    put<double>(out, grid_.t_end);
    put<double>(out, settings_.tolerance);
    put<double>(out, error_bound_);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(panels_));
    for (double v : table_) put<double>(out, v);
    return out;
}

void GramCache::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write Gram cache " + path.string());
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    nlohmann::json meta = {
        {"format", "WFG1"},
        {"K", K_},
        {"grid", grid_.spec()},
        {"t_end", grid_.t_end},
        {"intervals", grid_.intervals},
        {"quadrature", {{"rule", "gauss-legendre"}, {"order", settings_.order},
                        {"tolerance", settings_.tolerance},
                        {"max_doublings", settings_.max_doublings},
                        {"panel_width", panel_width(K_)},
                        {"panels", panels_}}},
        {"error_bound", error_bound_},
        {"layout", "little-endian float64, upper triangle row-major per grid node"},
        {"sha1", content_hash()},
    };
    std::ofstream js(path.string() + ".json");
    js << meta.dump(2) << '\n';
}

GramCache GramCache::load(const std::filesystem::path& path, const basis::SpectralBasis& basis) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read Gram cache " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw std::runtime_error("not a WFG1 Gram cache: " + path.string());
    }
    std::size_t pos = 4;
    const auto K = take<std::uint32_t>(bytes, pos);
    TimeGrid grid;
    grid.intervals = static_cast<int>(take<std::uint32_t>(bytes, pos));
    GramSettings settings;
    settings.order = static_cast<int>(take<std::uint32_t>(bytes, pos));
    settings.max_doublings = static_cast<int>(take<std::uint32_t>(bytes, pos));
    grid.t_end = take<double>(bytes, pos);
    settings.tolerance = take<double>(bytes, pos);
    const double error = take<double>(bytes, pos);
    const auto panels = take<std::uint64_t>(bytes, pos);
    if (static_cast<int>(K) != basis.size()) {
        throw std::runtime_error("Gram cache K=" + std::to_string(K) + " does not match basis K=" +
                                 std::to_string(basis.size()));
    }
    const std::size_t count = static_cast<std::size_t>(K) * (K + 1) / 2 * static_cast<std::size_t>(grid.size());
    if (bytes.size() - pos != count * sizeof(double)) throw std::runtime_error("Gram cache size mismatch");
    std::vector<double> table(count);
    for (auto& v : table) v = take<double>(bytes, pos);
    return GramCache(basis, grid, settings, std::move(table), error, static_cast<int>(panels));
}

std::string GramCache::content_hash() const {
    const auto bytes = serialize();
    const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, header.data(), header.size());
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

GramCache GramCache::load_or_build(const std::filesystem::path& dir,
                                   const basis::SpectralBasis& basis, TimeGrid grid,
                                   GramSettings settings, CacheStats* stats) {
    std::ostringstream name;
    name << "gram_K" << basis.size() << "_T" << std::setprecision(12) << grid.t_end << "_M"
         << grid.intervals << "_o" << settings.order << ".wfg";
    const auto path = dir / name.str();
    if (stats) stats->last_path = path.string();
    if (std::filesystem::exists(path)) {
        auto cache = load(path, basis);
        if (cache.settings_.tolerance == settings.tolerance &&
            cache.settings_.max_doublings == settings.max_doublings) {
            if (stats) ++stats->hits;
            return cache;
        }
    }
    if (stats) ++stats->misses;
    GramCache cache(basis, grid, settings);
    cache.save(path);
    return cache;
}

}  // namespace wickforge::gram

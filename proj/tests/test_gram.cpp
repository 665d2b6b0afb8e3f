#include "doctest.h"

#include "wickforge/gram_cache.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace wickforge;

namespace {

double gk_product(int j, int k, double a, double b) {
    auto f = [&](double s) { return basis::laguerre_eval(j, s) * basis::laguerre_eval(k, s); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("wickforge_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("time grid parsing") {
    const auto g = gram::TimeGrid::parse("2:200");
    CHECK(g.t_end == 2.0);
    CHECK(g.intervals == 200);
    CHECK(g.node(200) == 2.0);
    CHECK(gram::TimeGrid::parse("uniform:1.5:30").intervals == 30);
    CHECK_THROWS(gram::TimeGrid::parse("abc"));
    CHECK_THROWS(gram::TimeGrid::parse("1:0"));
}

TEST_CASE("panel width") {
    CHECK(gram::panel_width(1) == 0.5);
    CHECK(gram::panel_width(64) == doctest::Approx(4.0 / 127.0));
}

TEST_CASE("Gram entries against adaptive Gauss-Kronrod") {
    const basis::SpectralBasis b(12);
    const gram::GramCache cache(b, {3.0, 30});
    for (int j : {0, 3, 11}) {
        for (int k : {0, 5, 11}) {
            for (double t : {0.1, 1.37, 3.0}) {
                CHECK(cache.gram(j, k, t) == doctest::Approx(gk_product(j, k, 0.0, t)).epsilon(1e-11).scale(1.0));
            }
        }
    }
    // int_0^t xi_0^2 = 1 - e^{-t}
    CHECK(cache.gram(0, 0, 2.2) == doctest::Approx(1.0 - std::exp(-2.2)).epsilon(1e-13));
    CHECK(cache.matrix(0).norm() == 0.0);
    const Eigen::MatrixXd G = cache.matrix_at(1.234);
    CHECK((G - G.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    CHECK(eig.eigenvalues().minCoeff() > -1e-14);
    CHECK(eig.eigenvalues().maxCoeff() < 1.0 + 1e-12);
}

TEST_CASE("orthonormality on the half line") {
    const basis::SpectralBasis b(16);
    const auto I = gram::integrate_products(b, 0.0, 200.0);
    CHECK((I.value - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rebuilding reproduces every entry bit for bit") {
    const basis::SpectralBasis b(10);
    const gram::GramCache a(b, {1.0, 10});
    const gram::GramCache c(b, {1.0, 10});
    for (int m = 0; m <= 10; ++m) CHECK((a.matrix(m) - c.matrix(m)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.content_hash() == c.content_hash());
}

TEST_CASE("persistence round trip and content hash") {
    const basis::SpectralBasis b(10);
    const gram::GramCache a(b, {1.0, 10});
    const auto dir = temp_dir("gram");
    const auto path = dir / "table.wfg";
    a.save(path);
    CHECK(std::filesystem::exists(path.string() + ".json"));
    {
        std::ifstream in(path, std::ios::binary);
        char magic[4];
        in.read(magic, 4);
        CHECK(std::string(magic, 4) == "WFG1");
    }
    const auto loaded = gram::GramCache::load(path, b);
    CHECK(loaded.content_hash() == a.content_hash());
    CHECK(loaded.gram(3, 4, 0.55) == a.gram(3, 4, 0.55));

#ifdef WF_GIT_EXECUTABLE
    // the hash is the git blob id of the binary file
    const auto out = dir / "hash.txt";
    const std::string cmd = std::string(WF_GIT_EXECUTABLE) + " hash-object " + path.string() + " > " + out.string() + " 2>/dev/null";
    if (std::system(cmd.c_str()) == 0) {
        std::ifstream in(out);
        std::string id;
        in >> id;
        CHECK(id == a.content_hash());
    }
#endif

    gram::CacheStats stats;
    const auto first = gram::GramCache::load_or_build(dir, b, {1.0, 10}, {}, &stats);
    const auto second = gram::GramCache::load_or_build(dir, b, {1.0, 10}, {}, &stats);
    CHECK(stats.misses == 1);
    CHECK(stats.hits == 1);
    CHECK(first.content_hash() == second.content_hash());
}

TEST_CASE("a corrupted file is rejected") {
    const basis::SpectralBasis b(4);
    const auto dir = temp_dir("corrupt");
    const auto path = dir / "bad.wfg";
    std::ofstream(path, std::ios::binary) << "NOPE";
    CHECK_THROWS(gram::GramCache::load(path, b));
}

TEST_CASE("refinement that cannot converge raises") {
    const basis::SpectralBasis b(8);
    gram::GramSettings s;
    s.tolerance = 1e-30;
    s.max_doublings = 1;
    CHECK_THROWS_AS(gram::integrate_products(b, 0.0, 5.0, s), gram::QuadratureError);
}

#include "doctest.h"

#include "wickforge/app/commands.hpp"
#include "wickforge/app/config.hpp"
#include "wickforge/app/report.hpp"
#include "wickforge/app/suite.hpp"
#include "wickforge/ensemble.hpp"
#include "wickforge/sde.hpp"

#include <string>

using namespace wickforge;
using app::ConfigError;
using app::RunConfig;

TEST_CASE("text config parsing and round trip") {
    const auto c = RunConfig::from_text(
        "# a comment\n"
        "command = renorm prop\n"
        "K = 8\n"
        "p=1.25\n"
        "seed = 7\n"
        "phi = cos   # trailing\n"
        "h = [0.7, 0.3]\n");
    CHECK(c.command == "renorm prop");
    CHECK(c.K == 8);
    CHECK(c.p == 1.25);
    CHECK(c.seed == 7);
    CHECK(c.text("phi", "") == "cos");
    CHECK(c.has("h"));
    CHECK(c.number("missing", 2.5) == 2.5);
    CHECK_THROWS_AS(c.number("missing"), ConfigError);

    const auto back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK_FALSE(c.to_json().contains("threads"));
}

TEST_CASE("config errors name the problem") {
    const auto c = RunConfig::from_text("command = sde solve\n");
    try {
        c.require({"b", "x0"});
        FAIL("require accepted missing keys");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("b") != std::string::npos);
        CHECK(msg.find("x0") != std::string::npos);
    }
    CHECK_THROWS_AS(RunConfig::from_text("K = -3\n").validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_text("this line has no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("empty command and unknown checks") {
    RunConfig c;
    CHECK_THROWS_WITH_AS(app::run_report(c), doctest::Contains("missing required field: command"), ConfigError);
    CHECK_THROWS_WITH_AS(app::select_checks(false, {"basis", "nosuch"}),
                         doctest::Contains("valid checks: basis spectral algebra"), ConfigError);
    CHECK(app::select_checks(true, {}).size() == 11);
    CHECK(app::select_checks(false, {"renorm"}) == std::vector<std::string>{"renorm"});
}

TEST_CASE("report pass logic") {
    RunConfig c;
    app::Report r("x", c);
    CHECK_FALSE(r.pass());
    r.add(app::upper_check("a", 1.0, 2.0));
    CHECK(r.pass());
    r.add(app::sigma_check("b", 0.5, 0.1, 3.0));
    CHECK_FALSE(r.pass());
    CHECK(app::sigma_check("c", 0.5, 0.1, 3.0, 0.3).pass);
    app::Report f("y", c);
    f.add(app::upper_check("a", 0.0, 1.0));
    f.fail("boom", "went wrong");
    CHECK_FALSE(f.pass());
    const auto j = f.to_json();
    CHECK(j.dump().find("went wrong") != std::string::npos);
}

TEST_CASE("Monte Carlo results do not depend on the thread count") {
    const basis::SpectralBasis basis(8);
    const gram::GramCache cache(basis, {1.0, 50});
    const mc::PathEnsemble ens(3000, 8, 11);
    const sde::Problem pr{sde::DriftSpec::parse("tanh"), 1.0, 1.5, 0.3, TestFunction::from_bump({0.0, 0.3, 0.5}, 8)};
    mc::set_threads(1);
    const auto one = sde::s_transform_solution(cache, pr, ens);
    mc::set_threads(3);
    const auto three = sde::s_transform_solution(cache, pr, ens);
    mc::set_threads(1);
    CHECK(one.value == three.value);
    CHECK(one.std_error == three.std_error);

    // the ensemble itself is reproducible sample by sample
    CHECK(ens.sample(1234) == mc::PathEnsemble::generate(11, 1234, 8));
    CHECK(mc::derive_seed(42, 0) != mc::derive_seed(42, 1));
    CHECK(mc::derive_seed(42, 5) == mc::derive_seed(42, 5));
}

TEST_CASE("quadrupling N halves the standard error") {
    const basis::SpectralBasis basis(8);
    const gram::GramCache cache(basis, {1.0, 50});
    const sde::Problem pr{sde::DriftSpec::parse("id"), 1.0, 1.5, 0.3};
    const auto small = sde::s_transform_solution(cache, pr, mc::PathEnsemble(5000, 8, 21));
    const auto large = sde::s_transform_solution(cache, pr, mc::PathEnsemble(20000, 8, 22));
    const double ratio = small.std_error / large.std_error;
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
}

TEST_CASE("report commands run from a config") {
    auto c = RunConfig::from_text("command = renorm prop\nK = 8\np = 1.5\nphi = cos\nh = [0.7, 0.3]\ndegree = 10\n");
    const auto r = app::run_report(c);
    CHECK(r.pass());
    c.command = "ito square";
    c.params["t"] = "0.1";
    c.p = 1.0;
    CHECK(app::run_report(c).pass());
    c.command = "nope";
    CHECK_THROWS_AS(app::run_report(c), ConfigError);
}

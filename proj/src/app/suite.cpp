#include "wickforge/app/suite.hpp"

#include "wickforge/app/commands.hpp"
#include "wickforge/chaos.hpp"
#include "wickforge/ensemble.hpp"
#include "wickforge/qwn.hpp"
#include "wickforge/quadrature.hpp"
#include "wickforge/renorm.hpp"
#include "wickforge/sde.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace wickforge::app {

namespace {

int scaled(const RunConfig& config, int n) {
    return std::max(1000, static_cast<int>(std::lround(n * config.number("mc_scale", 1.0))));
}

std::uint64_t seed_for(const RunConfig& config, int salt) { return mc::derive_seed(config.seed, static_cast<std::uint64_t>(salt)); }

// ---- AC1
Report basis_fidelity(const RunConfig& config) {
    Report report("suite basis", config);
    const int K = 64;
    const double t_tail = 500.0;
    const basis::SpectralBasis basis(K);
    gram::GramSettings settings;
    settings.tolerance = config.tol.quad_tol;
    const auto G = gram::integrate_products(basis, 0.0, t_tail, settings);
    const double ortho = (G.value - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff();
    report.add(upper_check("orthonormality_residual", ortho, 1e-8,
                           {{"K", K}, {"t_tail", t_tail}, {"panels", G.panels}, {"quad_error", G.error}}));
    double sup = 0.0;
    std::vector<double> xi(K);
    const int points = 10000;
    for (int i = 0; i < points; ++i) {
        basis.evaluate(t_tail * i / (points - 1), xi);
        for (double v : xi) sup = std::max(sup, std::abs(v));
    }
    report.add(upper_check("sup_abs_xi", sup, 1.0 + 1e-12, {{"points", points}}));
    return report;
}

// ---- AC2
Report spectral_constants(const RunConfig& config) {
    Report report("suite spectral", config);
    const double trigamma = std::numbers::pi * std::numbers::pi / 2.0 - 4.0;
    for (int K : {32, 64}) {
        const basis::SpectralBasis basis(K);
        const auto d = basis::delta_norm_sq(basis, 0.0, 1.0);
        const double value = d.value + d.tail.estimate;
        report.add(upper_check("delta_norm_sq_vs_trigamma_K" + std::to_string(K), std::abs(value - trigamma), 1e-10,
                               {{"value", value}, {"trigamma", trigamma}, {"tail", d.tail.estimate}}));
        const auto s = basis::sup_delta_norm(basis, 1.0);
        const double T = basis::lifetime_bound(s.with_tail());
        const double exact = 1.0 / (4.0 * trigamma);
        report.add(upper_check("lifetime_p1_K" + std::to_string(K), std::abs(T - exact), 1e-6,
                               {{"T", T}, {"exact", exact}, {"T_truncated", basis::lifetime_bound(s.value)},
                                {"argmax", s.argmax}}));
    }
    return report;
}

// ---- AC3
chaos::ChaosExpansion random_element(std::mt19937_64& rng, int K, int degree, int cap) {
    std::uniform_int_distribution<int> coord(0, K - 1);
    std::uniform_int_distribution<int> deg(0, degree);
    std::uniform_int_distribution<int> count(1, 6);
    std::normal_distribution<double> normal;
    chaos::ChaosExpansion X(K, cap);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const int total = deg(rng);
        std::vector<chaos::MultiIndex::Entry> entries;
        for (int j = 0; j < total; ++j) entries.emplace_back(coord(rng), 1);
        X.add(chaos::MultiIndex(entries), normal(rng));
    }
    return X;
}

double max_coefficient(const chaos::ChaosExpansion& X) {
    double m = 0.0;
    for (const auto& [alpha, c] : X.terms()) m = std::max(m, std::abs(c));
    return m;
}

Report algebra_laws(const RunConfig& config) {
    Report report("suite algebra", config);
    std::mt19937_64 rng(seed_for(config, 3));
    std::uniform_int_distribution<int> dims(1, 8);
    std::uniform_real_distribution<double> exps(0.25, 3.0);
    const int instances = 200;
    const int cap = 12;
    std::map<std::string, double> worst;  // law -> worst relative error
    std::map<std::string, int> failures;
    auto record = [&](const std::string& law, const chaos::ChaosExpansion& a, const chaos::ChaosExpansion& b) {
        const double scale = std::max({1.0, max_coefficient(a), max_coefficient(b)});
        const double err = chaos::max_abs_difference(a, b) / scale;
        worst[law] = std::max(worst[law], err);
        if (err > 1e-12) ++failures[law];
    };
    for (int i = 0; i < instances; ++i) {
        const int K = dims(rng);
        const double p = exps(rng);
        const auto X = random_element(rng, K, 4, cap);
        const auto Y = random_element(rng, K, 4, cap);
        const auto Z = random_element(rng, K, 4, cap);
        using chaos::multiply, chaos::wick, chaos::star_p, chaos::gamma;
        auto star = [p](const chaos::ChaosExpansion& a, const chaos::ChaosExpansion& b) { return star_p(a, b, p); };
        record("mul_commutative", multiply(X, Y), multiply(Y, X));
        record("mul_associative", multiply(multiply(X, Y), Z), multiply(X, multiply(Y, Z)));
        record("mul_distributive", multiply(X, Y + Z), multiply(X, Y) + multiply(X, Z));
        record("wick_commutative", wick(X, Y), wick(Y, X));
        record("wick_associative", wick(wick(X, Y), Z), wick(X, wick(Y, Z)));
        record("wick_distributive", wick(X, Y + Z), wick(X, Y) + wick(X, Z));
        record("star_commutative", star(X, Y), star(Y, X));
        record("star_associative", star(star(X, Y), Z), star(X, star(Y, Z)));
        record("star_distributive", star(X, Y + Z), star(X, Y) + star(X, Z));
        record("gamma_wick_homomorphism", gamma(wick(X, Y), p), wick(gamma(X, p), gamma(Y, p)));
    }
    for (const auto& [law, err] : worst) {
        report.add(upper_check(law, err, 1e-12, {{"instances", instances}, {"failures", failures[law]}}));
    }
    return report;
}

// ---- AC4
Report star_limit(const RunConfig& config) {
    RunConfig c = config;
    c.K = 32;
    Workspace ws(c, 0.1);
    Report report("suite star-limit", config);
    const auto X = qwn::x_process(ws.cache(), 0.1, 4);
    const auto square = chaos::wick(X, X);
    const double base = chaos::norm(square, -2.0);
    const std::vector<double> ps{0.0, 1.0, 2.0, 4.0, 8.0};
    std::vector<double> ratios;
    for (double p : ps) ratios.push_back(chaos::norm(chaos::star_p(X, X, p) - square, -2.0) / base);
    bool decreasing = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) decreasing = decreasing && ratios[i] < ratios[i - 1];
    report.add(Check{"strictly_decreasing", decreasing ? 1.0 : 0.0, std::nullopt, std::nullopt, decreasing,
                     {{"p", ps}, {"ratio", ratios}}});
    report.add(upper_check("ratio_at_p8", ratios.back(), 1e-6));
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

// ---- AC5
Report ito_square_fixture(const RunConfig& config) {
    RunConfig c = config;
    c.K = 32;
    Workspace ws(c, 0.5);
    Report report("suite ito-square", config);
    for (double t : {0.05, 0.1, 0.5}) {
        for (double p : {0.0, 1.0, 2.0}) {
            const auto s = qwn::ito_square_check(ws.cache(), t, p, 4);
            const std::string tag = "t=" + std::to_string(t).substr(0, 4) + ",p=" + std::to_string(static_cast<int>(p));
            report.add(upper_check("coefficient_discrepancy_" + tag, s.discrepancy, 1e-8,
                                   {{"rhs_scale", s.rhs_scale}, {"constant", s.constant_rhs}}));
        }
    }
    // the constant 2 tr(M^2) against 2 int int K_p(r,s)^2 over [0,t]^2 by tensor Gauss-Legendre
    const double t = 0.1;
    const double p = 1.0;
    const auto s = qwn::ito_square_check(ws.cache(), t, p, 4);
    const double kernel_sq = quadrature::integrate(
        [&](double r) {
            return quadrature::integrate(
                [&](double u) {
                    const double k = basis::kernel_Kp(ws.basis(), r, u, p);
                    return k * k;
                },
                0.0, t, 4);
        },
        0.0, t, 4);
    report.add(upper_check("constant_vs_kernel_quadrature", std::abs(s.constant_rhs - 2.0 * kernel_sq), 1e-10,
                           {{"trace_form", s.constant_rhs}, {"kernel_form", 2.0 * kernel_sq}}));
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

// ---- AC6
Report ito_general_fixture(const RunConfig& config) {
    RunConfig c = config;
    c.K = 32;
    c.p = 1.5;
    c.N = scaled(config, 100000);
    c.seed = seed_for(config, 6);
    c.command = "ito general";
    c.params["phi"] = "cos";
    c.params["t"] = "0.1";
    c.params["f"] = R"({"bump":{"a":0.0,"b":0.2,"height":0.5}})";
    Report r = run_report(c);
    Report out("suite ito-general", c);
    out.add_all(r.checks());
    out.data() = r.data();
    return out;
}

// ---- AC7
Report sde_fixture(const RunConfig& config) {
    const int K = 32;
    const double p = 1.5;
    RunConfig c = config;
    c.K = K;
    const basis::SpectralBasis probe(K);
    const double T = sde::lifetime(probe, p);
    Workspace ws(c, T);
    Report report("suite sde", config);
    const auto f = TestFunction::from_bump({0.0, 0.3, 0.5}, K);
    const mc::PathEnsemble ensemble(scaled(config, 100000), K, seed_for(config, 7));
    const double sig = config.tol.mc_sigma;
    for (const std::string b : {"zero", "id", "tanh:0.5"}) {
        sde::Problem pr{sde::DriftSpec::parse(b), 1.0, p, 0.5 * T, f};
        report.add(Check{"drift_declared_constant_" + b, pr.drift.C, std::nullopt, std::nullopt, sde::check_drift(pr.drift)});
        const auto r = sde::verify_integral_identity(ws.cache(), pr, ensemble, 32);
        report.add(sigma_check("expectation_residual_" + b, r.residual, r.sigma, sig, 0.0,
                               {{"s_transform", r.s_transform}, {"drift_term", r.drift_term},
                                {"noise_term", r.noise_term}, {"sigma_paired", r.sigma_paired}}));
        report.add(upper_check("pathwise_residual_rk45_" + b, r.pathwise_max, 1e-8, {{"samples", r.pathwise_samples}}));
        report.add(upper_check("gronwall_violations_" + b, r.gronwall_violations, 0.0));
        sde::Problem late = pr;
        late.t = 0.8 * T;
        const auto a = sde::integrator_agreement(ws.cache(), late, ensemble.head(32));
        report.add(upper_check("rk4_vs_rk45_" + b, a.max_diff, 1e-6, {{"samples", a.samples}, {"t_end", a.t_end}}));
        const auto sol = sde::solve_paths(ws.cache(), late, ensemble.head(10000));
        report.add(upper_check("gronwall_violations_0.8T_" + b, sol.gronwall_violations, 0.0, {{"samples", 10000}}));
    }
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

// ---- AC8
Report adaptedness_fixture(const RunConfig& config) {
    const int K = 64;
    const double p = 1.5;
    RunConfig c = config;
    c.K = K;
    const basis::SpectralBasis probe(K);
    const double t = 0.5 * sde::lifetime(probe, p);
    Workspace ws(c, t);
    Report report("suite adaptedness", config);
    const auto f = TestFunction::from_bump({0.0, 0.3, 0.5}, K);
    const sde::Problem pr{sde::DriftSpec::parse("tanh:0.5"), 1.0, p, t, f};
    const mc::PathEnsemble ensemble(scaled(config, 20000), K, seed_for(config, 8));
    const double sig = config.tol.mc_sigma;
    const auto late = TestFunction::from_bump({t + 0.1, t + 0.6, 1.0}, K);
    const auto r = sde::adaptedness_check(ws.cache(), pr, late, ensemble);
    report.add(sigma_check("late_g_difference", r.difference, r.sigma, sig, r.leakage,
                           {{"leakage", r.leakage}, {"g_mass_on_window", r.g_mass_on_window},
                            {"within_3sigma_alone", !r.exceeds_3sigma}, {"truncation_mass", late.truncation_mass()}}));
    const auto early = TestFunction::from_bump({0.05, 0.25, 1.0}, K);
    const auto n = sde::adaptedness_check(ws.cache(), pr, early, ensemble);
    report.add(Check{"negative_control_exceeds_3sigma", std::abs(n.difference), sig * n.sigma, n.sigma, n.exceeds_3sigma,
                     {{"difference", n.difference}}});
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

// ---- AC9
Report lifetime_fixture(const RunConfig& config) {
    RunConfig c = config;
    c.K = 32;
    Workspace ws(c, 4.0);
    Report report("suite lifetime", config);
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const auto l = sde::lifetime_threshold(ws.cache(), p);
        report.add(Check{"T_le_t_star_p=" + std::to_string(p).substr(0, 3), l.T, l.t_star, std::nullopt, l.pass,
                         {{"T_untruncated", l.T_untruncated}, {"lambda_max_limit", l.lambda_max_limit},
                          {"t_star_finite", std::isfinite(l.t_star)}}});
    }
    const double p = 1.0;
    const auto l = sde::lifetime_threshold(ws.cache(), p);
    const mc::PathEnsemble ensemble(scaled(config, 100000), c.K, seed_for(config, 9));
    auto study_json = [](const sde::MomentStudy& m) {
        return nlohmann::json{{"t", m.t}, {"tail_index", m.tail_index}, {"hill_index", m.hill_index},
                              {"hill_error", m.hill_error}, {"sizes", m.sizes}, {"means", m.means}, {"errors", m.errors},
                              {"closed_form", m.closed_form ? nlohmann::json(*m.closed_form) : nlohmann::json(nullptr)}};
    };
    const auto inside = sde::moment_study(ws.cache(), p, 0.8 * l.T, ensemble);
    report.add(Check{"moment_bounded_at_0.8T", inside.hill_index - 2.0 * inside.hill_error, 1.0, inside.hill_error,
                     inside.finite_mean && inside.closed_form.has_value(), study_json(inside)});
    if (inside.closed_form) {
        report.add(sigma_check("moment_mc_vs_closed_form_0.8T", inside.means.back() - *inside.closed_form,
                               inside.errors.back(), config.tol.mc_sigma));
    }
    const auto beyond = sde::moment_study(ws.cache(), p, 2.0 * l.t_star, ensemble);
    report.add(Check{"moment_divergent_beyond_t_star", beyond.hill_index + 2.0 * beyond.hill_error, 1.0, beyond.hill_error,
                     beyond.infinite_mean && !beyond.closed_form.has_value(), study_json(beyond)});
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

// ---- AC10
Report linear_fixture(const RunConfig& config) {
    const int K = 32;
    const double p = 1.5;
    RunConfig c = config;
    c.K = K;
    const basis::SpectralBasis probe(K);
    const double T = sde::lifetime(probe, p);
    Workspace ws(c, T);
    Report report("suite linear", config);
    const mc::PathEnsemble ensemble(scaled(config, 40000), K, seed_for(config, 10));
    std::mt19937_64 rng(seed_for(config, 11));
    std::normal_distribution<double> normal(0.0, 0.3);
    auto random_f = [&] {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(K);
        for (int k = 0; k < 4; ++k) v[k] = normal(rng);
        return TestFunction(v);
    };
    const double t = 0.5 * T;
    for (int j = 0; j < 10; ++j) {
        sde::Problem pr{sde::DriftSpec::parse("id"), 1.0, p, t, random_f()};
        const auto cf = sde::closed_form_linear(ws.cache(), 1.0, p, t, *pr.f);
        const auto s = sde::s_transform_solution(ws.cache(), pr, ensemble);
        report.add(sigma_check("closed_form_vs_mc_f" + std::to_string(j), s.value - cf.real(), s.std_error,
                               config.tol.mc_sigma, 0.0, {{"closed_form", cf.real()}, {"mc", s.value}}));
    }
    std::vector<TestFunction> family;
    for (int j = 0; j < 8; ++j) family.push_back(random_f());
    for (double frac : {0.25, 0.5, 0.9}) {
        const auto r = sde::positivity_certificate(ws.cache(), 1.0, p, frac * T, family);
        report.add(Check{"positivity_min_eigenvalue_" + std::to_string(frac).substr(0, 4) + "T", r.min_eigenvalue,
                         -1e-8 * r.norm, std::nullopt, r.pass, {{"norm", r.norm}, {"max_imag", r.max_imag}}});
    }
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

// ---- AC11
Report renorm_fixture(const RunConfig& config) {
    Report report("suite renorm", config);
    const int K = 8;
    const auto cosine = ScalarFunction::parse("cos");
    Eigen::VectorXd h = Eigen::VectorXd::Zero(K);
    h[0] = 0.7;
    h[1] = 0.3;
    const auto prop = renorm::proposition_check(cosine, h, 1.5, 10);
    report.add(upper_check("proposition_discrepancy", prop.discrepancy, 1e-8, {{"variance", prop.variance}}));
    report.add(upper_check("proposition_kuo_residual", prop.kuo_residual, renorm::kKuoTolerance));
    const auto heat = renorm::heat_semigroup_coeffs(cosine, 0.5, 10, 0, std::numeric_limits<double>::infinity());
    report.add(upper_check("kuo_residual_cos_t0.5", heat.kuo_residual, renorm::kKuoTolerance));

    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(K);
    e0[0] = 1.0;
    const auto sine = ScalarFunction::parse("sin");
    double previous = -1.0;
    bool monotone = true;
    std::vector<double> lhs;
    for (double p : {0.0, 0.5, 1.0, 2.0}) {
        const auto r = renorm::error_bound_check(sine, e0, p);
        report.add(Check{"error_bound_sin_p=" + std::to_string(p).substr(0, 3), r.lhs, r.rhs, std::nullopt, r.pass,
                         {{"C", r.constant}, {"vacuous", r.vacuous}}});
        monotone = monotone && r.lhs >= previous;
        previous = r.lhs;
        lhs.push_back(r.lhs);
    }
    report.add(Check{"error_lhs_monotone_in_p", monotone ? 1.0 : 0.0, std::nullopt, std::nullopt, monotone, {{"lhs", lhs}}});
    const auto linear = renorm::error_bound_check(ScalarFunction::parse("poly:1,2"), h, 1.0);
    report.add(upper_check("error_linear_phi_zero", linear.lhs, 1e-12));
    return report;
}

}  // namespace

const std::vector<SuiteCheck>& suite_checks() {
    static const std::vector<SuiteCheck> checks{
        {"basis", "AC1", "basis fidelity", 30.0, basis_fidelity},
        {"spectral", "AC2", "spectral constants", 60.0, spectral_constants},
        {"algebra", "AC3", "algebra laws", 60.0, algebra_laws},
        {"star-limit", "AC4", "star_p to Wick limit", 60.0, star_limit},
        {"ito-square", "AC5", "Ito formula for x^2", 60.0, ito_square_fixture},
        {"ito-general", "AC6", "Ito formula for general phi", 180.0, ito_general_fixture},
        {"sde", "AC7", "SDE contract", 300.0, sde_fixture},
        {"adaptedness", "AC8", "adaptedness", 300.0, adaptedness_fixture},
        {"lifetime", "AC9", "life time and moments", 120.0, lifetime_fixture},
        {"linear", "AC10", "linear example and positivity", 300.0, linear_fixture},
        {"renorm", "AC11", "first-chaos renormalization", 60.0, renorm_fixture},
    };
    return checks;
}

std::vector<std::string> select_checks(bool all, const std::vector<std::string>& only) {
    std::vector<std::string> names;
    for (const auto& c : suite_checks()) names.push_back(c.name);
    if (all || only.empty()) return names;
    std::vector<std::string> chosen;
    for (const auto& n : only) {
        if (std::find(names.begin(), names.end(), n) == names.end()) {
            std::string msg = "unknown check '" + n + "'; valid checks:";
            for (const auto& v : names) msg += " " + v;
            throw ConfigError(msg);
        }
        chosen.push_back(n);
    }
    return chosen;
}

bool SuiteResult::pass() const {
    for (const auto& r : reports) {
        if (!r.pass()) return false;
    }
    return !reports.empty();
}

nlohmann::json SuiteResult::to_json() const {
    nlohmann::json j;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : reports) list.push_back(r.to_json());
    j["reports"] = std::move(list);
    j["pass"] = pass();
    return j;
}

SuiteResult run_suite(const std::vector<std::string>& names, const RunConfig& config,
                      const std::function<void(const SuiteCheck&, const Report&, double)>& progress) {
    config.validate();
    SuiteResult result;
    for (const auto& name : names) {
        const auto it = std::find_if(suite_checks().begin(), suite_checks().end(),
                                     [&](const SuiteCheck& c) { return c.name == name; });
        if (it == suite_checks().end()) throw ConfigError("unknown check '" + name + "'");
        const auto start = std::chrono::steady_clock::now();
        Report report("suite " + name, config);
        try {
            report = it->run(config);
        } catch (const std::exception& e) {
            report.fail(name, e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (progress) progress(*it, report, seconds);
        result.reports.push_back(std::move(report));
        result.seconds.push_back(seconds);
    }
    return result;
}

}  // namespace wickforge::app

#include "wickforge/app/commands.hpp"

#include "wickforge/chaos.hpp"
#include "wickforge/ensemble.hpp"
#include "wickforge/functions.hpp"
#include "wickforge/phi_tilde.hpp"
#include "wickforge/qwn.hpp"
#include "wickforge/renorm.hpp"
#include "wickforge/sde.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace wickforge::app {

namespace {

gram::TimeGrid covering_grid(const RunConfig& config, double t_needed) {
    gram::TimeGrid grid = gram::TimeGrid::parse(config.grid);
    if (t_needed > grid.t_end) {
        const double step = grid.step();
        grid.intervals = static_cast<int>(std::ceil(t_needed / step - 1e-9));
        grid.t_end = grid.intervals * step;
    }
    return grid;
}

std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

sde::Problem sde_problem(const RunConfig& config, int K, double T) {
    sde::Problem pr;
    pr.drift = sde::DriftSpec::parse(config.text("b", "zero"));
    pr.x0 = config.number("x0", 1.0);
    pr.p = config.p;
    pr.t = config.has("t") ? config.number("t") : config.number("t_frac", 0.5) * T;
    if (config.has("testfn")) pr.f = test_function_argument(config.text("testfn", ""), K);
    pr.allow_beyond_T = config.flag("allow_beyond_T");
    pr.allow_low_p = config.flag("allow_low_p");
    return pr;
}

nlohmann::json problem_json(const sde::Problem& pr, double T) {
    return {{"b", pr.drift.name}, {"C", pr.drift.C}, {"x0", pr.x0}, {"p", pr.p}, {"t", pr.t}, {"T", T},
            {"f", pr.f ? pr.f->to_json() : nlohmann::json(nullptr)}};
}

void write_paths(const sde::Solution& sol, const std::string& path) {
    if (path.empty() || sol.V_paths.rows() == 0) return;
    std::ostringstream os;
    os << "# t";
    for (Eigen::Index i = 0; i < sol.V_paths.rows(); ++i) os << " V" << i << " zeta" << i;
    os << "\n";
    for (std::size_t g = 0; g < sol.grid.size(); ++g) {
        os << csv_number(sol.grid[g]);
        for (Eigen::Index i = 0; i < sol.V_paths.rows(); ++i) {
            os << ' ' << csv_number(sol.V_paths(i, static_cast<Eigen::Index>(g))) << ' '
               << csv_number(sol.zeta_paths(i, static_cast<Eigen::Index>(g)));
        }
        os << "\n";
    }
    write_text(os.str(), path);
}

Eigen::VectorXd coefficient_vector(const nlohmann::json& j, int K) {
    return test_function_argument(j.dump(), K).coeffs();
}

Report ito_square(const RunConfig& config) {
    const double t = config.number("t");
    Workspace ws(config, t);
    Report report("ito square", config);
    const auto check = qwn::ito_square_check(ws.cache(), t, config.p, config.D_max);
    const double scale = std::max(1.0, check.rhs_scale);
    report.add(upper_check("coefficient_discrepancy", check.discrepancy, config.tol.coeff_tol * scale,
                           {{"constant_lhs", check.constant_lhs}, {"constant_rhs", check.constant_rhs}}));
    report.data()["difference"] = chaos::to_json(check.lhs);
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

Report ito_general(const RunConfig& config) {
    config.require({"t", "f"});
    const double t = config.number("t");
    Workspace ws(config, t);
    const auto phi = ScalarFunction::parse(config.text("phi", "cos"));
    const auto f = test_function_argument(config.text("f", ""), config.K);
    const mc::PathEnsemble ensemble(config.N, config.K, config.seed);
    const auto r = qwn::ito_formula_check(phi, ws.cache(), config.p, t, f, ensemble);
    Report report("ito general", config);
    const double sig = config.tol.mc_sigma;
    report.add(sigma_check("ito_identity", r.diff, r.mc_stderr + r.quad_bound, sig, 0.0,
                           {{"lhs", r.lhs}, {"rhs", r.rhs}, {"mc_stderr", r.mc_stderr}, {"quad_bound", r.quad_bound}}));
    for (const auto& p : r.fd) {
        report.add(sigma_check("fd_derivative_s=" + csv_number(p.s), p.derivative - p.fd, p.sigma, sig, sig * p.fd_bound,
                               {{"derivative", p.derivative}, {"fd", p.fd}, {"direct", p.direct}, {"fd_bound", p.fd_bound},
                                {"A", p.a}, {"B", p.b}, {"C", p.c}}));
    }
    report.data() = {{"lhs", r.lhs}, {"rhs", r.rhs}, {"diff", r.diff}, {"mc_stderr", r.mc_stderr},
                     {"quad_bound", r.quad_bound}};
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

Report sde_command(const RunConfig& config, const std::string& sub) {
    const basis::SpectralBasis probe(config.K);
    const double T = sde::lifetime(probe, config.p);
    Report report("sde " + sub, config);
    const double sig = config.tol.mc_sigma;

    if (sub == "lifetime") {
        const double p = config.p;
        Workspace ws(config, config.number("t_max", 4.0));
        const auto l = sde::lifetime_threshold(ws.cache(), p);
        report.add(upper_check("T_below_t_star", l.T, l.t_star,
                               {{"sup", l.sup}, {"sup_with_tail", l.sup_with_tail}, {"T_untruncated", l.T_untruncated},
                                {"lambda_max_limit", l.lambda_max_limit}}));
        report.data() = {{"p", p}, {"T", l.T}, {"t_star", std::isfinite(l.t_star) ? nlohmann::json(l.t_star) : nlohmann::json("inf")}};
        report.set_cache(ws.cache(), ws.stats());
        return report;
    }

    const sde::Problem pr = sde_problem(config, config.K, T);
    Workspace ws(config, pr.t);
    const mc::PathEnsemble ensemble(config.N, config.K, config.seed);
    report.data()["problem"] = problem_json(pr, T);

    if (sub == "solve") {
        sde::SolverConfig sc;
        sc.method = config.text("method", "rk4") == "rk45" ? sde::Method::RK45 : sde::Method::RK4;
        sc.step = config.number("step", 1e-3);
        sc.record = config.integer("record", 0);
        sc.output_points = config.integer("output_points", 0);
        const auto sol = sde::solve_paths(ws.cache(), pr, ensemble, sc);
        std::vector<double> U;
        for (const auto& s : sol.samples) U.push_back(s.U);
        const auto e = mc::estimate(U);
        Check value{"s_transform", e.mean, std::nullopt, e.std_error, true, {}};
        report.add(value);
        report.add(upper_check("gronwall_violations", sol.gronwall_violations, 0.0));
        report.add(upper_check("zeta_crosscheck", sol.zeta_crosscheck, 1e-8));
        report.data()["beyond_T"] = sol.beyond_T;
        report.data()["mean_steps"] = sol.mean_steps;
        write_paths(sol, config.text("paths", ""));
    } else if (sub == "verify") {
        const auto r = sde::verify_integral_identity(ws.cache(), pr, ensemble, config.integer("pathwise", 32));
        report.add(sigma_check("expectation_residual", r.residual, r.sigma, sig, 0.0,
                               {{"s_transform", r.s_transform}, {"drift_term", r.drift_term},
                                {"noise_term", r.noise_term}, {"sigma_paired", r.sigma_paired}}));
        report.add(upper_check("pathwise_residual", r.pathwise_max, 1e-8, {{"samples", r.pathwise_samples}}));
        report.add(upper_check("gronwall_violations", r.gronwall_violations, 0.0));
    } else if (sub == "adapted") {
        config.require({"g"});
        const auto g = test_function_argument(config.text("g", ""), config.K);
        const auto r = sde::adaptedness_check(ws.cache(), pr, g, ensemble);
        report.add(sigma_check("paired_difference", r.difference, r.sigma, sig, r.leakage,
                               {{"leakage", r.leakage}, {"g_mass_on_window", r.g_mass_on_window},
                                {"exceeds_3sigma", r.exceeds_3sigma}}));
    } else if (sub == "linear") {
        if (!pr.f) throw ConfigError("missing required field: testfn");
        const double beta = pr.drift.linear.value_or(std::nan(""));
        if (!std::isfinite(beta)) throw ConfigError("sde linear needs b=zero or b=id");
        const auto cf = sde::closed_form_linear(ws.cache(), pr.x0, pr.p, pr.t, *pr.f, 1.0, beta);
        const auto s = sde::s_transform_solution(ws.cache(), pr, ensemble);
        report.add(sigma_check("closed_form_vs_mc", s.value - cf.real(), s.std_error, sig, 0.0,
                               {{"closed_form", cf.real()}, {"mc", s.value}, {"cv", s.cv}, {"variance_flag", s.variance_flag}}));
    } else if (sub == "positivity") {
        const int n = config.integer("n", 8);
        std::mt19937_64 rng(config.seed);
        std::normal_distribution<double> normal(0.0, config.number("scale", 0.3));
        std::vector<TestFunction> family;
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(config.K);
            for (int k = 0; k < std::min(4, config.K); ++k) c[k] = normal(rng);
            family.emplace_back(c);
        }
        const double beta = pr.drift.linear.value_or(1.0);
        const auto r = sde::positivity_certificate(ws.cache(), pr.x0, pr.p, pr.t, family, beta);
        report.add(Check{"min_eigenvalue", r.min_eigenvalue, -1e-8 * r.norm, std::nullopt, r.pass,
                         {{"norm", r.norm}, {"max_imag", r.max_imag}}});
    } else {
        throw ConfigError("unknown sde subcommand '" + sub + "'");
    }
    report.set_cache(ws.cache(), ws.stats());
    return report;
}

Report renorm_command(const RunConfig& config, const std::string& sub) {
    config.require({"h"});
    const auto phi = ScalarFunction::parse(config.text("phi", "cos"));
    const Eigen::VectorXd h = coefficient_vector(json_argument(config.text("h", "")), config.K);
    const int D = config.integer("degree", 10);
    Report report("renorm " + sub, config);
    if (sub == "prop") {
        const auto r = renorm::proposition_check(phi, h, config.p, D);
        report.add(upper_check("coefficient_discrepancy", r.discrepancy, 1e-8, {{"variance", r.variance}, {"order", r.order}}));
        report.add(upper_check("kuo_residual", r.kuo_residual, renorm::kKuoTolerance));
        report.data()["lhs"] = chaos::to_json(r.lhs);
    } else if (sub == "bound") {
        const auto r = renorm::error_bound_check(phi, h, config.p, D);
        nlohmann::json sweep = nlohmann::json::array();
        for (const auto& s : r.sweep) sweep.push_back({{"tau", s.tau}, {"C", s.constant}, {"bound", s.bound}});
        Check c{"error_bound", r.lhs, r.rhs, std::nullopt, r.pass,
                {{"h_norm_sq", r.h_norm_sq}, {"smoothed_norm_sq", r.smoothed_norm_sq}, {"C", r.constant},
                 {"sup_phi2", r.sup_second_derivative}, {"vacuous", r.vacuous}, {"sweep", sweep}}};
        report.add(c);
    } else {
        throw ConfigError("unknown renorm subcommand '" + sub + "'");
    }
    return report;
}

}  // namespace

Workspace::Workspace(const RunConfig& config, double t_needed, std::optional<int> K)
    : basis_(K.value_or(config.K)) {
    gram::GramSettings settings;
    settings.tolerance = config.tol.quad_tol;
    const auto grid = covering_grid(config, t_needed);
    if (config.cache_dir.empty()) {
        ++stats_.misses;
        cache_.emplace(basis_, grid, settings);
    } else {
        std::filesystem::create_directories(config.cache_dir);
        cache_.emplace(gram::GramCache::load_or_build(config.cache_dir, basis_, grid, settings, &stats_));
    }
}

nlohmann::json json_argument(const std::string& value) {
    const auto first = value.find_first_not_of(" \t\r\n");
    try {
        if (first != std::string::npos && (value[first] == '{' || value[first] == '[')) {
            return nlohmann::json::parse(value);
        }
        std::ifstream in(value);
        if (!in) throw ConfigError("cannot read JSON file '" + value + "'");
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad JSON in '" + value + "': " + e.what());
    }
}

TestFunction test_function_argument(const std::string& value, int K) {
    const auto j = json_argument(value);
    if (j.is_array()) return TestFunction::from_json({{"coeffs", j}}, K);
    return TestFunction::from_json(j, K);
}

std::string basis_csv(const RunConfig& config) {
    const std::string sub = config.command.substr(config.command.find(' ') + 1);
    const basis::SpectralBasis basis(config.K);
    const auto grid = gram::TimeGrid::parse(config.grid);
    const double p = config.p;
    std::ostringstream os;
    if (sub == "table") {
        const int k = config.integer("k", 0);
        if (k < 0 || k >= config.K) throw ConfigError("k must be in [0, K)");
        os << "t,xi_k,delta_norm_sq,delta_norm_sq_upper\n";
        for (int m = 0; m < grid.size(); ++m) {
            const double t = grid.node(m);
            const auto d = basis::delta_norm_sq(basis, t, p);
            os << csv_number(t) << ',' << csv_number(basis::laguerre_eval(k, t)) << ',' << csv_number(d.value) << ','
               << csv_number(d.upper()) << "\n";
        }
    } else if (sub == "kernel") {
        os << "r,s,K_p\n";
        for (int a = 0; a < grid.size(); ++a) {
            for (int b = 0; b < grid.size(); ++b) {
                os << csv_number(grid.node(a)) << ',' << csv_number(grid.node(b)) << ','
                   << csv_number(basis::kernel_Kp(basis, grid.node(a), grid.node(b), p)) << "\n";
            }
            os << "\n";  // blank line between scan lines for gnuplot
        }
    } else if (sub == "sup") {
        const auto s = basis::sup_delta_norm(basis, p, {grid.t_end, grid.size()});
        os << "p,sup,argmax,sup_with_tail,T,T_untruncated\n";
        os << csv_number(p) << ',' << csv_number(s.value) << ',' << csv_number(s.argmax) << ','
           << csv_number(s.with_tail()) << ',' << csv_number(basis::lifetime_bound(s.value)) << ','
           << csv_number(basis::lifetime_bound(s.with_tail())) << "\n";
    } else {
        throw ConfigError("unknown basis subcommand '" + sub + "' (expected table, kernel or sup)");
    }
    return os.str();
}

nlohmann::json chaos_op(const RunConfig& config) {
    config.require({"op", "lhs"});
    const std::string op = config.text("op", "");
    const auto X = chaos::chaos_from_json(json_argument(config.text("lhs", "")));
    auto rhs = [&] {
        config.require({"rhs"});
        return chaos::chaos_from_json(json_argument(config.text("rhs", "")));
    };
    chaos::ChaosExpansion out(X.dimension());
    if (op == "wick") out = chaos::wick(X, rhs());
    else if (op == "mul") out = chaos::multiply(X, rhs());
    else if (op == "star") out = chaos::star_p(X, rhs(), config.p);
    else if (op == "add") out = X + rhs();
    else if (op == "sub") out = X - rhs();
    else if (op == "gamma") out = chaos::gamma(X, config.p);
    else if (op == "phi") {
        chaos::Projection proj;
        proj.degree = config.D_max;
        const mc::PathEnsemble ensemble(X.degree() > 1 ? config.N : 1, X.dimension(), config.seed);
        proj.ensemble = &ensemble;
        if (config.has("growth")) proj.growth_bound = config.number("growth");
        const auto r = chaos::phi_tilde(ScalarFunction::parse(config.text("phi", "cos")), X, config.p, proj);
        return {{"value", chaos::to_json(r.value)}, {"stderr", chaos::to_json(r.std_error)}, {"method", r.method}};
    } else {
        throw ConfigError("unknown chaos op '" + op + "' (expected wick, mul, star, add, sub, gamma or phi)");
    }
    nlohmann::json j = chaos::to_json(out);
    j["expectation"] = chaos::expectation(out);
    return j;
}

const std::vector<std::string>& report_commands() {
    static const std::vector<std::string> names{
        "ito square", "ito general", "sde solve", "sde verify", "sde adapted", "sde lifetime",
        "sde linear", "sde positivity", "renorm prop", "renorm bound"};
    return names;
}

Report run_report(const RunConfig& config) {
    if (config.command.empty()) {
        std::string msg = "missing required field: command (one of";
        for (const auto& n : report_commands()) msg += " '" + n + "'";
        throw ConfigError(msg + ")");
    }
    config.validate();
    const auto space = config.command.find(' ');
    const std::string group = config.command.substr(0, space);
    const std::string sub = space == std::string::npos ? "" : config.command.substr(space + 1);
    if (config.command == "ito square") return ito_square(config);
    if (config.command == "ito general") return ito_general(config);
    if (group == "sde") return sde_command(config, sub);
    if (group == "renorm") return renorm_command(config, sub);
    std::string msg = "unknown command '" + config.command + "'; expected one of:";
    for (const auto& n : report_commands()) msg += " '" + n + "'";
    throw ConfigError(msg);
}

}  // namespace wickforge::app

#include "wickforge/app/commands.hpp"
#include "wickforge/app/config.hpp"
#include "wickforge/app/report.hpp"
#include "wickforge/app/suite.hpp"
#include "wickforge/ensemble.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iostream>
#include <map>

using namespace wickforge;

namespace {

struct Options {
    std::map<std::string, std::string> raw;
    std::vector<std::pair<CLI::Option*, std::string>> bound;

    void add(CLI::App* app, const std::string& flags, const std::string& key, const std::string& help) {
        bound.emplace_back(app->add_option(flags, raw[key], help), key);
    }
    void add_flag(CLI::App* app, const std::string& flags, const std::string& key, const std::string& help) {
        raw[key] = "true";
        bound.emplace_back(app->add_flag(flags, help), key);
    }
    void apply(app::RunConfig& config) const {
        for (const auto& [opt, key] : bound) {
            if (opt->count() > 0) config.params[key] = raw.at(key);
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"wick-forge: renormalized white-noise calculus on a truncated Laguerre/Hermite basis"};
    cli.require_subcommand(1);
    cli.fallthrough();

    app::RunConfig config;
    std::string out = "-";
    std::string config_file;
    double p = config.p;
    cli.add_option("--K", config.K, "number of Laguerre functions")->capture_default_str();
    cli.add_option("--D", config.D_max, "chaos degree cap")->capture_default_str();
    cli.add_option("--seed", config.seed, "master seed")->capture_default_str();
    cli.add_option("--threads", config.threads, "worker threads")->capture_default_str();
    cli.add_option("--cache-dir", config.cache_dir, "directory for persisted Gram tables");
    cli.add_option("--out", out, "output file, - for stdout")->capture_default_str();
    cli.add_option("--grid", config.grid, "time grid <t_end>:<intervals>")->capture_default_str();
    cli.add_option("--samples,--N", config.N, "Monte Carlo sample count")->capture_default_str();
    auto* p_opt = cli.add_option("--p", p, "renormalization exponent")->capture_default_str();
    (void)p_opt;

    Options opts;

    auto* basis = cli.add_subcommand("basis", "basis tables as CSV");
    basis->require_subcommand(1);
    opts.add(basis, "--k", "k", "Laguerre index for the table");
    for (const char* s : {"table", "kernel", "sup"}) basis->add_subcommand(s);

    auto* chaos = cli.add_subcommand("chaos", "chaos algebra operations");
    chaos->require_subcommand(1);
    chaos->add_subcommand("op", "binary or unary operation on JSON expansions");
    opts.add(chaos, "--op", "op", "wick|mul|star|add|sub|gamma|phi");
    opts.add(chaos, "--lhs", "lhs", "left operand (JSON file or inline)");
    opts.add(chaos, "--rhs", "rhs", "right operand (JSON file or inline)");
    opts.add(chaos, "--phi", "phi", "function for op=phi");
    opts.add(chaos, "--growth", "growth", "declared growth bound for unbounded phi");

    auto* ito = cli.add_subcommand("ito", "Ito-type formula checks");
    ito->require_subcommand(1);
    for (const char* s : {"square", "general"}) ito->add_subcommand(s);
    opts.add(ito, "--t", "t", "time");
    opts.add(ito, "--phi", "phi", "cos|sin|tanh|id|square|poly:<c0,c1,...>");
    opts.add(ito, "--f", "f", "test function (JSON file or inline)");

    auto* sde = cli.add_subcommand("sde", "the quadratic white noise equation");
    sde->require_subcommand(1);
    for (const char* s : {"solve", "verify", "adapted", "lifetime", "linear", "positivity"}) sde->add_subcommand(s);
    opts.add(sde, "--b", "b", "drift: zero|id|tanh|tanh:<s>");
    opts.add(sde, "--x0", "x0", "initial value");
    opts.add(sde, "--t", "t", "time");
    opts.add(sde, "--t-frac", "t_frac", "time as a fraction of the life time T");
    opts.add(sde, "--testfn", "testfn", "test function f (JSON file or inline)");
    opts.add(sde, "--g", "g", "late-supported function for adapted");
    opts.add(sde, "--method", "method", "rk4|rk45");
    opts.add(sde, "--step", "step", "RK4 step");
    opts.add(sde, "--record", "record", "number of sample paths to keep");
    opts.add(sde, "--output-points", "output_points", "output grid size");
    opts.add(sde, "--paths", "paths", "write recorded paths (gnuplot columns) here");
    opts.add(sde, "--pathwise", "pathwise", "RK45 samples for the pathwise residual");
    opts.add(sde, "--n", "n", "family size for positivity");
    opts.add(sde, "--t-max", "t_max", "search range for lifetime");
    opts.add_flag(sde, "--allow-beyond-T", "allow_beyond_T", "integrate past the life time");
    opts.add_flag(sde, "--allow-low-p", "allow_low_p", "permit 1/2 < p <= 1");

    auto* renorm = cli.add_subcommand("renorm", "first-chaos renormalization");
    renorm->require_subcommand(1);
    renorm->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
    for (const char* s : {"prop", "bound"}) renorm->add_subcommand(s);
    opts.add(renorm, "--phi", "phi", "scalar function");
    opts.add(renorm, "--h", "h", "coefficients of h (JSON file or inline)");
    opts.add(renorm, "--degree", "degree", "truncation degree D");

    auto* run = cli.add_subcommand("run", "run a key=value or JSON config file");
    run->add_option("config", config_file, "config file")->required();

    auto* suite = cli.add_subcommand("suite", "acceptance fixtures");
    bool all = false;
    std::vector<std::string> only;
    suite->add_flag("--all", all, "run every check");
    suite->add_option("--only", only, "run the named checks")->delimiter(',');
    opts.add(suite, "--mc-scale", "mc_scale", "scale factor for Monte Carlo sample counts");

    CLI11_PARSE(cli, argc, argv);

    try {
        if (p_opt->count() > 0) config.p = p;
        opts.apply(config);
        mc::set_threads(config.threads);
        const auto start = std::chrono::steady_clock::now();
        auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        };

        auto* group = cli.get_subcommands().front();
        if (group == run) {
            const auto loaded = app::RunConfig::load(config_file);
            auto merged = loaded;
            merged.threads = config.threads;
            mc::set_threads(merged.threads);
            const auto report = app::run_report(merged);
            report.write(out);
            std::cerr << "elapsed " << elapsed() << " s\n";
            return report.pass() ? 0 : 1;
        }
        if (group == suite) {
            const auto names = app::select_checks(all, only);
            const auto result = app::run_suite(names, config, [](const app::SuiteCheck& c, const app::Report& r, double s) {
                std::cerr << c.criterion << ' ' << c.name << ": " << (r.pass() ? "PASS" : "FAIL") << " (" << s << " s)\n";
            });
            app::write_json(result.to_json(), out);
            return result.pass() ? 0 : 1;
        }
        const auto* sub = group->get_subcommands().front();
        config.command = group->get_name() + " " + sub->get_name();
        if (group == basis) {
            app::write_text(app::basis_csv(config), out);
            return 0;
        }
        if (group == chaos) {
            app::write_json(app::chaos_op(config), out);
            return 0;
        }
        const auto report = app::run_report(config);
        report.write(out);
        std::cerr << config.command << ": " << (report.pass() ? "PASS" : "FAIL") << " (" << elapsed() << " s)\n";
        return report.pass() ? 0 : 1;
    } catch (const app::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

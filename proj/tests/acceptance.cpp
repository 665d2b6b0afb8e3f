// One line per acceptance criterion; exit status 1 when any is red.

#include "wickforge/app/suite.hpp"
#include "wickforge/ensemble.hpp"

#include <cstdio>
#include <string>

using namespace wickforge;

int main() {
    app::RunConfig config;
    config.seed = 42;
    mc::set_threads(1);
    const auto names = app::select_checks(true, {});
    bool all = true;
    app::run_suite(names, config, [&](const app::SuiteCheck& check, const app::Report& report, double seconds) {
        int passed = 0;
        std::string first_red;
        for (const auto& c : report.checks()) {
            if (c.pass) {
                ++passed;
            } else if (first_red.empty()) {
                first_red = c.name;
                if (c.bound) first_red += " value " + std::to_string(c.value) + " bound " + std::to_string(*c.bound);
            }
        }
        const bool in_budget = seconds <= check.budget_seconds;
        const bool ok = report.pass() && in_budget;
        all = all && ok;
        std::printf("%s %s: %s (%d/%zu checks, %.1f s of %.0f s budget)%s%s\n", check.criterion.c_str(),
                    check.title.c_str(), ok ? "PASS" : "FAIL", passed, report.checks().size(), seconds,
                    check.budget_seconds, first_red.empty() ? "" : "; first red: ",
                    first_red.c_str());
        if (!in_budget) std::printf("    over the runtime budget\n");
        std::fflush(stdout);
    });
    return all ? 0 : 1;
}

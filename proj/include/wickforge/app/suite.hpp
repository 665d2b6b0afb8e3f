#pragma once

// The acceptance fixtures, one named check per criterion.

#include "wickforge/app/config.hpp"
#include "wickforge/app/report.hpp"

#include <functional>
#include <string>
#include <vector>

namespace wickforge::app {

struct SuiteCheck {
    std::string name;
    std::string criterion;  // "AC1" .. "AC11"
    std::string title;
    double budget_seconds;  // runtime budget stated for the criterion on a desktop
    std::function<Report(const RunConfig&)> run;
};

const std::vector<SuiteCheck>& suite_checks();

/// Validates names; throws ConfigError listing the valid ones on an unknown name.
std::vector<std::string> select_checks(bool all, const std::vector<std::string>& only);

struct SuiteResult {
    std::vector<Report> reports;
    std::vector<double> seconds;  // wall clock per check, kept out of to_json()
    bool pass() const;
    nlohmann::json to_json() const;
};

/// Runs every selected check; a failing or throwing check does not stop the rest.
SuiteResult run_suite(const std::vector<std::string>& names, const RunConfig& config,
                      const std::function<void(const SuiteCheck&, const Report&, double)>& progress = {});

}  // namespace wickforge::app

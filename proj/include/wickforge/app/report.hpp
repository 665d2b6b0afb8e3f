#pragma once

// Machine-readable run reports.  Wall-clock time is printed to stderr only, so
// equal configurations give byte-identical report files.

#include "wickforge/app/config.hpp"
#include "wickforge/gram_cache.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wickforge::app {

struct Check {
    std::string name;
    double value = 0.0;
    std::optional<double> bound;
    std::optional<double> std_error;
    bool pass = false;
    nlohmann::json detail = nlohmann::json::object();
};

/// value <= bound
Check upper_check(std::string name, double value, double bound, nlohmann::json detail = nlohmann::json::object());
/// |value| <= sigmas * std_error + slack
Check sigma_check(std::string name, double value, double std_error, double sigmas, double slack = 0.0,
                  nlohmann::json detail = nlohmann::json::object());

class Report {
public:
    Report(std::string command, const RunConfig& config);

    void add(Check check) { checks_.push_back(std::move(check)); }
    void add_all(std::vector<Check> checks);
    void set_cache(const gram::GramCache& cache, const gram::CacheStats& stats);
    void fail(const std::string& name, const std::string& message);
    nlohmann::json& data() { return data_; }

    const std::string& command() const { return command_; }
    const std::vector<Check>& checks() const { return checks_; }
    bool pass() const;

    nlohmann::json to_json() const;
    /// "-" or empty writes to stdout.
    void write(const std::string& path) const;

private:
    std::string command_;
    nlohmann::json config_;
    std::vector<Check> checks_;
    nlohmann::json data_ = nlohmann::json::object();
    nlohmann::json provenance_ = nlohmann::json::object();
};

/// Writes a JSON value to a file, or stdout for "-" or empty.
void write_json(const nlohmann::json& j, const std::string& path);
/// Writes text to a file, or stdout for "-" or empty.
void write_text(const std::string& text, const std::string& path);

}  // namespace wickforge::app

#pragma once

// Run configuration: flat key=value text or a flat JSON object.

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wickforge::app {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double quad_tol = 1e-12;
    double mc_sigma = 3.0;
    double coeff_tol = 1e-8;
};

struct RunConfig {
    std::string command;  // e.g. "ito square"
    int K = 32;
    int D_max = 4;
    double p = 1.5;
    std::string grid = "2:200";
    int N = 20000;
    std::uint64_t seed = 42;
    int threads = 1;
    Tolerances tol;
    std::string cache_dir;  // empty: build the Gram table in memory
    std::map<std::string, std::string> params;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_text(std::string_view text);  // key=value lines, '#' comments
    static RunConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return params.contains(key); }
    std::string text(const std::string& key, const std::string& fallback) const;
    double number(const std::string& key, double fallback) const;
    double number(const std::string& key) const;
    int integer(const std::string& key, int fallback) const;
    bool flag(const std::string& key) const;

    /// Throws ConfigError naming every missing key.
    void require(const std::vector<std::string>& keys) const;
    /// Field-level range checks on the core fields.
    void validate() const;
};

}  // namespace wickforge::app

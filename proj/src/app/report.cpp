#include "wickforge/app/report.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

namespace wickforge::app {

namespace {

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

Check upper_check(std::string name, double value, double bound, nlohmann::json detail) {
    Check c{std::move(name), value, bound, std::nullopt, value <= bound, std::move(detail)};
    return c;
}

Check sigma_check(std::string name, double value, double std_error, double sigmas, double slack,
                  nlohmann::json detail) {
    const double bound = sigmas * std_error + slack;
    Check c{std::move(name), value, bound, std_error, std::abs(value) <= bound, std::move(detail)};
    return c;
}

Report::Report(std::string command, const RunConfig& config)
    : command_(std::move(command)), config_(config.to_json()) {}

void Report::add_all(std::vector<Check> checks) {
    for (auto& c : checks) checks_.push_back(std::move(c));
}

void Report::set_cache(const gram::GramCache& cache, const gram::CacheStats& stats) {
    provenance_["gram_hash"] = cache.content_hash();
    provenance_["gram_grid"] = cache.grid().spec();
    provenance_["gram_K"] = cache.dimension();
    provenance_["gram_error_bound"] = cache.error_bound();
    provenance_["cache_hits"] = stats.hits;
    provenance_["cache_misses"] = stats.misses;
}

void Report::fail(const std::string& name, const std::string& message) {
    Check c;
    c.name = name;
    c.value = std::nan("");
    c.pass = false;
    c.detail = {{"error", message}};
    checks_.push_back(std::move(c));
}

bool Report::pass() const {
    if (checks_.empty()) return false;
    for (const auto& c : checks_) {
        if (!c.pass) return false;
    }
    return true;
}

nlohmann::json Report::to_json() const {
    nlohmann::json j;
    j["command"] = command_;
    j["config"] = config_;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : checks_) {
        nlohmann::json e;
        e["name"] = c.name;
        e["value"] = number(c.value);
        e["bound"] = c.bound ? number(*c.bound) : nlohmann::json(nullptr);
        e["stderr"] = c.std_error ? number(*c.std_error) : nlohmann::json(nullptr);
        e["pass"] = c.pass;
        if (!c.detail.empty()) e["detail"] = c.detail;
        checks.push_back(std::move(e));
    }
    j["checks"] = std::move(checks);
    j["pass"] = pass();
    if (!data_.empty()) j["data"] = data_;
    if (!provenance_.empty()) j["provenance"] = provenance_;
    return j;
}

void Report::write(const std::string& path) const { write_json(to_json(), path); }

void write_json(const nlohmann::json& j, const std::string& path) {
    write_text(j.dump(2) + "\n", path);
}

void write_text(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace wickforge::app

#include "wickforge/app/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wickforge::app {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw ConfigError(key + ": expected a number, got '" + value + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
    return v;
}

std::string as_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

void assign(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "command") c.command = value;
    else if (key == "K") c.K = static_cast<int>(parse_int(key, value));
    else if (key == "D_max" || key == "D") c.D_max = static_cast<int>(parse_int(key, value));
    else if (key == "p") c.p = parse_double(key, value);
    else if (key == "grid") c.grid = value;
    else if (key == "N") c.N = static_cast<int>(parse_int(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "threads") c.threads = static_cast<int>(parse_int(key, value));
    else if (key == "quad_tol") c.tol.quad_tol = parse_double(key, value);
    else if (key == "mc_sigma") c.tol.mc_sigma = parse_double(key, value);
    else if (key == "coeff_tol") c.tol.coeff_tol = parse_double(key, value);
    else if (key == "cache_dir") c.cache_dir = value;
    else c.params[key] = value;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["K"] = K;
    j["D_max"] = D_max;
    j["p"] = p;
    j["grid"] = grid;
    j["N"] = N;
    j["seed"] = seed;
    j["tolerances"] = {{"quad_tol", tol.quad_tol}, {"mc_sigma", tol.mc_sigma}, {"coeff_tol", tol.coeff_tol}};
    j["params"] = params;
    // threads and cache_dir change neither results nor the report
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config JSON must be an object");
    RunConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "tolerances" && value.is_object()) {
            for (const auto& [k, v] : value.items()) assign(c, k, as_string(v));
        } else if (key == "params" && value.is_object()) {
            for (const auto& [k, v] : value.items()) c.params[k] = as_string(v);
        } else {
            assign(c, key, as_string(value));
        }
    }
    return c;
}

RunConfig RunConfig::from_text(std::string_view text) {
    RunConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(number) + ": expected key=value, got '" + body + "'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
        assign(c, key, trim(std::string_view(body).substr(eq + 1)));
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
    return from_text(text);
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

double RunConfig::number(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : parse_double(key, it->second);
}

double RunConfig::number(const std::string& key) const {
    require({key});
    return parse_double(key, params.at(key));
}

int RunConfig::integer(const std::string& key, int fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : static_cast<int>(parse_int(key, it->second));
}

bool RunConfig::flag(const std::string& key) const {
    const auto it = params.find(key);
    if (it == params.end()) return false;
    if (it->second == "true" || it->second == "1" || it->second.empty()) return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + it->second + "'");
}

void RunConfig::require(const std::vector<std::string>& keys) const {
    std::vector<std::string> missing;
    for (const auto& k : keys) {
        if (!params.contains(k)) missing.push_back(k);
    }
    if (missing.empty()) return;
    std::string msg = "missing required field";
    msg += missing.size() > 1 ? "s: " : ": ";
    for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
    throw ConfigError(msg);
}

void RunConfig::validate() const {
    std::vector<std::string> errors;
    if (K < 1 || K > 4096) errors.push_back("K must be in [1, 4096], got " + std::to_string(K));
    if (D_max < 0 || D_max > 64) errors.push_back("D_max must be in [0, 64], got " + std::to_string(D_max));
    if (!(p >= 0.0) || !std::isfinite(p)) errors.push_back("p must be finite and >= 0");
    if (N < 1) errors.push_back("N must be positive, got " + std::to_string(N));
    if (threads < 1) errors.push_back("threads must be positive, got " + std::to_string(threads));
    if (!(tol.quad_tol > 0.0)) errors.push_back("quad_tol must be positive");
    if (!(tol.mc_sigma > 0.0)) errors.push_back("mc_sigma must be positive");
    if (!(tol.coeff_tol > 0.0)) errors.push_back("coeff_tol must be positive");
    if (errors.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
}

}  // namespace wickforge::app

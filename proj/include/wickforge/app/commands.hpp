#pragma once

#include "wickforge/app/config.hpp"
#include "wickforge/app/report.hpp"
#include "wickforge/basis.hpp"
#include "wickforge/gram_cache.hpp"
#include "wickforge/test_function.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wickforge::app {

/// Basis and Gram table for a run.  The grid from the config is extended, at
/// the same spacing, to cover `t_needed`.
class Workspace {
public:
    Workspace(const RunConfig& config, double t_needed = 0.0, std::optional<int> K = std::nullopt);
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    const basis::SpectralBasis& basis() const { return basis_; }
    const gram::GramCache& cache() const { return *cache_; }
    const gram::CacheStats& stats() const { return stats_; }

private:
    basis::SpectralBasis basis_;
    gram::CacheStats stats_;
    std::optional<gram::GramCache> cache_;
};

/// Inline JSON (starting with '{' or '[') or a path to a JSON file.
nlohmann::json json_argument(const std::string& value);
TestFunction test_function_argument(const std::string& value, int K);

/// CSV producers: "basis table", "basis kernel", "basis sup".
std::string basis_csv(const RunConfig& config);

/// JSON producer for "chaos op".
nlohmann::json chaos_op(const RunConfig& config);

/// Report producers for "ito square|general", "sde ...", "renorm prop|bound".
Report run_report(const RunConfig& config);

/// Names accepted by run_report.
const std::vector<std::string>& report_commands();

}  // namespace wickforge::app

#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hdconf/app/run_config.hpp"

namespace hdconf::app {

struct CommandResult {
    std::vector<std::filesystem::path> written;
    std::string summary;  // one line for stdout
};

/// panel.csv + panel.json from the configured source.
[[nodiscard]] CommandResult run_ingest(const RunConfig& config,
                                       const std::optional<std::filesystem::path>& data_dir);
/// panel.csv, panel.json and truth.json from the synthetic spec and seed.
[[nodiscard]] CommandResult run_simulate(const RunConfig& config);
/// report.csv, region_metrics.csv, intervals.csv, forecasts.csv and manifest.json.
[[nodiscard]] CommandResult run_backtest(const RunConfig& config,
                                         const std::optional<std::filesystem::path>& data_dir);
/// decomposition.csv + decomposition.json over the whole panel.
[[nodiscard]] CommandResult run_decompose(const RunConfig& config,
                                          const std::optional<std::filesystem::path>& data_dir);
/// scores.csv, loadings.csv, eigenvalues.csv and factors.json over the whole panel.
[[nodiscard]] CommandResult run_factors(const RunConfig& config,
                                        const std::optional<std::filesystem::path>& data_dir);

/// 2 for configuration and usage errors, 1 for everything else.
[[nodiscard]] int exit_code_for(const std::exception& error) noexcept;

}  // namespace hdconf::app

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdconf/backtest.hpp"
#include "hdconf/mx_table.hpp"
#include "hdconf/synthetic.hpp"

namespace hdconf::app {

enum class SourceKind { none, panel, mx_files, synthetic };

struct SmoothingConfig {
    bool gcv = true;
    double penalty = 0.0;
    std::size_t basis_count = 20;
};

struct DataConfig {
    SourceKind kind = SourceKind::none;
    std::filesystem::path panel;  // panel CSV; the sidecar sits next to it with a .json extension
    std::vector<std::filesystem::path> mx_files;
    int max_age = 100;
    bool open_group = true;
    std::optional<int> first_year;
    std::optional<int> last_year;
    std::optional<SmoothingConfig> smoothing;
    SyntheticSpec synthetic;
};

struct YearConfig {
    int first = 0;
    int train_end = 0;
    int validation_end = 0;
    int test_end = 0;
};

/// Declarative run description. Everything except output_dir and threads is part of
/// the canonical form that is hashed and recorded in manifests.
struct RunConfig {
    DataConfig data;
    Sex sex = Sex::total;
    std::optional<YearConfig> years;
    double alpha = 0.05;
    std::optional<std::size_t> horizons;
    std::vector<DecompositionMethod> decompositions{DecompositionMethod::median_polish};
    std::vector<ForecasterKind> forecasters{ForecasterKind::ar_aic};
    std::vector<IntervalMethod> variants{IntervalMethod::split_sd, IntervalMethod::split_quantile,
                                         IntervalMethod::sequential};
    std::size_t sequential_p_max = 3;
    std::optional<std::size_t> ar_order_max;
    std::optional<std::size_t> factors;
    std::uint64_t seed = 1;

    std::filesystem::path output_dir = "hdconf-out";
    std::size_t threads = 0;
};

/// Parses a JSON run configuration, or the "config" member of a backtest manifest.
/// Unknown keys and ill-typed values raise ConfigError.
[[nodiscard]] RunConfig parse_run_config(const std::string& text);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// Sorted-key compact JSON of the result-relevant fields.
[[nodiscard]] std::string canonical_config(const RunConfig& config);
/// 64-bit FNV-1a of the canonical form as 16 hex digits.
[[nodiscard]] std::string config_hash(const RunConfig& config);

/// Checks what can be checked without reading data: year ordering, horizons, alpha,
/// list contents and, for synthetic sources, the plan against the generated years.
void validate_config(const RunConfig& config);

/// Resolves a relative input path against the data directory (if any).
[[nodiscard]] std::filesystem::path resolve_input(const std::filesystem::path& path,
                                                  const std::optional<std::filesystem::path>& data_dir);

/// Data directory from HDCONF_DATA_DIR, if set and non-empty.
[[nodiscard]] std::optional<std::filesystem::path> data_dir_from_env();

struct LoadedPanel {
    FunctionalPanel panel;  // log scale
    std::map<std::string, std::string> provenance;
    std::optional<SyntheticPanel> synthetic;
};

/// Reads, builds or generates the configured log-scale panel.
[[nodiscard]] LoadedPanel load_panel(const RunConfig& config,
                                     const std::optional<std::filesystem::path>& data_dir);

/// Plan from the configured years, or a 60/20/20 split of the panel years.
[[nodiscard]] BacktestPlan make_plan(const RunConfig& config, const PanelAxes& axes);

}  // namespace hdconf::app

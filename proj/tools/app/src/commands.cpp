#include "hdconf/app/commands.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "hdconf/error.hpp"
#include "hdconf/exports.hpp"
#include "hdconf/panel_archive.hpp"
#include "hdconf/version.hpp"

namespace hdconf::app {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

template <class Writer>
fs::path write_file(const fs::path& dir, const std::string& name, Writer&& writer) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    const fs::path path = dir / name;
    std::ostringstream buffer;
    writer(buffer);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << buffer.str();
    if (!out) throw Error("failed writing " + path.string());
    return path;
}

std::string shape(const FunctionalPanel& p) {
    return "N=" + std::to_string(p.regions()) + " T=" + std::to_string(p.times()) +
           " J=" + std::to_string(p.ages());
}

std::vector<fs::path> write_archive(const fs::path& dir, const FunctionalPanel& panel,
                                    const std::map<std::string, std::string>& provenance) {
    return {write_file(dir, "panel.csv", [&](std::ostream& o) { write_panel_csv(o, panel); }),
            write_file(dir, "panel.json", [&](std::ostream& o) { write_panel_sidecar(o, panel, provenance); })};
}

Decomposition decompose_first(const RunConfig& config, const FunctionalPanel& panel) {
    return decompose(panel, config.decompositions.front());
}

ordered_json design_toggles() {
    ordered_json d;
    d["xi_pooling"] = "one xi per (pipeline, variant, horizon) pooled over regions and ages";
    d["evaluation_scale"] = "natural";
    d["gamma_quantile_rank"] = "ceil((1 - alpha)(M + 1)) clamped to M";
    d["gamma_floor"] = 1e-12;
    d["split_calibration"] = "validation period only, fixed through the test period";
    d["sequential_aic"] = "2n log(pinball objective / n) + 2(p + 1)";
    d["sequential_order"] = "selected once at initialisation, coefficients refitted after each arrival";
    d["sequential_history_start"] = "third curve";
    d["negative_quantile"] = "clamped to 0";
    d["natural_lower_bound"] = "floored at 0";
    d["cpd_aggregation"] = "per region first, then averaged (inferred convention)";
    d["missing_cells"] = "reported as gaps, never imputed";
    d["factor_penalty"] = "max(T, N)^(-1/2)";
    d["factor_sign_rule_version"] = kSignRuleVersion;
    d["zero_rate_rule"] = "smallest positive rate at the same age, else half the nearest age floor";
    d["open_group"] = "unweighted mean of single-age rates";
    return d;
}

}  // namespace

CommandResult run_ingest(const RunConfig& config, const std::optional<fs::path>& data_dir) {
    validate_config(config);
    const LoadedPanel loaded = load_panel(config, data_dir);
    CommandResult result;
    result.written = write_archive(config.output_dir, loaded.panel, loaded.provenance);
    result.summary = "panel " + shape(loaded.panel);
    return result;
}

CommandResult run_simulate(const RunConfig& config) {
    RunConfig c = config;
    if (c.data.kind == SourceKind::none) c.data.kind = SourceKind::synthetic;
    if (c.data.kind != SourceKind::synthetic) throw ConfigError("simulate needs a synthetic data source");
    c.data.synthetic.validate();
    const LoadedPanel loaded = load_panel(c, std::nullopt);
    CommandResult result;
    result.written = write_archive(c.output_dir, loaded.panel, loaded.provenance);
    result.written.push_back(write_file(c.output_dir, "truth.json", [&](std::ostream& o) {
        write_truth_json(o, c.data.synthetic, c.seed, *loaded.synthetic);
    }));
    result.summary = "synthetic panel " + shape(loaded.panel) + " q=" + std::to_string(c.data.synthetic.factors);
    return result;
}

CommandResult run_backtest(const RunConfig& config, const std::optional<fs::path>& data_dir) {
    validate_config(config);
    const LoadedPanel loaded = load_panel(config, data_dir);
    const BacktestPlan plan = make_plan(config, loaded.panel.axes());
    const BacktestResult bt = expanding_backtest(loaded.panel, plan, config.threads);
    const EvaluationReport report = evaluate(bt);

    CommandResult result;
    const fs::path& dir = config.output_dir;
    result.written.push_back(write_file(dir, "report.csv", [&](std::ostream& o) { write_report_csv(o, report); }));
    result.written.push_back(
        write_file(dir, "region_metrics.csv", [&](std::ostream& o) { write_region_metrics_csv(o, report); }));
    result.written.push_back(write_file(dir, "intervals.csv", [&](std::ostream& o) { write_intervals_csv(o, bt); }));
    result.written.push_back(write_file(dir, "forecasts.csv", [&](std::ostream& o) { write_forecasts_csv(o, bt); }));

    ordered_json manifest;
    manifest["format"] = "hdconf-manifest";
    manifest["version"] = 1;
    manifest["config"] = nlohmann::ordered_json::parse(canonical_config(config));
    manifest["config_hash"] = config_hash(config);
    manifest["seed"] = config.seed;
    manifest["versions"] = {{"hdconf", kVersion},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    manifest["panel"] = {{"regions", loaded.panel.regions()},
                         {"years", {loaded.panel.years().front(), loaded.panel.years().back()}},
                         {"ages", loaded.panel.ages()},
                         {"provenance", loaded.provenance}};
    manifest["plan"] = {{"first_year", plan.first_year},
                        {"train_end_year", plan.train_end_year},
                        {"validation_end_year", plan.validation_end_year},
                        {"test_end_year", plan.test_end_year},
                        {"max_horizon", plan.max_horizon},
                        {"alpha", plan.alpha}};
    manifest["design"] = design_toggles();
    ordered_json gaps = ordered_json::array();
    for (const auto& g : bt.gaps) {
        gaps.push_back({{"method", plan.pipelines[g.pipeline].label()},
                        {"variant", std::string(to_string(g.method))},
                        {"h", g.horizon},
                        {"reason", g.reason}});
    }
    manifest["gaps"] = gaps;
    manifest["notes"] = bt.notes;
    ordered_json outputs = ordered_json::array();
    for (const auto& p : result.written) outputs.push_back(p.filename().string());
    manifest["outputs"] = outputs;
    result.written.push_back(write_file(dir, "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; }));

    result.summary = "backtest " + shape(loaded.panel) + ": " + std::to_string(report.rows.size()) +
                     " report rows, " + std::to_string(bt.gaps.size()) + " gap(s), config " +
                     config_hash(config);
    return result;
}

CommandResult run_decompose(const RunConfig& config, const std::optional<fs::path>& data_dir) {
    validate_config(config);
    const LoadedPanel loaded = load_panel(config, data_dir);
    const Decomposition d = decompose_first(config, loaded.panel);
    CommandResult result;
    result.written.push_back(write_file(config.output_dir, "decomposition.csv",
                                        [&](std::ostream& o) { write_decomposition_csv(o, d); }));
    result.written.push_back(write_file(config.output_dir, "decomposition.json",
                                        [&](std::ostream& o) { write_decomposition_json(o, d); }));
    result.summary = std::string(to_string(d.method)) + " " + shape(loaded.panel) + ", " +
                     std::to_string(d.iterations_used) + " sweep(s)" + (d.converged ? "" : ", not converged");
    return result;
}

CommandResult run_factors(const RunConfig& config, const std::optional<fs::path>& data_dir) {
    validate_config(config);
    const LoadedPanel loaded = load_panel(config, data_dir);
    const Decomposition d = decompose_first(config, loaded.panel);
    FactorModelOptions options;
    options.q_override = config.factors;
    const FactorModel fm = fit_factor_model(d.residuals, trapezoid_weights(loaded.panel.age_grid()), options);
    const auto& axes = loaded.panel.axes();
    const fs::path& dir = config.output_dir;
    CommandResult result;
    result.written.push_back(write_file(dir, "scores.csv", [&](std::ostream& o) { write_scores_csv(o, fm, axes); }));
    result.written.push_back(
        write_file(dir, "loadings.csv", [&](std::ostream& o) { write_loadings_csv(o, fm, axes); }));
    result.written.push_back(write_file(dir, "eigenvalues.csv", [&](std::ostream& o) { write_eigenvalues_csv(o, fm); }));
    result.written.push_back(write_file(dir, "factors.json", [&](std::ostream& o) { write_factor_json(o, fm); }));
    result.summary = "factor model " + shape(loaded.panel) + ", q=" + std::to_string(fm.q);
    return result;
}

int exit_code_for(const std::exception& error) noexcept {
    if (dynamic_cast<const ConfigError*>(&error) != nullptr) return 2;
    return 1;
}

}  // namespace hdconf::app

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hdconf/app/commands.hpp"
#include "hdconf/error.hpp"
#include "hdconf/version.hpp"

namespace {

using hdconf::app::RunConfig;

struct Overrides {
    std::string config;
    std::string output;
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<std::size_t> horizons;
    std::string panel;
    std::vector<std::string> inputs;
    std::string sex;
    std::optional<int> first_year;
    std::optional<int> last_year;
    std::optional<int> max_age;
    bool no_open_group = false;
    std::string smooth;
    std::optional<std::size_t> basis_count;
    std::string method;
    std::string forecaster;
    std::optional<std::size_t> factors;
    std::optional<std::size_t> regions;
    std::optional<std::size_t> times;
    std::optional<std::size_t> ages;
    std::optional<std::size_t> true_factors;
    std::optional<double> noise_sd;
    std::optional<double> ar;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run configuration (or a backtest manifest)");
    cmd->add_option("--output,-o", o.output, "Output directory");
}

void add_panel_source(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--panel", o.panel, "Panel CSV written by ingest or simulate");
}

RunConfig build_config(const Overrides& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : hdconf::app::load_run_config(o.config);
    auto& d = c.data;
    if (!o.panel.empty()) {
        d = {};
        d.kind = hdconf::app::SourceKind::panel;
        d.panel = o.panel;
    }
    if (!o.inputs.empty()) {
        d = {};
        d.kind = hdconf::app::SourceKind::mx_files;
        d.mx_files.assign(o.inputs.begin(), o.inputs.end());
    }
    if (!o.output.empty()) c.output_dir = o.output;
    if (o.threads) c.threads = *o.threads;
    if (o.seed) c.seed = *o.seed;
    if (o.alpha) c.alpha = *o.alpha;
    if (o.horizons) c.horizons = *o.horizons;
    if (!o.sex.empty()) c.sex = hdconf::parse_sex(o.sex);
    if (o.first_year) d.first_year = *o.first_year;
    if (o.last_year) d.last_year = *o.last_year;
    if (o.max_age) d.max_age = *o.max_age;
    if (o.no_open_group) d.open_group = false;
    if (!o.smooth.empty() || o.basis_count) {
        hdconf::app::SmoothingConfig sm = d.smoothing.value_or(hdconf::app::SmoothingConfig{});
        if (!o.smooth.empty() && o.smooth != "gcv") {
            sm.gcv = false;
            try {
                sm.penalty = std::stod(o.smooth);
            } catch (const std::exception&) {
                throw hdconf::ConfigError("--smooth expects a penalty or \"gcv\"");
            }
        }
        if (o.basis_count) sm.basis_count = *o.basis_count;
        d.smoothing = sm;
    }
    if (!o.method.empty()) c.decompositions = {hdconf::parse_decomposition_method(o.method)};
    if (!o.forecaster.empty()) c.forecasters = {hdconf::parse_forecaster_kind(o.forecaster)};
    if (o.factors) c.factors = *o.factors;
    if (o.regions || o.times || o.ages || o.true_factors || o.noise_sd || o.ar) {
        if (d.kind == hdconf::app::SourceKind::none) d.kind = hdconf::app::SourceKind::synthetic;
        if (o.regions) d.synthetic.regions = *o.regions;
        if (o.times) d.synthetic.times = *o.times;
        if (o.ages) d.synthetic.ages = *o.ages;
        if (o.true_factors) d.synthetic.factors = *o.true_factors;
        if (o.noise_sd) d.synthetic.noise_sd = *o.noise_sd;
        if (o.ar) d.synthetic.ar_coefficient = *o.ar;
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal prediction intervals for high-dimensional functional time series"};
    app.set_version_flag("--version", std::string(hdconf::kVersion));
    app.require_subcommand(1);
    Overrides o;

    auto* ingest = app.add_subcommand("ingest", "Build a log-rate panel archive from Mx 1x1 files");
    add_common(ingest, o);
    ingest->add_option("--input,-i", o.inputs, "Mx 1x1 files, one per region (region id = file name stem)");
    ingest->add_option("--sex", o.sex, "F, M or T");
    ingest->add_option("--first-year", o.first_year);
    ingest->add_option("--last-year", o.last_year);
    ingest->add_option("--max-age", o.max_age, "Ages 0..max_age-1 single, then max_age+");
    ingest->add_flag("--no-open-group", o.no_open_group, "Last grid point is the single age max_age");
    ingest->add_option("--smooth", o.smooth, "P-spline penalty, or gcv");
    ingest->add_option("--basis-count", o.basis_count, "Cubic B-spline basis size");

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel with its ground truth");
    add_common(simulate, o);
    simulate->add_option("--seed", o.seed);
    simulate->add_option("--regions", o.regions);
    simulate->add_option("--times", o.times);
    simulate->add_option("--ages", o.ages);
    simulate->add_option("--factors", o.true_factors);
    simulate->add_option("--noise-sd", o.noise_sd);
    simulate->add_option("--ar", o.ar, "AR(1) coefficient of the scores");

    auto* backtest = app.add_subcommand("backtest", "Expanding-window backtest with conformal intervals");
    add_common(backtest, o);
    add_panel_source(backtest, o);
    backtest->add_option("--threads,-j", o.threads, "Worker threads (0 = all cores)");
    backtest->add_option("--seed", o.seed);
    backtest->add_option("--alpha", o.alpha);
    backtest->add_option("--horizons", o.horizons, "Largest forecast horizon");
    backtest->add_option("--method", o.method, "median_polish or mean");
    backtest->add_option("--forecaster", o.forecaster, "ar_aic, rw_drift, ses or holt");

    auto* decompose = app.add_subcommand("decompose", "Functional ANOVA decomposition of a panel");
    add_common(decompose, o);
    add_panel_source(decompose, o);
    decompose->add_option("--method", o.method, "median_polish or mean");

    auto* factors = app.add_subcommand("factors", "Factor model of the decomposition residuals");
    add_common(factors, o);
    add_panel_source(factors, o);
    factors->add_option("--method", o.method, "median_polish or mean");
    factors->add_option("--factors,-q", o.factors, "Number of factors (default: information criterion)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig config = build_config(o);
        const auto data_dir = hdconf::app::data_dir_from_env();
        hdconf::app::CommandResult result;
        if (ingest->parsed()) {
            result = hdconf::app::run_ingest(config, data_dir);
        } else if (simulate->parsed()) {
            result = hdconf::app::run_simulate(config);
        } else if (backtest->parsed()) {
            result = hdconf::app::run_backtest(config, data_dir);
        } else if (decompose->parsed()) {
            result = hdconf::app::run_decompose(config, data_dir);
        } else {
            result = hdconf::app::run_factors(config, data_dir);
        }
        std::cout << result.summary << '\n';
        for (const auto& path : result.written) std::cout << "wrote " << path.string() << '\n';
        return 0;
    } catch (const hdconf::ArgumentError& e) {
        std::cerr << "hdconf: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hdconf: " << e.what() << '\n';
        return hdconf::app::exit_code_for(e);
    }
}

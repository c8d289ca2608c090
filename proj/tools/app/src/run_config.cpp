#include "hdconf/app/run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hdconf/error.hpp"
#include "hdconf/panel_archive.hpp"
#include "hdconf/smoothing.hpp"

namespace hdconf::app {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& object, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!object.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, value] : object.items()) {
        bool known = false;
        for (auto k : keys) known = known || k == key;
        if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
}

template <class T>
T get(const json& object, const std::string& key, std::string_view where) {
    try {
        return object.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("invalid value for '" + key + "' in " + std::string(where));
    }
}

std::size_t get_count(const json& object, const std::string& key, std::string_view where) {
    const auto& v = object.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError("'" + key + "' in " + std::string(where) + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

// A single string or a list of strings.
std::vector<std::string> get_names(const json& object, const std::string& key) {
    const auto& v = object.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (v.is_array()) {
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError("'" + key + "' must list strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }
    throw ConfigError("'" + key + "' must be a string or a list of strings");
}

template <class Enum, class Parse>
std::vector<Enum> parse_list(const json& object, const std::string& key, Parse parse) {
    std::vector<Enum> out;
    for (const auto& name : get_names(object, key)) {
        try {
            out.push_back(parse(name));
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
    }
    return out;
}

SyntheticSpec parse_synthetic(const json& j) {
    constexpr std::string_view where = "data.synthetic";
    reject_unknown(j, where,
                   {"regions", "times", "ages", "factors", "ar_coefficient", "innovation_sd", "loading_scale",
                    "noise_sd", "grand_effect", "row_effect_sd", "first_year"});
    SyntheticSpec spec;
    if (j.contains("regions")) spec.regions = get_count(j, "regions", where);
    if (j.contains("times")) spec.times = get_count(j, "times", where);
    if (j.contains("ages")) spec.ages = get_count(j, "ages", where);
    if (j.contains("factors")) spec.factors = get_count(j, "factors", where);
    if (j.contains("ar_coefficient")) spec.ar_coefficient = get<double>(j, "ar_coefficient", where);
    if (j.contains("innovation_sd")) spec.innovation_sd = get<double>(j, "innovation_sd", where);
    if (j.contains("loading_scale")) spec.loading_scale = get<double>(j, "loading_scale", where);
    if (j.contains("noise_sd")) spec.noise_sd = get<double>(j, "noise_sd", where);
    if (j.contains("grand_effect")) spec.grand_effect = get<bool>(j, "grand_effect", where);
    if (j.contains("row_effect_sd")) spec.row_effect_sd = get<double>(j, "row_effect_sd", where);
    if (j.contains("first_year")) spec.first_year = get<int>(j, "first_year", where);
    return spec;
}

DataConfig parse_data(const json& j) {
    constexpr std::string_view where = "data";
    reject_unknown(j, where,
                   {"panel", "mx_files", "synthetic", "max_age", "open_group", "first_year", "last_year",
                    "smoothing"});
    DataConfig data;
    const int sources = static_cast<int>(j.contains("panel")) + static_cast<int>(j.contains("mx_files")) +
                        static_cast<int>(j.contains("synthetic"));
    if (sources != 1) throw ConfigError("data must name exactly one of panel, mx_files, synthetic");
    if (j.contains("panel")) {
        data.kind = SourceKind::panel;
        data.panel = get<std::string>(j, "panel", where);
    } else if (j.contains("mx_files")) {
        data.kind = SourceKind::mx_files;
        for (const auto& name : get_names(j, "mx_files")) data.mx_files.emplace_back(name);
        if (data.mx_files.empty()) throw ConfigError("data.mx_files is empty");
    } else {
        data.kind = SourceKind::synthetic;
        data.synthetic = parse_synthetic(j.at("synthetic"));
    }
    const bool mx = data.kind == SourceKind::mx_files;
    for (const char* key : {"max_age", "open_group", "first_year", "last_year", "smoothing"}) {
        if (j.contains(key) && !mx) throw ConfigError(std::string("data.") + key + " only applies to mx_files");
    }
    if (j.contains("max_age")) data.max_age = get<int>(j, "max_age", where);
    if (j.contains("open_group")) data.open_group = get<bool>(j, "open_group", where);
    if (j.contains("first_year")) data.first_year = get<int>(j, "first_year", where);
    if (j.contains("last_year")) data.last_year = get<int>(j, "last_year", where);
    if (j.contains("smoothing")) {
        const auto& s = j.at("smoothing");
        reject_unknown(s, "data.smoothing", {"penalty", "basis_count"});
        SmoothingConfig sm;
        if (s.contains("penalty")) {
            if (s.at("penalty").is_string()) {
                if (s.at("penalty").get<std::string>() != "gcv") {
                    throw ConfigError("data.smoothing.penalty must be a number or \"gcv\"");
                }
            } else {
                sm.gcv = false;
                sm.penalty = get<double>(s, "penalty", "data.smoothing");
            }
        }
        if (s.contains("basis_count")) sm.basis_count = get_count(s, "basis_count", "data.smoothing");
        data.smoothing = sm;
    }
    return data;
}

json data_json(const DataConfig& d) {
    json j = json::object();
    switch (d.kind) {
        case SourceKind::none: break;
        case SourceKind::panel: j["panel"] = d.panel.generic_string(); break;
        case SourceKind::mx_files: {
            json files = json::array();
            for (const auto& f : d.mx_files) files.push_back(f.generic_string());
            j["mx_files"] = files;
            j["max_age"] = d.max_age;
            j["open_group"] = d.open_group;
            if (d.first_year) j["first_year"] = *d.first_year;
            if (d.last_year) j["last_year"] = *d.last_year;
            if (d.smoothing) {
                json s;
                if (d.smoothing->gcv) {
                    s["penalty"] = "gcv";
                } else {
                    s["penalty"] = d.smoothing->penalty;
                }
                s["basis_count"] = d.smoothing->basis_count;
                j["smoothing"] = s;
            }
            break;
        }
        case SourceKind::synthetic: {
            const auto& sp = d.synthetic;
            j["synthetic"] = {{"regions", sp.regions},
                              {"times", sp.times},
                              {"ages", sp.ages},
                              {"factors", sp.factors},
                              {"ar_coefficient", sp.ar_coefficient},
                              {"innovation_sd", sp.innovation_sd},
                              {"loading_scale", sp.loading_scale},
                              {"noise_sd", sp.noise_sd},
                              {"grand_effect", sp.grand_effect},
                              {"row_effect_sd", sp.row_effect_sd},
                              {"first_year", sp.first_year}};
            break;
        }
    }
    return j;
}

template <class Enum>
json names_json(const std::vector<Enum>& values) {
    json out = json::array();
    for (auto v : values) out.push_back(std::string(to_string(v)));
    return out;
}

std::string region_from_path(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    return name.substr(0, name.find('.'));
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("format") && doc["format"] == "hdconf-manifest") {
        if (!doc.contains("config")) throw ConfigError("manifest has no config member");
        doc = doc["config"];
    }
    constexpr std::string_view where = "configuration";
    reject_unknown(doc, where,
                   {"data", "sex", "years", "alpha", "horizons", "decomposition", "forecaster", "variants",
                    "sequential_p_max", "ar_order_max", "factors", "seed", "output_dir", "threads"});
    RunConfig config;
    if (doc.contains("data")) config.data = parse_data(doc["data"]);
    if (doc.contains("sex")) {
        try {
            config.sex = parse_sex(get<std::string>(doc, "sex", where));
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
    }
    if (doc.contains("years")) {
        const auto& y = doc["years"];
        reject_unknown(y, "years", {"first", "train_end", "validation_end", "test_end"});
        for (const char* key : {"first", "train_end", "validation_end", "test_end"}) {
            if (!y.contains(key)) throw ConfigError(std::string("years.") + key + " is required");
        }
        config.years = YearConfig{get<int>(y, "first", "years"), get<int>(y, "train_end", "years"),
                                  get<int>(y, "validation_end", "years"), get<int>(y, "test_end", "years")};
    }
    if (doc.contains("alpha")) config.alpha = get<double>(doc, "alpha", where);
    if (doc.contains("horizons")) config.horizons = get_count(doc, "horizons", where);
    if (doc.contains("decomposition")) {
        config.decompositions = parse_list<DecompositionMethod>(doc, "decomposition", parse_decomposition_method);
    }
    if (doc.contains("forecaster")) {
        config.forecasters = parse_list<ForecasterKind>(doc, "forecaster", parse_forecaster_kind);
    }
    if (doc.contains("variants")) {
        config.variants = parse_list<IntervalMethod>(doc, "variants", parse_interval_method);
    }
    if (doc.contains("sequential_p_max")) config.sequential_p_max = get_count(doc, "sequential_p_max", where);
    if (doc.contains("ar_order_max")) config.ar_order_max = get_count(doc, "ar_order_max", where);
    if (doc.contains("factors")) config.factors = get_count(doc, "factors", where);
    if (doc.contains("seed")) config.seed = get<std::uint64_t>(doc, "seed", where);
    if (doc.contains("output_dir")) config.output_dir = get<std::string>(doc, "output_dir", where);
    if (doc.contains("threads")) config.threads = get_count(doc, "threads", where);
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_run_config(buffer.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string canonical_config(const RunConfig& c) {
    json j;
    j["data"] = data_json(c.data);
    j["sex"] = std::string(to_string(c.sex));
    if (c.years) {
        j["years"] = {{"first", c.years->first},
                      {"train_end", c.years->train_end},
                      {"validation_end", c.years->validation_end},
                      {"test_end", c.years->test_end}};
    }
    j["alpha"] = c.alpha;
    if (c.horizons) j["horizons"] = *c.horizons;
    j["decomposition"] = names_json(c.decompositions);
    j["forecaster"] = names_json(c.forecasters);
    j["variants"] = names_json(c.variants);
    j["sequential_p_max"] = c.sequential_p_max;
    if (c.ar_order_max) j["ar_order_max"] = *c.ar_order_max;
    if (c.factors) j["factors"] = *c.factors;
    j["seed"] = c.seed;
    return j.dump();
}

std::string config_hash(const RunConfig& config) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canonical_config(config)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return out;
}

namespace {

BacktestPlan plan_from_years(const RunConfig& config, int first, int last) {
    BacktestPlan plan;
    if (config.years) {
        plan.first_year = config.years->first;
        plan.train_end_year = config.years->train_end;
        plan.validation_end_year = config.years->validation_end;
        plan.test_end_year = config.years->test_end;
        plan.max_horizon = std::min<std::size_t>(10, plan.test_years());
    } else {
        plan = proportional_plan(first, last);
    }
    if (config.horizons) plan.max_horizon = *config.horizons;
    plan.alpha = config.alpha;
    plan.pipelines.clear();
    for (auto d : config.decompositions) {
        for (auto f : config.forecasters) plan.pipelines.push_back({d, f});
    }
    plan.variants = config.variants;
    plan.sex = std::string(to_string(config.sex));
    plan.sequential_p_max = config.sequential_p_max;
    plan.ar_order_max = config.ar_order_max;
    plan.factor.q_override = config.factors;
    return plan;
}

}  // namespace

void validate_config(const RunConfig& config) {
    if (config.data.kind == SourceKind::none) throw ConfigError("configuration has no data source");
    if (config.data.kind == SourceKind::synthetic) {
        config.data.synthetic.validate();
        const int first = config.data.synthetic.first_year;
        const int last = first + static_cast<int>(config.data.synthetic.times) - 1;
        plan_from_years(config, first, last)
            .validate_against(PanelAxes{{"R"}, consecutive_years(first, config.data.synthetic.times), {0.0}});
        return;
    }
    if (config.years) {
        plan_from_years(config, config.years->first, config.years->test_end).validate();
    } else if (config.horizons && *config.horizons < 1) {
        throw ConfigError("horizons must be at least 1");
    }
    if (config.data.kind == SourceKind::mx_files && config.data.max_age < 1) {
        throw ConfigError("data.max_age must be at least 1");
    }
}

std::filesystem::path resolve_input(const std::filesystem::path& path,
                                    const std::optional<std::filesystem::path>& data_dir) {
    if (path.is_absolute() || !data_dir) return path;
    return *data_dir / path;
}

std::optional<std::filesystem::path> data_dir_from_env() {
    const char* dir = std::getenv("HDCONF_DATA_DIR");
    if (dir == nullptr || *dir == '\0') return std::nullopt;
    return std::filesystem::path(dir);
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("input file not found: " + path.string());
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file " + path.string());
    return in;
}

FunctionalPanel to_log_scale(const FunctionalPanel& panel) {
    CurveArray values = panel.values();
    for (double& x : values.values()) {
        if (!(x > 0.0)) throw ConfigError("natural-scale panel has non-positive values");
        x = std::log(x);
    }
    return FunctionalPanel(panel.axes(), std::move(values), Scale::log);
}

}  // namespace

LoadedPanel load_panel(const RunConfig& config, const std::optional<std::filesystem::path>& data_dir) {
    const DataConfig& data = config.data;
    switch (data.kind) {
        case SourceKind::none: throw ConfigError("configuration has no data source");
        case SourceKind::synthetic: {
            SyntheticPanel synthetic = synthesize_panel(data.synthetic, config.seed);
            FunctionalPanel panel = synthetic.panel;
            return {std::move(panel), {{"source", "synthetic"}, {"seed", std::to_string(config.seed)}},
                    std::move(synthetic)};
        }
        case SourceKind::panel: {
            const auto csv_path = resolve_input(data.panel, data_dir);
            auto sidecar_path = csv_path;
            sidecar_path.replace_extension(".json");
            auto csv = open_input(csv_path);
            auto sidecar = open_input(sidecar_path);
            try {
                FunctionalPanel panel = read_panel_archive(csv, sidecar);
                if (panel.scale() != Scale::log) panel = to_log_scale(panel);
                return {std::move(panel), {{"source", "panel"}, {"panel", data.panel.generic_string()}}, std::nullopt};
            } catch (const ParseError& e) {
                throw ParseError(csv_path.string() + ": " + e.what(), e.line());
            }
        }
        case SourceKind::mx_files: {
            std::vector<MortalityTable> tables;
            std::string names;
            for (const auto& file : data.mx_files) {
                const auto path = resolve_input(file, data_dir);
                auto in = open_input(path);
                try {
                    tables.push_back(parse_mx_table(in, region_from_path(file)));
                } catch (const ParseError& e) {
                    throw ParseError(path.string() + ": " + e.what(), e.line());
                } catch (const StructuralError& e) {
                    throw StructuralError(path.string() + ": " + e.what());
                }
                names += (names.empty() ? "" : ";") + file.generic_string();
            }
            PanelBuildOptions options;
            options.sex = config.sex;
            options.max_age = data.max_age;
            options.open_group = data.open_group;
            int common_first = std::numeric_limits<int>::min();
            int common_last = std::numeric_limits<int>::max();
            for (const auto& t : tables) {
                if (t.rows.empty()) throw StructuralError("region " + t.region_id + " has no rows");
                int lo = t.rows.front().year;
                int hi = lo;
                for (const auto& r : t.rows) {
                    lo = std::min(lo, r.year);
                    hi = std::max(hi, r.year);
                }
                common_first = std::max(common_first, lo);
                common_last = std::min(common_last, hi);
            }
            options.first_year = data.first_year.value_or(config.years ? config.years->first : common_first);
            options.last_year = data.last_year.value_or(config.years ? config.years->test_end : common_last);
            FunctionalPanel panel = build_panel(tables, options);
            std::map<std::string, std::string> prov{{"source", "mx_files"},
                                                    {"files", names},
                                                    {"sex", std::string(to_string(config.sex))},
                                                    {"max_age", std::to_string(data.max_age)},
                                                    {"open_group", data.open_group ? "true" : "false"}};
            if (data.smoothing) {
                const auto& sm = *data.smoothing;
                panel = sm.gcv ? smooth_panel_gcv(panel, sm.basis_count)
                               : smooth_panel(panel, sm.penalty, sm.basis_count);
                prov["smoothing"] = (sm.gcv ? std::string("gcv") : format_number(sm.penalty)) +
                                    ", basis_count " + std::to_string(sm.basis_count);
            }
            return {std::move(panel), std::move(prov), std::nullopt};
        }
    }
    throw ConfigError("unsupported data source");
}

BacktestPlan make_plan(const RunConfig& config, const PanelAxes& axes) {
    BacktestPlan plan = plan_from_years(config, axes.years.front(), axes.years.back());
    plan.validate_against(axes);
    return plan;
}

}  // namespace hdconf::app

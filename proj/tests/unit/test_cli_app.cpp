#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hdconf/app/commands.hpp"
#include "hdconf/app/run_config.hpp"
#include "hdconf/error.hpp"
#include "hdconf/panel_archive.hpp"

namespace fs = std::filesystem;
using namespace hdconf;
using namespace hdconf::app;

namespace {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("hdconf-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const fs::path& path() const { return path_; }
    [[nodiscard]] fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Mx 1x1 file for ages 0..109 and 110+ with smooth Gompertz-like rates.
void write_mx_file(const fs::path& p, int y0, int y1, double level) {
    std::ofstream out(p);
    out << "Region, Death rates (period 1x1)\tLast modified: 01 Jan 2020\n\n"
        << "  Year          Age             Female            Male           Total\n";
    for (int y = y0; y <= y1; ++y) {
        for (int a = 0; a <= 110; ++a) {
            const double r = std::min(0.9, level * std::exp(0.09 * a) * std::exp(-0.01 * (y - y0)));
            out << "  " << y << "  " << a << (a == 110 ? "+" : "") << "  " << r << "  " << 1.2 * r << "  " << 1.1 * r
                << '\n';
        }
    }
}

RunConfig synthetic_config(const fs::path& out) {
    auto c = parse_run_config(R"({
        "data": {"synthetic": {"regions": 3, "times": 30, "ages": 5, "factors": 2}},
        "years": {"first": 1, "train_end": 15, "validation_end": 23, "test_end": 30},
        "horizons": 5,
        "seed": 9
    })");
    c.output_dir = out;
    c.threads = 1;
    return c;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(HDCONF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunConfig, Defaults) {
    const auto c = parse_run_config("{}");
    EXPECT_EQ(c.alpha, 0.05);
    EXPECT_EQ(c.variants.size(), 3u);
    EXPECT_EQ(c.sequential_p_max, 3u);
    EXPECT_EQ(c.data.kind, SourceKind::none);
}

TEST(RunConfig, ParsesFields) {
    const auto c = parse_run_config(R"({
        "data": {"mx_files": ["a.txt", "b.txt"], "max_age": 80, "open_group": false,
                 "smoothing": {"penalty": "gcv", "basis_count": 15}},
        "sex": "F", "alpha": 0.2, "horizons": 4, "decomposition": ["mean", "median_polish"],
        "forecaster": ["rw_drift"], "variants": ["sequential"], "factors": 2, "seed": 17
    })");
    EXPECT_EQ(c.data.kind, SourceKind::mx_files);
    EXPECT_EQ(c.data.mx_files.size(), 2u);
    EXPECT_EQ(c.data.max_age, 80);
    EXPECT_FALSE(c.data.open_group);
    ASSERT_TRUE(c.data.smoothing.has_value());
    EXPECT_TRUE(c.data.smoothing->gcv);
    EXPECT_EQ(c.data.smoothing->basis_count, 15u);
    EXPECT_EQ(c.sex, Sex::female);
    EXPECT_EQ(c.alpha, 0.2);
    EXPECT_EQ(c.horizons, 4u);
    EXPECT_EQ(c.decompositions.size(), 2u);
    EXPECT_EQ(c.forecasters, std::vector<ForecasterKind>{ForecasterKind::rw_drift});
    EXPECT_EQ(c.variants, std::vector<IntervalMethod>{IntervalMethod::sequential});
    EXPECT_EQ(c.factors, 2u);
    EXPECT_EQ(c.seed, 17u);
}

TEST(RunConfig, RejectsBadInput) {
    EXPECT_THROW((void)parse_run_config(R"({"alpah": 0.1})"), ConfigError);
    EXPECT_THROW((void)parse_run_config(R"({"alpha": "x"})"), ConfigError);
    EXPECT_THROW((void)parse_run_config(R"({"data": {"panel": "p.csv", "mx_files": ["a"]}})"), ConfigError);
    EXPECT_THROW((void)parse_run_config(R"({"data": {"panel": "p.csv", "max_age": 90}})"), ConfigError);
    EXPECT_THROW((void)parse_run_config(R"({"variants": ["bootstrap"]})"), ConfigError);
    EXPECT_THROW((void)parse_run_config("{"), ConfigError);
}

TEST(RunConfig, ValidationErrors) {
    auto c = synthetic_config("unused");
    EXPECT_NO_THROW(validate_config(c));
    c.horizons = 8;
    EXPECT_THROW(validate_config(c), ConfigError);
    c = synthetic_config("unused");
    c.years->test_end = 31;
    EXPECT_THROW(validate_config(c), ConfigError);
    c = synthetic_config("unused");
    c.alpha = 0.0;
    EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(RunConfig, HashIgnoresOutputAndThreads) {
    auto a = synthetic_config("one");
    auto b = synthetic_config("two");
    b.threads = 4;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.seed = 10;
    EXPECT_NE(config_hash(a), config_hash(b));
    const auto round = parse_run_config(canonical_config(a));
    EXPECT_EQ(canonical_config(round), canonical_config(a));
}

TEST(RunConfig, ResolveInput) {
    EXPECT_EQ(resolve_input("a/b.txt", fs::path("/data")), fs::path("/data/a/b.txt"));
    EXPECT_EQ(resolve_input("/abs/b.txt", fs::path("/data")), fs::path("/abs/b.txt"));
    EXPECT_EQ(resolve_input("b.txt", std::nullopt), fs::path("b.txt"));
}

TEST(Ingest, TwelveRegionsFromMxFiles) {
    TempDir dir;
    std::vector<fs::path> files;
    for (int s = 0; s < 12; ++s) {
        files.push_back(dir / ("R" + std::to_string(s) + ".Mx_1x1.txt"));
        write_mx_file(files.back(), 1950, 2016, 1e-4 * (1.0 + 0.05 * s));
    }
    RunConfig c;
    c.data.kind = SourceKind::mx_files;
    c.data.mx_files = files;
    c.data.max_age = 80;
    c.output_dir = dir / "out";
    const auto result = run_ingest(c, std::nullopt);
    EXPECT_EQ(result.written.size(), 2u);
    std::ifstream csv(dir / "out/panel.csv");
    std::ifstream side(dir / "out/panel.json");
    const auto panel = read_panel_archive(csv, side);
    EXPECT_EQ(panel.regions(), 12u);
    EXPECT_EQ(panel.times(), 67u);
    EXPECT_EQ(panel.ages(), 81u);
    EXPECT_EQ(panel.region_ids().front(), "R0");
    EXPECT_EQ(panel.years().front(), 1950);
    EXPECT_EQ(panel.scale(), Scale::log);
}

TEST(Ingest, MissingFileIsConfigError) {
    TempDir dir;
    RunConfig c;
    c.data.kind = SourceKind::mx_files;
    c.data.mx_files = {dir / "nope.txt"};
    c.output_dir = dir / "out";
    try {
        (void)run_ingest(c, std::nullopt);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("nope.txt"), std::string::npos);
        EXPECT_EQ(exit_code_for(e), 2);
    }
}

TEST(Simulate, TruthSidecar) {
    TempDir dir;
    auto c = synthetic_config(dir / "sim");
    c.data.synthetic.factors = 3;
    c.data.synthetic.noise_sd = 0.0;
    (void)run_simulate(c);
    const auto truth = nlohmann::json::parse(slurp(dir / "sim/truth.json"));
    EXPECT_EQ(truth.at("q_true"), 3);
    std::ifstream csv(dir / "sim/panel.csv");
    std::ifstream side(dir / "sim/panel.json");
    const auto panel = read_panel_archive(csv, side);
    const auto again = synthesize_panel(c.data.synthetic, c.seed);
    EXPECT_EQ(panel.values(), again.panel.values());
    for (std::size_t s = 0; s < panel.regions(); ++s) {
        for (std::size_t t = 0; t < panel.times(); ++t) {
            for (std::size_t j = 0; j < panel.ages(); ++j) EXPECT_EQ(panel(s, t, j), again.truth.signal(s, t, j));
        }
    }
}

TEST(Backtest, OutputsAndReportRows) {
    TempDir dir;
    const auto c = synthetic_config(dir / "bt");
    const auto result = run_backtest(c, std::nullopt);
    EXPECT_EQ(result.written.size(), 5u);
    std::istringstream report(slurp(dir / "bt/report.csv"));
    std::string line;
    std::getline(report, line);
    EXPECT_EQ(line.rfind("Method,Sex,h,", 0), 0u);
    int rows = 0;
    bool mean = false;
    while (std::getline(report, line)) {
        ++rows;
        mean = mean || line.find(",Mean,") != std::string::npos;
    }
    EXPECT_EQ(rows, 6);
    EXPECT_TRUE(mean);
    const auto manifest = nlohmann::json::parse(slurp(dir / "bt/manifest.json"));
    EXPECT_EQ(manifest.at("config_hash"), config_hash(c));
    EXPECT_EQ(manifest.at("seed"), 9);
}

TEST(Backtest, ByteIdenticalRerunAndManifestReplay) {
    TempDir dir;
    auto c = synthetic_config(dir / "a");
    (void)run_backtest(c, std::nullopt);
    c.output_dir = dir / "b";
    c.threads = 2;
    (void)run_backtest(c, std::nullopt);
    auto replay = load_run_config(dir / "a/manifest.json");
    replay.output_dir = dir / "c";
    (void)run_backtest(replay, std::nullopt);
    for (const char* f : {"report.csv", "region_metrics.csv", "intervals.csv", "forecasts.csv", "manifest.json"}) {
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "c" / f)) << f;
    }
}

TEST(DecomposeAndFactors, WriteOutputs) {
    TempDir dir;
    auto c = synthetic_config(dir / "sim");
    (void)run_simulate(c);
    RunConfig d;
    d.data.kind = SourceKind::panel;
    d.data.panel = dir / "sim/panel.csv";
    d.output_dir = dir / "dec";
    EXPECT_EQ(run_decompose(d, std::nullopt).written.size(), 2u);
    d.output_dir = dir / "fac";
    d.factors = 2;
    EXPECT_EQ(run_factors(d, std::nullopt).written.size(), 4u);
    const auto fj = nlohmann::json::parse(slurp(dir / "fac/factors.json"));
    EXPECT_EQ(fj.at("q"), 2);
}

TEST(Binary, ExitCodes) {
    TempDir dir;
    EXPECT_EQ(run_binary("--version"), 0);
    EXPECT_EQ(run_binary("ingest -i " + (dir / "missing.txt").string() + " -o " + (dir / "x").string()), 2);
    spit(dir / "bad.json", R"({"alpha": 2})");
    EXPECT_EQ(run_binary("backtest --config " + (dir / "bad.json").string()), 2);
    EXPECT_EQ(run_binary("frobnicate"), 2);
    EXPECT_EQ(run_binary("simulate --regions 3 --times 20 --ages 4 --seed 2 -o " + (dir / "sim").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "sim/truth.json"));
    EXPECT_EQ(run_binary("backtest --panel " + (dir / "sim/panel.csv").string() + " --horizons 2 -j 1 -o " +
                         (dir / "bt").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "bt/manifest.json"));
}

#include "hdconf/mx_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "hdconf/error.hpp"

namespace hdconf {

namespace {

std::string lower_case(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

bool is_integer_token(std::string_view token) {
    return !token.empty() &&
           std::all_of(token.begin(), token.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::optional<double> parse_rate(std::string_view token, std::size_t line_no) {
    if (token == ".") return std::nullopt;
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("malformed rate '" + std::string(token) + "'", line_no);
    }
    if (!std::isfinite(value) || value < 0.0) {
        throw ParseError("rate must be finite and non-negative, got '" + std::string(token) + "'",
                         line_no);
    }
    return value;
}

// Smallest positive value of a column of optional rates.
std::optional<double> smallest_positive(const std::vector<std::vector<std::optional<double>>>& raw,
                                        std::size_t age) {
    std::optional<double> best;
    for (const auto& year_rates : raw) {
        const auto& r = year_rates[age];
        if (r && *r > 0.0 && (!best || *r < *best)) best = *r;
    }
    return best;
}

}  // namespace

std::string_view to_string(Sex sex) noexcept {
    switch (sex) {
        case Sex::female: return "F";
        case Sex::male: return "M";
        case Sex::total: return "T";
    }
    return "?";
}

Sex parse_sex(std::string_view text) {
    const std::string key = lower_case(text);
    if (key == "f" || key == "female") return Sex::female;
    if (key == "m" || key == "male") return Sex::male;
    if (key == "t" || key == "total") return Sex::total;
    throw ArgumentError("unknown sex '" + std::string(text) + "'");
}

std::optional<double> MxRow::rate(Sex sex) const noexcept {
    switch (sex) {
        case Sex::female: return female;
        case Sex::male: return male;
        case Sex::total: return total;
    }
    return std::nullopt;
}

AgeLabel parse_age_label(std::string_view label) {
    AgeLabel out;
    std::string_view digits = label;
    if (!digits.empty() && digits.back() == '+') {
        out.open = true;
        digits.remove_suffix(1);
    }
    if (!is_integer_token(digits)) {
        throw ArgumentError("malformed age label '" + std::string(label) + "'");
    }
    std::from_chars(digits.data(), digits.data() + digits.size(), out.lower);
    return out;
}

MortalityTable parse_mx_table(std::istream& input, std::string region_id) {
    MortalityTable table;
    table.region_id = std::move(region_id);
    std::set<std::pair<int, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    bool in_data = false;
    while (std::getline(input, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (!in_data) {
            if (!is_integer_token(fields[0])) continue;  // header
            in_data = true;
        }
        if (fields.size() != 5) {
            throw ParseError("expected 5 fields (Year Age Female Male Total), got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (!is_integer_token(fields[0])) {
            throw ParseError("malformed year '" + std::string(fields[0]) + "'", line_no);
        }
        MxRow row;
        std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), row.year);
        try {
            (void)parse_age_label(fields[1]);
        } catch (const ArgumentError&) {
            throw ParseError("malformed age label '" + std::string(fields[1]) + "'", line_no);
        }
        row.age_label = std::string(fields[1]);
        row.female = parse_rate(fields[2], line_no);
        row.male = parse_rate(fields[3], line_no);
        row.total = parse_rate(fields[4], line_no);
        if (!seen.emplace(row.year, row.age_label).second) {
            throw StructuralError("region " + table.region_id + ": duplicate entry for year " +
                                  std::to_string(row.year) + ", age " + row.age_label +
                                  " (line " + std::to_string(line_no) + ")");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

FunctionalPanel build_panel(std::span<const MortalityTable> tables,
                            const PanelBuildOptions& options) {
    if (options.max_age < 0) throw ArgumentError("build_panel: max_age must be non-negative");
    if (tables.empty() || options.first_year > options.last_year) {
        throw StructuralError("build_panel: empty intersection of years");
    }
    const std::size_t n_years =
        static_cast<std::size_t>(options.last_year - options.first_year + 1);
    const std::size_t n_ages = static_cast<std::size_t>(options.max_age) + 1;

    PanelAxes axes;
    axes.years = consecutive_years(options.first_year, n_years);
    axes.age_grid = integer_age_grid(n_ages);
    CurveArray values(tables.size(), n_years, n_ages);

    for (std::size_t s = 0; s < tables.size(); ++s) {
        const MortalityTable& table = tables[s];
        axes.region_ids.push_back(table.region_id);

        // raw[t][j]; open-group pieces are gathered separately.
        std::vector<std::vector<std::optional<double>>> raw(
            n_years, std::vector<std::optional<double>>(n_ages));
        std::vector<std::vector<double>> open_singles(n_years);
        std::vector<std::optional<double>> open_aggregate(n_years);
        std::vector<bool> year_present(n_years, false);

        for (const MxRow& row : table.rows) {
            if (row.year < options.first_year || row.year > options.last_year) continue;
            const auto t = static_cast<std::size_t>(row.year - options.first_year);
            year_present[t] = true;
            const AgeLabel age = parse_age_label(row.age_label);
            const auto rate = row.rate(options.sex);
            if (options.open_group && age.lower >= options.max_age) {
                if (!age.open) {
                    if (rate) open_singles[t].push_back(*rate);
                } else if (age.lower == options.max_age) {
                    open_aggregate[t] = rate;
                }
                continue;
            }
            if (age.open || age.lower > options.max_age) continue;
            raw[t][static_cast<std::size_t>(age.lower)] = rate;
        }
        for (std::size_t t = 0; t < n_years; ++t) {
            if (!year_present[t]) {
                throw StructuralError("region " + table.region_id + " is missing year " +
                                      std::to_string(axes.years[t]));
            }
            if (options.open_group) {
                auto& singles = open_singles[t];
                if (!singles.empty()) {
                    double sum = 0.0;
                    for (double r : singles) sum += r;
                    raw[t][n_ages - 1] = sum / static_cast<double>(singles.size());
                } else {
                    raw[t][n_ages - 1] = open_aggregate[t];
                }
            }
        }

        // Gap rule: floor per age first, then fall back to the nearest observed ages.
        std::vector<std::optional<double>> observed(n_ages);
        for (std::size_t j = 0; j < n_ages; ++j) observed[j] = smallest_positive(raw, j);
        std::vector<double> age_floor(n_ages, 0.0);
        for (std::size_t j = 0; j < n_ages; ++j) {
            if (observed[j]) {
                age_floor[j] = *observed[j];
                continue;
            }
            std::optional<double> neighbour;
            for (std::size_t d = 1; d < n_ages && !neighbour; ++d) {
                for (std::size_t k : {j - d, j + d}) {
                    // j - d wraps around for d > j and fails the bound check.
                    if (k >= n_ages || !observed[k]) continue;
                    if (!neighbour || *observed[k] < *neighbour) neighbour = observed[k];
                }
            }
            if (!neighbour) {
                throw StructuralError("region " + table.region_id +
                                      " has no positive rate for the selected sex");
            }
            age_floor[j] = 0.5 * *neighbour;
        }
        for (std::size_t t = 0; t < n_years; ++t) {
            for (std::size_t j = 0; j < n_ages; ++j) {
                const auto& r = raw[t][j];
                const double rate = (r && *r > 0.0) ? *r : age_floor[j];
                values(s, t, j) = std::log(rate);
            }
        }
    }
    return FunctionalPanel(std::move(axes), std::move(values), Scale::log);
}

}  // namespace hdconf

#include "hdconf/panel_archive.hpp"

#include <array>
#include <charconv>
#include <sstream>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdconf/error.hpp"

namespace hdconf {

std::string format_number(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw ArgumentError("format_number: conversion failed");
    return std::string(buf.data(), ptr);
}

void write_panel_csv(std::ostream& out, const FunctionalPanel& panel) {
    out << "region,year,age,value\n";
    for (std::size_t s = 0; s < panel.regions(); ++s) {
        for (std::size_t t = 0; t < panel.times(); ++t) {
            for (std::size_t j = 0; j < panel.ages(); ++j) {
                out << panel.region_ids()[s] << ',' << panel.years()[t] << ','
                    << format_number(panel.age_grid()[j]) << ',' << format_number(panel(s, t, j))
                    << '\n';
            }
        }
    }
}

void write_panel_sidecar(std::ostream& out, const FunctionalPanel& panel,
                         const std::map<std::string, std::string>& provenance) {
    nlohmann::ordered_json doc;
    doc["format"] = "hdconf-panel";
    doc["version"] = 1;
    doc["scale"] = std::string(to_string(panel.scale()));
    doc["regions"] = panel.region_ids();
    doc["years"] = panel.years();
    doc["age_grid"] = panel.age_grid();
    doc["provenance"] = provenance;
    out << doc.dump(2) << '\n';
}

namespace {

double parse_double_field(std::string_view field, std::size_t line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError("malformed number '" + std::string(field) + "'", line_no);
    }
    return value;
}

}  // namespace

FunctionalPanel read_panel_archive(std::istream& csv, std::istream& sidecar) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(sidecar);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("panel sidecar: ") + e.what(), 1);
    }
    PanelAxes axes;
    Scale scale = Scale::log;
    try {
        axes.region_ids = doc.at("regions").get<std::vector<std::string>>();
        axes.years = doc.at("years").get<std::vector<int>>();
        axes.age_grid = doc.at("age_grid").get<std::vector<double>>();
        scale = parse_scale(doc.at("scale").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("panel sidecar: ") + e.what());
    }
    axes.validate();

    std::unordered_map<std::string, std::size_t> region_index;
    for (std::size_t s = 0; s < axes.regions(); ++s) region_index[axes.region_ids[s]] = s;
    std::unordered_map<double, std::size_t> age_index;
    for (std::size_t j = 0; j < axes.ages(); ++j) age_index[axes.age_grid[j]] = j;

    CurveArray values(axes.regions(), axes.times(), axes.ages());
    std::vector<bool> filled(values.size(), false);
    std::size_t count = 0;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(csv, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "region,year,age,value") {
                throw ParseError("unexpected panel CSV header '" + line + "'", line_no);
            }
            continue;
        }
        std::array<std::string_view, 4> fields;
        std::string_view rest = line;
        for (std::size_t f = 0; f < 4; ++f) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (f == 3)) {
                throw ParseError("expected 4 comma-separated fields", line_no);
            }
            fields[f] = rest.substr(0, comma);
            if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
        }
        const auto region = region_index.find(std::string(fields[0]));
        if (region == region_index.end()) {
            throw ParseError("unknown region '" + std::string(fields[0]) + "'", line_no);
        }
        const double year_value = parse_double_field(fields[1], line_no);
        const long t = static_cast<long>(year_value) - axes.years.front();
        if (year_value != static_cast<double>(static_cast<long>(year_value)) || t < 0 ||
            t >= static_cast<long>(axes.times())) {
            throw ParseError("year outside the sidecar range", line_no);
        }
        const auto age = age_index.find(parse_double_field(fields[2], line_no));
        if (age == age_index.end()) throw ParseError("age not on the sidecar grid", line_no);
        const std::size_t s = region->second;
        const auto tt = static_cast<std::size_t>(t);
        const std::size_t flat = (s * axes.times() + tt) * axes.ages() + age->second;
        if (filled[flat]) throw StructuralError("panel CSV: duplicate cell at line " +
                                                std::to_string(line_no));
        filled[flat] = true;
        ++count;
        values(s, tt, age->second) = parse_double_field(fields[3], line_no);
    }
    if (count != values.size()) {
        throw StructuralError("panel CSV: expected " + std::to_string(values.size()) +
                              " cells, found " + std::to_string(count));
    }
    return FunctionalPanel(std::move(axes), std::move(values), scale);
}

}  // namespace hdconf

#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "hdconf/panel.hpp"

namespace hdconf {

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_number(double value);

/// Writes "region,year,age,value" rows ordered by region, year, age.
void write_panel_csv(std::ostream& out, const FunctionalPanel& panel);

/// JSON sidecar with the axes, the scale and free-form provenance strings.
void write_panel_sidecar(std::ostream& out, const FunctionalPanel& panel,
                         const std::map<std::string, std::string>& provenance = {});

/// Reads a panel written by write_panel_csv + write_panel_sidecar. Every cell named by
/// the sidecar axes must appear exactly once in the CSV.
[[nodiscard]] FunctionalPanel read_panel_archive(std::istream& csv, std::istream& sidecar);

}  // namespace hdconf

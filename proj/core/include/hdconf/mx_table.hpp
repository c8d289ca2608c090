#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdconf/panel.hpp"

namespace hdconf {

enum class Sex { female, male, total };

[[nodiscard]] std::string_view to_string(Sex sex) noexcept;
/// Accepts "F"/"M"/"T" (any case) or "female"/"male"/"total".
[[nodiscard]] Sex parse_sex(std::string_view text);

/// One line of an "Mx 1x1" death-rate table. Missing rates ("." in the file) are nullopt.
struct MxRow {
    int year = 0;
    std::string age_label;
    std::optional<double> female;
    std::optional<double> male;
    std::optional<double> total;

    [[nodiscard]] std::optional<double> rate(Sex sex) const noexcept;
    bool operator==(const MxRow&) const = default;
};

/// Parsed death-rate table of one region. (year, age_label) pairs are unique and
/// every present rate is finite and non-negative.
struct MortalityTable {
    std::string region_id;
    std::vector<MxRow> rows;
};

/// Lower bound of an age label such as "42" or "110+"; `open` is set for "+" labels.
struct AgeLabel {
    int lower = 0;
    bool open = false;
};

/// Throws ArgumentError if the label is not digits optionally followed by '+'.
[[nodiscard]] AgeLabel parse_age_label(std::string_view label);

/// Parses an HMD/CHMD "Mx 1x1" text table (Year Age Female Male Total).
///
/// Leading header lines are skipped until the first line that starts with a year.
/// After that every non-blank line must be a five-field data line. Throws
/// ParseError (with the line number) on malformed fields and StructuralError on
/// a duplicated (year, age) pair.
[[nodiscard]] MortalityTable parse_mx_table(std::istream& input, std::string region_id);

struct PanelBuildOptions {
    Sex sex = Sex::female;
    int first_year = 0;
    int last_year = 0;
    /// Ages 0..max_age-1 are single years; the last grid point is either the open
    /// group "max_age+" (open_group) or the single age max_age.
    int max_age = 100;
    bool open_group = true;
};

/// Assembles a log-scale panel from one table per region.
///
/// Zero or missing rates are replaced by the smallest positive rate observed for
/// the same region and age within the year range; when an age has none, half the
/// smallest positive rate at the nearest ages that have data is used.
[[nodiscard]] FunctionalPanel build_panel(std::span<const MortalityTable> tables,
                                          const PanelBuildOptions& options);

}  // namespace hdconf

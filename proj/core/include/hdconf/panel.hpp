#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdconf/curve_array.hpp"

namespace hdconf {

enum class Scale { log, natural };

[[nodiscard]] std::string_view to_string(Scale scale) noexcept;
[[nodiscard]] Scale parse_scale(std::string_view text);

/// Region/year/age axes shared by a panel and everything derived from it.
struct PanelAxes {
    std::vector<std::string> region_ids;
    std::vector<int> years;
    std::vector<double> age_grid;

    [[nodiscard]] std::size_t regions() const noexcept { return region_ids.size(); }
    [[nodiscard]] std::size_t times() const noexcept { return years.size(); }
    [[nodiscard]] std::size_t ages() const noexcept { return age_grid.size(); }

    /// Throws ArgumentError unless the years are consecutive, the grid is strictly
    /// increasing and every axis is non-empty.
    void validate() const;

    bool operator==(const PanelAxes&) const = default;
};

/// N regions x T consecutive years x J ages of finite values. Immutable once built.
class FunctionalPanel {
public:
    FunctionalPanel(PanelAxes axes, CurveArray values, Scale scale);

    [[nodiscard]] const PanelAxes& axes() const noexcept { return axes_; }
    [[nodiscard]] const CurveArray& values() const noexcept { return values_; }
    [[nodiscard]] Scale scale() const noexcept { return scale_; }

    [[nodiscard]] std::size_t regions() const noexcept { return values_.rows(); }
    [[nodiscard]] std::size_t times() const noexcept { return values_.times(); }
    [[nodiscard]] std::size_t ages() const noexcept { return values_.ages(); }
    [[nodiscard]] const std::vector<double>& age_grid() const noexcept { return axes_.age_grid; }
    [[nodiscard]] const std::vector<int>& years() const noexcept { return axes_.years; }
    [[nodiscard]] const std::vector<std::string>& region_ids() const noexcept {
        return axes_.region_ids;
    }

    [[nodiscard]] double operator()(std::size_t s, std::size_t t, std::size_t j) const {
        return values_(s, t, j);
    }
    [[nodiscard]] std::span<const double> curve(std::size_t s, std::size_t t) const {
        return values_.curve(s, t);
    }

    /// Panel restricted to the first `count` years.
    [[nodiscard]] FunctionalPanel leading_years(std::size_t count) const;
    /// Panel restricted to years first_year..last_year inclusive.
    [[nodiscard]] FunctionalPanel year_range(int first_year, int last_year) const;

    /// Elementwise exp of a log-scale panel.
    [[nodiscard]] FunctionalPanel exponentiated() const;

    bool operator==(const FunctionalPanel&) const = default;

private:
    PanelAxes axes_;
    CurveArray values_;
    Scale scale_;
};

/// Integer axis 0, 1, ..., count-1 as an age grid.
[[nodiscard]] std::vector<double> integer_age_grid(std::size_t count);

/// Consecutive years first, first+1, ..., first+count-1.
[[nodiscard]] std::vector<int> consecutive_years(int first, std::size_t count);

}  // namespace hdconf

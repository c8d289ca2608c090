#include "hdconf/panel.hpp"

#include <cmath>
#include <numeric>

#include "hdconf/error.hpp"

namespace hdconf {

std::string_view to_string(Scale scale) noexcept {
    return scale == Scale::log ? "log" : "natural";
}

Scale parse_scale(std::string_view text) {
    if (text == "log") return Scale::log;
    if (text == "natural") return Scale::natural;
    throw ArgumentError("unknown scale '" + std::string(text) + "'");
}

void PanelAxes::validate() const {
    if (region_ids.empty() || years.empty() || age_grid.empty()) {
        throw ArgumentError("panel axes must be non-empty");
    }
    for (std::size_t t = 1; t < years.size(); ++t) {
        if (years[t] != years[t - 1] + 1) {
            throw ArgumentError("panel years must be consecutive");
        }
    }
    for (std::size_t j = 0; j < age_grid.size(); ++j) {
        if (!std::isfinite(age_grid[j])) {
            throw ArgumentError("age grid must be finite");
        }
        if (j > 0 && !(age_grid[j] > age_grid[j - 1])) {
            throw ArgumentError("age grid must be strictly increasing");
        }
    }
}

FunctionalPanel::FunctionalPanel(PanelAxes axes, CurveArray values, Scale scale)
    : axes_(std::move(axes)), values_(std::move(values)), scale_(scale) {
    axes_.validate();
    if (values_.rows() != axes_.regions() || values_.times() != axes_.times() ||
        values_.ages() != axes_.ages()) {
        throw ArgumentError("panel values do not match the axes");
    }
    for (std::size_t s = 0; s < regions(); ++s) {
        for (std::size_t t = 0; t < times(); ++t) {
            for (std::size_t j = 0; j < ages(); ++j) {
                if (!std::isfinite(values_(s, t, j))) {
                    throw ArgumentError("panel value is not finite at region " +
                                        axes_.region_ids[s] + ", year " +
                                        std::to_string(axes_.years[t]) + ", age index " +
                                        std::to_string(j));
                }
            }
        }
    }
}

FunctionalPanel FunctionalPanel::leading_years(std::size_t count) const {
    if (count == 0 || count > times()) {
        throw ArgumentError("leading_years: count out of range");
    }
    PanelAxes axes = axes_;
    axes.years.resize(count);
    return FunctionalPanel(std::move(axes), values_.leading_times(count), scale_);
}

FunctionalPanel FunctionalPanel::year_range(int first_year, int last_year) const {
    if (first_year > last_year || first_year < axes_.years.front() || last_year > axes_.years.back()) {
        throw ArgumentError("year_range: " + std::to_string(first_year) + "-" + std::to_string(last_year) +
                            " is outside the panel years " + std::to_string(axes_.years.front()) + "-" +
                            std::to_string(axes_.years.back()));
    }
    const auto first = static_cast<std::size_t>(first_year - axes_.years.front());
    const auto count = static_cast<std::size_t>(last_year - first_year + 1);
    PanelAxes axes = axes_;
    axes.years = consecutive_years(first_year, count);
    return FunctionalPanel(std::move(axes), values_.time_slice(first, count), scale_);
}

FunctionalPanel FunctionalPanel::exponentiated() const {
    if (scale_ != Scale::log) {
        throw ArgumentError("exponentiated: panel is not on the log scale");
    }
    CurveArray out = values_;
    for (double& v : out.values()) v = std::exp(v);
    return FunctionalPanel(axes_, std::move(out), Scale::natural);
}

std::vector<double> integer_age_grid(std::size_t count) {
    std::vector<double> grid(count);
    std::iota(grid.begin(), grid.end(), 0.0);
    return grid;
}

std::vector<int> consecutive_years(int first, std::size_t count) {
    std::vector<int> years(count);
    std::iota(years.begin(), years.end(), first);
    return years;
}

}  // namespace hdconf

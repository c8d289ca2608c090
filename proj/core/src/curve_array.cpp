#include "hdconf/curve_array.hpp"

#include <algorithm>
#include <cmath>

#include "hdconf/error.hpp"

namespace hdconf {

CurveArray::CurveArray(std::size_t rows, std::size_t times, std::size_t ages, double fill)
    : rows_(rows), times_(times), ages_(ages), data_(rows * times * ages, fill) {}

CurveArray::CurveArray(std::size_t rows, std::size_t times, std::size_t ages,
                       std::vector<double> values)
    : rows_(rows), times_(times), ages_(ages), data_(std::move(values)) {
    if (data_.size() != rows * times * ages) {
        throw ArgumentError("CurveArray: value count does not match dimensions");
    }
}

CurveArray CurveArray::leading_times(std::size_t count) const {
    return time_slice(0, count);
}

CurveArray CurveArray::time_slice(std::size_t first, std::size_t count) const {
    if (first > times_ || count > times_ - first) {
        throw ArgumentError("CurveArray::time_slice: range exceeds time dimension");
    }
    CurveArray out(rows_, count, ages_);
    for (std::size_t s = 0; s < rows_; ++s) {
        for (std::size_t t = 0; t < count; ++t) {
            auto src = curve(s, first + t);
            std::copy(src.begin(), src.end(), out.curve(s, t).begin());
        }
    }
    return out;
}

double max_abs_difference(const CurveArray& a, const CurveArray& b) {
    if (!a.same_shape(b)) {
        throw ArgumentError("max_abs_difference: shape mismatch");
    }
    double worst = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        worst = std::max(worst, std::abs(va[i] - vb[i]));
    }
    return worst;
}

}  // namespace hdconf

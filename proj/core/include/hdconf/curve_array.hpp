#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hdconf {

/// Dense rows x times x ages array of curve values, stored row-major with the
/// age index fastest. Used for panels, residual panels and residual sets.
class CurveArray {
public:
    CurveArray() = default;
    CurveArray(std::size_t rows, std::size_t times, std::size_t ages, double fill = 0.0);
    CurveArray(std::size_t rows, std::size_t times, std::size_t ages, std::vector<double> values);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t times() const noexcept { return times_; }
    [[nodiscard]] std::size_t ages() const noexcept { return ages_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] double operator()(std::size_t s, std::size_t t, std::size_t j) const {
        return data_[index(s, t, j)];
    }
    double& operator()(std::size_t s, std::size_t t, std::size_t j) { return data_[index(s, t, j)]; }

    [[nodiscard]] std::span<const double> curve(std::size_t s, std::size_t t) const {
        return {data_.data() + index(s, t, 0), ages_};
    }
    [[nodiscard]] std::span<double> curve(std::size_t s, std::size_t t) {
        return {data_.data() + index(s, t, 0), ages_};
    }

    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] std::span<double> values() noexcept { return data_; }

    [[nodiscard]] bool same_shape(const CurveArray& other) const noexcept {
        return rows_ == other.rows_ && times_ == other.times_ && ages_ == other.ages_;
    }

    /// Copy of the first `count` time slices of every row.
    [[nodiscard]] CurveArray leading_times(std::size_t count) const;
    /// Copy of time slices first..first+count-1 of every row.
    [[nodiscard]] CurveArray time_slice(std::size_t first, std::size_t count) const;

    bool operator==(const CurveArray&) const = default;

private:
    [[nodiscard]] std::size_t index(std::size_t s, std::size_t t, std::size_t j) const noexcept {
        return (s * times_ + t) * ages_ + j;
    }

    std::size_t rows_ = 0;
    std::size_t times_ = 0;
    std::size_t ages_ = 0;
    std::vector<double> data_;
};

/// Largest absolute elementwise difference; throws ArgumentError on shape mismatch.
[[nodiscard]] double max_abs_difference(const CurveArray& a, const CurveArray& b);

}  // namespace hdconf

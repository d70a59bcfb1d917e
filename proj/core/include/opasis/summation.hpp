#pragma once

#include <cmath>
#include <span>

namespace opasis {

/// Neumaier compensated sum. Order-dependent but deterministic for a fixed
/// order, which is all reproducibility needs.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double v) noexcept {
        double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
    CompensatedSum s;
    for (double v : values) s += v;
    return s.value();
}

}  // namespace opasis

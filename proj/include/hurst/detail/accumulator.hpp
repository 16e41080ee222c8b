// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

namespace hurst::detail {

// Neumaier's variant of Kahan summation. The correction term also
// survives when an addend is larger than the running sum.
template <typename T = double>
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(T init) : sum_(init) {}

    CompensatedSum& operator+=(T x)
    {
        const T t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        return *this;
    }

    CompensatedSum& operator-=(T x) { return *this += -x; }

    T value() const { return sum_ + comp_; }

private:
    T sum_{};
    T comp_{};
};

} // namespace hurst::detail

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace polymkt {

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Order-independent reduction: values are deposited per slot (e.g. per path)
/// and folded in fixed index order, so the result does not depend on which
/// worker produced which slot.
class SlotAccumulator {
public:
    explicit SlotAccumulator(std::size_t slots) : values_(slots, 0.0) {}

    void set(std::size_t slot, double value) { values_[slot] = value; }

    double sum() const {
        CompensatedSum s;
        for (double v : values_) s.add(v);
        return s.value();
    }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> values_;
};

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

/// Sample mean and standard error over a span, compensated summation.
inline MeanStderr mean_stderr(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_stderr: empty sample");
    CompensatedSum s;
    for (double v : values) s.add(v);
    const double mean = s.value() / static_cast<double>(values.size());
    CompensatedSum sq;
    for (double v : values) sq.add((v - mean) * (v - mean));
    const double n = static_cast<double>(values.size());
    const double var = values.size() > 1 ? sq.value() / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n), values.size()};
}

/// Sample covariance of two aligned spans.
inline double sample_covariance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("sample_covariance: need two aligned samples of size >= 2");
    const double ma = mean_stderr(a).mean;
    const double mb = mean_stderr(b).mean;
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add((a[i] - ma) * (b[i] - mb));
    return s.value() / (static_cast<double>(a.size()) - 1.0);
}

}  // namespace polymkt

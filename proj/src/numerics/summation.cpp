#include "msrds/numerics/summation.hpp"

#include <cmath>
#include <utility>

namespace msrds::numerics {

void ExactSum::add(double x) {
    if (!std::isfinite(x) || has_special_) {
        if (!has_special_) {
            // fold what we have so far, then continue with IEEE arithmetic
            special_ = value();
            has_special_ = true;
            partials_.clear();
        }
        special_ += x;
        return;
    }
    // Grow-expansion step: after the loop the partials are again
    // non-overlapping and sum exactly to the previous value plus x.
    std::size_t i = 0;
    for (std::size_t j = 0; j < partials_.size(); ++j) {
        double y = partials_[j];
        if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) partials_[i++] = lo;
        x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
}

void ExactSum::merge(const ExactSum& other) {
    if (other.has_special_) {
        add(other.special_);
        return;
    }
    for (double p : other.partials_) add(p);
}

double ExactSum::value() const {
    if (has_special_) return special_;
    if (partials_.empty()) return 0.0;

    // Round the exact expansion to the nearest double. Adapted from the
    // tail of fsum: accumulate from the largest partial down and apply a
    // one-bit correction when the discarded tail would flip the rounding.
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

void ExactSum::reset() {
    partials_.clear();
    special_ = 0.0;
    has_special_ = false;
}

double stable_sum(std::span<const double> values) {
    ExactSum acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

double stable_sum_chunked(std::span<const double> values, std::size_t chunk) {
    if (chunk == 0) chunk = kReductionChunk;
    ExactSum total;
    for (std::size_t begin = 0; begin < values.size(); begin += chunk) {
        const std::size_t len = std::min(chunk, values.size() - begin);
        ExactSum part;
        for (std::size_t k = 0; k < len; ++k) part.add(values[begin + k]);
        total.merge(part);
    }
    return total.value();
}

}  // namespace msrds::numerics

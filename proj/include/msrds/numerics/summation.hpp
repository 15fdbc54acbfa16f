#ifndef MSRDS_NUMERICS_SUMMATION_HPP
#define MSRDS_NUMERICS_SUMMATION_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace msrds::numerics {

// Error-free accumulation of doubles (Shewchuk partials, as in fsum).
// The running value is represented exactly as a sum of non-overlapping
// doubles, so the rounded result does not depend on how the input was
// split into chunks or permuted. Parallel reductions keep bitwise
// reproducibility by summing fixed-size chunks and merging them in index
// order; with this accumulator the chunk size does not even matter.
class ExactSum {
  public:
    // Adds one value. Non-finite inputs switch the accumulator into a
    // pass-through mode where IEEE semantics (inf/nan propagation) apply.
    void add(double x);

    // Folds another accumulator into this one; exact.
    void merge(const ExactSum& other);

    // Correctly rounded value of the exact sum accumulated so far.
    double value() const;

    void reset();

  private:
    std::vector<double> partials_;  // increasing magnitude, non-overlapping
    double special_ = 0.0;
    bool has_special_ = false;
};

// Compensated sum of a sequence, fixed left-to-right order. Exactly
// rounded, hence invariant under chunking and permutation of the input.
double stable_sum(std::span<const double> values);

// Chunk size used by parallel reductions throughout the project. The
// result is independent of this value (the sum is exact); fixing it keeps
// the memory access pattern of concurrent callers deterministic as well.
inline constexpr std::size_t kReductionChunk = 4096;

// Sums in chunks of `chunk` elements, merging partial sums in chunk order.
double stable_sum_chunked(std::span<const double> values, std::size_t chunk);

}  // namespace msrds::numerics

#endif

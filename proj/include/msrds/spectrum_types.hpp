#ifndef MSRDS_SPECTRUM_TYPES_HPP
#define MSRDS_SPECTRUM_TYPES_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace msrds::spectrum {

enum class Method { kEigenLift, kFiniteTime };
enum class ConeVerdict { kRetained, kRejected, kInconclusive };

const char* to_string(Method m);
const char* to_string(ConeVerdict v);

struct Interval {
    double lower;
    double upper;
};

// One growth-rate candidate of the lifted operator: a cluster of lifted
// eigenvalues sharing (up to merge tolerance) the mean-square rate
// Re(lambda)/2, together with the admissibility verdict of its invariant
// subspace against the moment cone.
struct Candidate {
    double rate_lo;
    double rate_hi;
    std::size_t multiplicity;
    ConeVerdict verdict;
    std::vector<std::complex<double>> eigenvalues;
};

// A dichotomy-spectrum estimate: disjoint sorted intervals, at most
// d(d+1) of them, all inside [-Gamma, Gamma]. stable_dims has one entry
// per resolvent gap (including the two unbounded gaps) and is
// non-decreasing from left to right.
struct SpectrumEstimate {
    std::vector<Interval> intervals;
    Method method = Method::kEigenLift;
    std::vector<std::size_t> stable_dims;
    double gamma_bound = 0.0;
    double uncertainty = 0.0;  // interval inflation used by resolvent queries
    std::vector<Candidate> details;
};

}  // namespace msrds::spectrum

#endif

#ifndef MSRDS_SPECTRUM_HPP
#define MSRDS_SPECTRUM_HPP

#include <cstdint>
#include <limits>

#include "msrds/moment_dynamics.hpp"
#include "msrds/numerics/eigen.hpp"
#include "msrds/spectrum_types.hpp"

namespace msrds::spectrum {

using moment_dynamics::CoefficientSystem;
using moment_dynamics::LiftedOperator;

// Explicit enclosure radius Gamma = 2 d m + 2 d^2 m^2 for entrywise bound
// m: the resolvent set contains (-inf, -Gamma) and (Gamma, inf).
double gamma_bound(const CoefficientSystem& coeffs);

struct ConeFilterOptions {
    double proj_tol = 1e-9;       // minimum relative projection norm of a sample
    double cone_tol = 1e-7;       // admissibility slack for filtered directions
    int n_samples = 4096;         // seeded admissible samples for subspaces dim >= 2
    int n_combinations = 512;     // combination search size for rejection evidence
    std::uint64_t seed = 0x5eedULL;
};

// Decides whether the invariant subspace of an eigenvalue cluster of the
// lifted operator meets the admissible cone. One-dimensional subspaces are
// decided exactly (the cone is closed and scale-invariant, so membership
// of +-basis settles it); higher dimensions use seeded admissible samples
// projected onto the subspace, with `inconclusive` instead of a guess when
// neither containment nor exclusion evidence is found.
ConeVerdict cone_filter(const LiftedOperator& op, const numerics::EigenCluster& cluster,
                        std::size_t d, const ConeFilterOptions& opt = {});

struct SpectrumTolerances {
    double cluster = -1.0;  // <= 0: 1e-7 * (1 + spectral radius)
    double merge = 1e-9;    // retained rates closer than this share an interval
    ConeFilterOptions cone;
};

// Exact-in-structure estimator for autonomous systems: eigenvalues of the
// block-triangular lifted operator give candidate rates Re(lambda)/2;
// a candidate enters the spectrum iff its invariant subspace meets the
// admissible cone. Candidates with inconclusive verdicts are flagged in
// `details` and excluded from the intervals, never silently dropped.
SpectrumEstimate autonomous_spectrum(const CoefficientSystem& coeffs,
                                     const SpectrumTolerances& tol = {});

// One finite-horizon growth-rate measurement.
struct RateSample {
    std::uint64_t seed;
    double horizon;
    double rate;
};

// Mean-square exponents (1 / 2T) log(trace S(T) / trace S(0)) of seeded
// admissible samples, preceded by structured states (pure-variance states
// with m = 0 and deterministic states S = m m^T) that excite the extreme
// modes. Propagation is renormalized in sub-horizon chunks so strongly
// expanding systems do not overflow.
std::vector<RateSample> finite_time_exponents(
    const CoefficientSystem& coeffs, double t_end, std::size_t n_samples,
    std::uint64_t seed, const moment_dynamics::Tolerances& ode_tol = {1e-8, 1e-10});

// Single-linkage clustering of rates into intervals. `max_intervals`
// enforces the d(d+1) cap when positive (closest clusters merge first);
// a finite `gamma` clips the intervals to the enclosure [-Gamma, Gamma].
SpectrumEstimate finite_time_spectrum(const std::vector<RateSample>& samples,
                                      double cluster_width,
                                      double gamma = std::numeric_limits<double>::infinity(),
                                      std::size_t max_intervals = 0);

struct FiniteTimeOptions {
    double horizon = 50.0;
    std::size_t n_samples = 64;
    double cluster_width = 0.05;
    std::uint64_t seed = 0x5eedULL;
    // rates only need a few digits; the default is far below the cluster
    // width yet much cheaper than oracle-grade tolerances
    moment_dynamics::Tolerances ode_tol{1e-8, 1e-10};
};

// Convenience pipeline: exponents + clustering with the system's Gamma and
// interval cap applied.
SpectrumEstimate finite_time_estimate(const CoefficientSystem& coeffs,
                                      const FiniteTimeOptions& opt = {});

// True iff gamma lies outside every interval of the estimate inflated by
// the method's uncertainty.
bool resolvent_check(const CoefficientSystem& coeffs, double gamma,
                     const SpectrumEstimate& estimate);

}  // namespace msrds::spectrum

#endif

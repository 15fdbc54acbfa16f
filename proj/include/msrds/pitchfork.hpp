#ifndef MSRDS_PITCHFORK_HPP
#define MSRDS_PITCHFORK_HPP

#include <cstdint>
#include <vector>

#include "msrds/moment_dynamics.hpp"
#include "msrds/spectrum_types.hpp"

namespace msrds::pitchfork {

// Parameters of the scalar mean-field model
// dX = (alpha X + beta E[X] - X E[X^2]) dt + X dW; the attractor
// experiments fix beta = 1.
struct PitchforkParams {
    double alpha;
    double beta = 1.0;
};

// Moment plane of the reduced ODE: x = E[X], y = E[X^2], with y >= x^2.
struct ReducedState {
    double x;
    double y;
};

void validate_reduced_state(const ReducedState& state);

enum class BranchClass { kTrivial, kPositiveBranch, kNegativeBranch, kNone };
const char* to_string(BranchClass c);

// One family of pullback integrations: start times s decreasing toward
// -infinity, all ending at the same t.
struct PullbackRun {
    double t;
    std::vector<double> start_times;
    std::vector<ReducedState> limits;
    BranchClass converged_to;
    bool monotone;  // distances to the deepest limit are non-increasing
};

// Exact squared mean-square norm of the propagator of the linearized
// model dZ = (alpha Z + beta E[Z]) dt + Z dW applied to a state with
// ||Z_s||_ms^2 = norm_sq and E[Z_s] = mean. Continuous in beta across the
// resonance at beta = 1/2.
double analytic_ms_norm_sq(const PitchforkParams& params, double s, double t,
                           double norm_sq, double mean);

// The exact dichotomy spectrum of the linearized model:
// {alpha + 1/2} plus {alpha + beta} when beta > 1/2.
spectrum::SpectrumEstimate analytic_spectrum(const PitchforkParams& params);

// Reduced vector field (beta = 1): dx = x(alpha + 1 - y),
// dy = (2 alpha + 1) y + 2 x^2 - 2 y^2.
ReducedState reduced_rhs(const PitchforkParams& params, const ReducedState& state);

struct SteadyState {
    ReducedState state;
    bool valid;  // y >= 0 and the state exists for this alpha
};

// All steady states of the reduced system with validity flags: the origin
// (always), (+-sqrt((alpha+1)/2), alpha+1) for alpha > -1, and
// (0, alpha + 1/2) for alpha >= -1/2.
std::vector<SteadyState> steady_states(const PitchforkParams& params);

// Absorbing-set data: radius sqrt(|alpha| + 2) and the pullback depth
// log(R^2 / (|alpha| + 2)) needed to absorb families of ms-norm <= R.
struct AbsorbingData {
    double radius;
    double absorb_time;
};
AbsorbingData absorbing_data(const PitchforkParams& params, double big_r);

struct PullbackOptions {
    double classify_tol = 1e-4;
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
};

// Nearest valid steady state within tol, or kNone. The (0, alpha + 1/2)
// state has no branch label and also classifies as kNone.
BranchClass classify_limit(const PitchforkParams& params, const ReducedState& limit,
                           double tol = 1e-4);

// Integrates the reduced ODE from every start time to t and classifies the
// deepest limit by its nearest valid steady state.
PullbackRun pullback_run(const PitchforkParams& params,
                         const std::vector<ReducedState>& initials, double t,
                         const std::vector<double>& start_times,
                         const PullbackOptions& opt = {});

// Convenience: the same constant initial state at every start time.
PullbackRun pullback_run(const PitchforkParams& params, const ReducedState& initial,
                         double t, const std::vector<double>& start_times,
                         const PullbackOptions& opt = {});

struct SweepPoint {
    double alpha;
    BranchClass classification;
    ReducedState limit;
    double ms_norm;
};

// One pullback run per alpha at the given depth, shared initial state.
std::vector<SweepPoint> bifurcation_sweep(const std::vector<double>& alpha_grid,
                                          const ReducedState& initial,
                                          double pullback_depth,
                                          const PullbackOptions& opt = {});

// Integrates the reduced ODE from (s, state) to time t.
ReducedState integrate_reduced(const PitchforkParams& params, double s, double t,
                               const ReducedState& state, double rel_tol = 1e-12,
                               double abs_tol = 1e-14);

}  // namespace msrds::pitchfork

#endif

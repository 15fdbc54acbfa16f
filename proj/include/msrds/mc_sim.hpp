#ifndef MSRDS_MC_SIM_HPP
#define MSRDS_MC_SIM_HPP

#include <cstdint>
#include <functional>
#include <optional>

#include "msrds/moment_dynamics.hpp"

namespace msrds::mc_sim {

using moment_dynamics::CoefficientSystem;
using moment_dynamics::MomentState;
using numerics::Matrix;
using numerics::Vector;

// Model driven by the interacting-particle simulator. The linear kind uses
// a CoefficientSystem; the pitchfork kind is the scalar mean-field model
// with drift alpha x + beta E[X] - x E[X^2] and diffusion x, where the
// expectations are realized as ensemble averages.
struct ModelSpec {
    enum class Kind { kLinear, kPitchfork };

    Kind kind;
    std::optional<CoefficientSystem> coeffs;  // linear
    double alpha = 0.0;                       // pitchfork
    double beta = 1.0;

    static ModelSpec linear(CoefficientSystem cs);
    static ModelSpec pitchfork(double alpha, double beta);
    std::size_t dimension() const;
};

// Particle states at one time point. Particles are row-major (N x d); each
// particle carries its own scalar Wiener stream keyed by (seed, index).
struct Ensemble {
    std::size_t d = 1;
    std::vector<double> particles;
    double time = 0.0;
    std::uint64_t seed = 0;

    std::size_t size() const { return d == 0 ? 0 : particles.size() / d; }
};

struct SimOptions {
    std::size_t threads = 1;      // bitwise-identical results for any value
    double blowup_guard = 1e12;   // |x| beyond this raises SimulationDiverged
};

// Called once with the initial ensemble (step 0) and after every grid step.
using Observer = std::function<void(std::size_t step, double t, const Ensemble&)>;

// Euler-Maruyama over the uniform grid s, s+dt, ... (final step shortened
// to land on t). Particles are initialized as Gaussians with mean m and
// covariance S - m m^T from `init`. Requires dt <= 1e-2 and N >= 100.
Ensemble simulate_ensemble(const ModelSpec& model, const MomentState& init, double s,
                           double t, double dt, std::size_t n, std::uint64_t seed,
                           const Observer& observer = {}, const SimOptions& opt = {});

// Same dynamics from an explicit particle array.
Ensemble simulate_ensemble(const ModelSpec& model, Ensemble init, double t, double dt,
                           const Observer& observer = {}, const SimOptions& opt = {});

// Ensemble mean and second raw moment with their standard errors (all
// reductions via fixed-chunk compensated sums).
struct MomentEstimate {
    MomentState state;
    Vector se_mean;     // d entries
    Matrix se_secmom;   // d x d, symmetric
};
MomentEstimate estimate_moments(const Ensemble& ens, const SimOptions& opt = {});

// Moment-ODE reference for a model: propagate_moments for linear systems,
// the reduced moment system for the pitchfork model.
MomentState moment_reference(const ModelSpec& model, const MomentState& init, double s,
                             double t);

// Runs the simulator and the moment ODE (reduced moment system for the
// pitchfork model) on identical inputs and reports componentwise z-scores
// (mc - ode) / standard_error.
struct ComparisonReport {
    MomentEstimate mc;
    MomentState ode;
    Vector z_mean;
    Matrix z_secmom;
    double max_abs_z;
};
ComparisonReport compare_with_moments(const ModelSpec& model, const MomentState& init,
                                      double s, double t, double dt, std::size_t n,
                                      std::uint64_t seed, const SimOptions& opt = {});

}  // namespace msrds::mc_sim

#endif

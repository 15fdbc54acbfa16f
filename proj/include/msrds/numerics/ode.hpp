#ifndef MSRDS_NUMERICS_ODE_HPP
#define MSRDS_NUMERICS_ODE_HPP

#include <functional>
#include <span>
#include <vector>

#include "msrds/numerics/matrix.hpp"

namespace msrds::numerics {

// Initial value problem y' = rhs(t, y) on [t0, t1]. The rhs writes the
// derivative into `dy` (same length as `y`).
struct OdeProblem {
    std::size_t dimension;
    std::function<void(double t, std::span<const double> y, std::span<double> dy)> rhs;
    double t0;
    double t1;
    Vector y0;
};

// Classical RK4 on a uniform grid; the final partial step is shortened to
// land exactly on t1. Throws IntegrationDivergedError when the state stops
// being finite.
Vector integrate_fixed(const OdeProblem& problem, double step);

// Dormand-Prince 4(5) embedded pair with PI step-size control. The local
// error per step is kept below abs_tol + rel_tol * |y| componentwise.
// Throws StiffnessError when the step underflows 1e-14 * (t1 - t0) and
// IntegrationDivergedError on non-finite states.
Vector integrate_adaptive(const OdeProblem& problem, double rel_tol, double abs_tol);

}  // namespace msrds::numerics

#endif

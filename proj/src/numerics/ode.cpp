#include "msrds/numerics/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "msrds/errors.hpp"

namespace msrds::numerics {

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void validate(const OdeProblem& p) {
    if (p.dimension == 0) throw std::invalid_argument("OdeProblem: dimension must be >= 1");
    if (p.y0.size() != p.dimension)
        throw std::invalid_argument("OdeProblem: y0 length does not match dimension");
    if (!(p.t1 >= p.t0)) throw std::invalid_argument("OdeProblem: t1 must be >= t0");
    if (!p.rhs) throw std::invalid_argument("OdeProblem: missing rhs");
}

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
// difference between the 5th and embedded 4th order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Vector integrate_fixed(const OdeProblem& problem, double step) {
    validate(problem);
    if (problem.t1 == problem.t0) return problem.y0;
    if (!(step > 0.0) || step > problem.t1 - problem.t0)
        throw std::invalid_argument("integrate_fixed: step must be in (0, t1 - t0]");

    const std::size_t n = problem.dimension;
    Vector y = problem.y0;
    Vector k1(n), k2(n), k3(n), k4(n), tmp(n);
    double t = problem.t0;

    while (t < problem.t1) {
        const double h = std::min(step, problem.t1 - t);
        problem.rhs(t, y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        problem.rhs(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        problem.rhs(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        problem.rhs(t + h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t = (problem.t1 - t <= step) ? problem.t1 : t + h;
        if (!all_finite(y))
            throw IntegrationDivergedError("integrate_fixed: non-finite state", t);
    }
    return y;
}

Vector integrate_adaptive(const OdeProblem& problem, double rel_tol, double abs_tol) {
    validate(problem);
    if (!(rel_tol > 0.0 && rel_tol < 1.0) || !(abs_tol > 0.0 && abs_tol < 1.0))
        throw std::invalid_argument("integrate_adaptive: tolerances must be in (0, 1)");
    if (problem.t1 == problem.t0) return problem.y0;

    const std::size_t n = problem.dimension;
    const double span = problem.t1 - problem.t0;
    const double h_min = 1e-14 * span;

    Vector y = problem.y0;
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ynew(n), tmp(n);
    double t = problem.t0;

    problem.rhs(t, y, k1);
    if (!all_finite(k1))
        throw IntegrationDivergedError("integrate_adaptive: non-finite derivative", t);

    // initial step from the scaled size of y and y'
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = abs_tol + rel_tol * std::fabs(y[i]);
        d0 = std::max(d0, std::fabs(y[i]) / sc);
        d1 = std::max(d1, std::fabs(k1[i]) / sc);
    }
    double h = (d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6 * span;
    h = std::clamp(h, h_min * 16.0, span);
    if (h <= 0.0) h = 1e-6 * span;

    constexpr double safety = 0.9;
    constexpr double exp_err = 0.2 - 0.04 * 0.75;  // PI controller, beta = 0.04
    constexpr double exp_old = 0.04;
    double err_old = 1e-4;
    bool rejected = false;

    while (t < problem.t1) {
        if (h < h_min)
            throw StiffnessError("integrate_adaptive: step size underflow at t = " +
                                 std::to_string(t));
        h = std::min(h, problem.t1 - t);
        const bool last = (t + h >= problem.t1);

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        problem.rhs(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        problem.rhs(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        problem.rhs(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        problem.rhs(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                 a65 * k5[i]);
        problem.rhs(t + h, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                  b6 * k6[i]);
        problem.rhs(t + h, ynew, k7);

        if (!all_finite(ynew))
            throw IntegrationDivergedError("integrate_adaptive: non-finite state", t + h);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sc =
                abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0 || h <= h_min * 2.0) {
            t = last ? problem.t1 : t + h;
            y = ynew;
            k1 = k7;  // FSAL
            double fac = safety * std::pow(err > 0.0 ? err : 1e-16, -exp_err) *
                         std::pow(err_old, exp_old);
            fac = std::clamp(fac, 0.2, rejected ? 1.0 : 5.0);
            h *= fac;
            err_old = std::max(err, 1e-4);
            rejected = false;
        } else {
            double fac = safety * std::pow(err, -0.2);
            h *= std::clamp(fac, 0.1, 1.0);
            rejected = true;
        }
    }
    return y;
}

}  // namespace msrds::numerics

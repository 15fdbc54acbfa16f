#include "msrds/pitchfork.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "msrds/errors.hpp"
#include "msrds/numerics/ode.hpp"

namespace msrds::pitchfork {

void validate_reduced_state(const ReducedState& state) {
    if (!std::isfinite(state.x) || !std::isfinite(state.y))
        throw InadmissibleStateError("ReducedState: non-finite");
    if (state.y < state.x * state.x - 1e-9)
        throw InadmissibleStateError("ReducedState: y < x^2 beyond tolerance");
}

const char* to_string(BranchClass c) {
    switch (c) {
        case BranchClass::kTrivial: return "trivial";
        case BranchClass::kPositiveBranch: return "positive-branch";
        case BranchClass::kNegativeBranch: return "negative-branch";
        default: return "none";
    }
}

double analytic_ms_norm_sq(const PitchforkParams& params, double s, double t,
                           double norm_sq, double mean) {
    if (!(t >= s)) throw std::invalid_argument("analytic_ms_norm_sq: t must be >= s");
    if (norm_sq < 0.0) throw std::invalid_argument("analytic_ms_norm_sq: norm_sq < 0");
    if (mean * mean > norm_sq * (1.0 + 1e-12) + 1e-300)
        throw InadmissibleStateError("analytic_ms_norm_sq: mean^2 exceeds norm_sq");

    const double tau = t - s;
    const double alpha = params.alpha;
    const double beta = params.beta;
    const double base = std::exp((2.0 * alpha + 1.0) * tau);
    // resonance at beta = 1/2: the geometric form degenerates to a factor
    // linear in tau
    if (std::fabs(2.0 * beta - 1.0) < 1e-8)
        return base * (norm_sq + tau * mean * mean);
    const double grow = std::exp((2.0 * alpha + 2.0 * beta) * tau);
    return base * norm_sq + (2.0 * beta / (2.0 * beta - 1.0)) * (grow - base) * mean * mean;
}

spectrum::SpectrumEstimate analytic_spectrum(const PitchforkParams& params) {
    const double alpha = params.alpha;
    const double beta = params.beta;
    const double v_rate = alpha + 0.5;    // variance sector, E[Z] = 0
    const double u_rate = alpha + beta;   // deterministic sector

    spectrum::SpectrumEstimate out;
    out.method = spectrum::Method::kEigenLift;
    out.uncertainty = 0.0;
    const double m = std::max({std::fabs(alpha), std::fabs(beta), 1.0});
    out.gamma_bound = 2.0 * m + 2.0 * m * m;

    const bool merged = beta == 0.5;
    if (merged) {
        out.intervals.push_back({v_rate, v_rate});
        out.details.push_back({v_rate, v_rate, 2, spectrum::ConeVerdict::kRetained,
                               {2.0 * v_rate, 2.0 * v_rate}});
    } else if (beta > 0.5) {
        out.intervals.push_back({v_rate, v_rate});
        out.intervals.push_back({u_rate, u_rate});
        out.details.push_back({v_rate, v_rate, 1, spectrum::ConeVerdict::kRetained,
                               {2.0 * alpha + 1.0}});
        out.details.push_back({u_rate, u_rate, 1, spectrum::ConeVerdict::kRetained,
                               {2.0 * (alpha + beta)}});
    } else {
        out.intervals.push_back({v_rate, v_rate});
        out.details.push_back({v_rate, v_rate, 1, spectrum::ConeVerdict::kRetained,
                               {2.0 * alpha + 1.0}});
        out.details.push_back({u_rate, u_rate, 1, spectrum::ConeVerdict::kRejected,
                               {2.0 * (alpha + beta)}});
    }
    std::sort(out.details.begin(), out.details.end(),
              [](const auto& a, const auto& b) { return a.rate_lo < b.rate_lo; });

    // stable dimensions per resolvent gap: lifted rates strictly below the
    // gap anchor (midpoints; +-1 beyond the extreme intervals)
    const std::vector<double> rates = merged ? std::vector<double>{v_rate, v_rate}
                                             : std::vector<double>{v_rate, u_rate};
    for (std::size_t g = 0; g <= out.intervals.size(); ++g) {
        double anchor;
        if (g == 0)
            anchor = out.intervals.front().lower - 1.0;
        else if (g == out.intervals.size())
            anchor = out.intervals.back().upper + 1.0;
        else
            anchor = 0.5 * (out.intervals[g - 1].upper + out.intervals[g].lower);
        std::size_t dim = 0;
        for (double r : rates)
            if (r < anchor) ++dim;
        out.stable_dims.push_back(dim);
    }
    return out;
}

ReducedState reduced_rhs(const PitchforkParams& params, const ReducedState& state) {
    const double a = params.alpha;
    const double x = state.x;
    const double y = state.y;
    return ReducedState{x * (a + 1.0 - y),
                        (2.0 * a + 1.0) * y + 2.0 * x * x - 2.0 * y * y};
}

std::vector<SteadyState> steady_states(const PitchforkParams& params) {
    const double a = params.alpha;
    std::vector<SteadyState> out;
    out.push_back({{0.0, 0.0}, true});
    const double branch_y = a + 1.0;
    const double branch_x = std::sqrt(std::max(0.0, branch_y / 2.0));
    out.push_back({{branch_x, std::max(0.0, branch_y)}, a > -1.0});
    out.push_back({{-branch_x, std::max(0.0, branch_y)}, a > -1.0});
    out.push_back({{0.0, a + 0.5}, a >= -0.5});
    return out;
}

AbsorbingData absorbing_data(const PitchforkParams& params, double big_r) {
    if (!(big_r > 0.0)) throw std::invalid_argument("absorbing_data: R must be positive");
    const double level = std::fabs(params.alpha) + 2.0;
    const double radius = std::sqrt(level);
    const double t = big_r * big_r > level ? std::log(big_r * big_r / level) : 0.0;
    return AbsorbingData{radius, t};
}

ReducedState integrate_reduced(const PitchforkParams& params, double s, double t,
                               const ReducedState& state, double rel_tol, double abs_tol) {
    validate_reduced_state(state);
    if (t == s) return state;
    numerics::OdeProblem problem{
        2,
        [&params](double, std::span<const double> y, std::span<double> dy) {
            const ReducedState rs{y[0], y[1]};
            const ReducedState d = reduced_rhs(params, rs);
            dy[0] = d.x;
            dy[1] = d.y;
        },
        s, t, {state.x, state.y}};
    const auto y = numerics::integrate_adaptive(problem, rel_tol, abs_tol);
    return ReducedState{y[0], y[1]};
}

BranchClass classify_limit(const PitchforkParams& params, const ReducedState& limit,
                           double tol) {
    const auto states = steady_states(params);
    // order: trivial, +branch, -branch, (0, alpha + 1/2)
    const BranchClass labels[] = {BranchClass::kTrivial, BranchClass::kPositiveBranch,
                                  BranchClass::kNegativeBranch, BranchClass::kNone};
    BranchClass best = BranchClass::kNone;
    double best_dist = tol;
    for (std::size_t k = 0; k < states.size(); ++k) {
        if (!states[k].valid) continue;
        const double dx = limit.x - states[k].state.x;
        const double dy = limit.y - states[k].state.y;
        const double dist = std::sqrt(dx * dx + dy * dy);
        if (dist <= best_dist) {
            best_dist = dist;
            best = labels[k];
        }
    }
    return best;
}

PullbackRun pullback_run(const PitchforkParams& params,
                         const std::vector<ReducedState>& initials, double t,
                         const std::vector<double>& start_times,
                         const PullbackOptions& opt) {
    if (start_times.empty())
        throw std::invalid_argument("pullback_run: no start times");
    if (initials.size() != start_times.size())
        throw std::invalid_argument("pullback_run: initials/start_times length mismatch");
    for (std::size_t k = 0; k + 1 < start_times.size(); ++k)
        if (!(start_times[k] > start_times[k + 1]))
            throw std::invalid_argument("pullback_run: start times must decrease");
    if (!(start_times.front() <= t))
        throw std::invalid_argument("pullback_run: start times must be <= t");

    PullbackRun run;
    run.t = t;
    run.start_times = start_times;
    for (std::size_t k = 0; k < start_times.size(); ++k)
        run.limits.push_back(integrate_reduced(params, start_times[k], t, initials[k],
                                               opt.rel_tol, opt.abs_tol));

    const ReducedState& deepest = run.limits.back();
    run.converged_to = classify_limit(params, deepest, opt.classify_tol);
    run.monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& lim : run.limits) {
        const double dx = lim.x - deepest.x;
        const double dy = lim.y - deepest.y;
        const double dist = std::sqrt(dx * dx + dy * dy);
        if (dist > prev * (1.0 + 1e-9) + 1e-15) run.monotone = false;
        prev = dist;
    }
    return run;
}

PullbackRun pullback_run(const PitchforkParams& params, const ReducedState& initial,
                         double t, const std::vector<double>& start_times,
                         const PullbackOptions& opt) {
    return pullback_run(params,
                        std::vector<ReducedState>(start_times.size(), initial), t,
                        start_times, opt);
}

std::vector<SweepPoint> bifurcation_sweep(const std::vector<double>& alpha_grid,
                                          const ReducedState& initial,
                                          double pullback_depth,
                                          const PullbackOptions& opt) {
    if (!(pullback_depth >= 40.0))
        throw std::invalid_argument("bifurcation_sweep: pullback depth must be >= 40");
    std::vector<SweepPoint> out;
    out.reserve(alpha_grid.size());
    for (double alpha : alpha_grid) {
        const PitchforkParams params{alpha, 1.0};
        const PullbackRun run =
            pullback_run(params, initial, 0.0, {-pullback_depth}, opt);
        const ReducedState& lim = run.limits.back();
        out.push_back({alpha, run.converged_to, lim,
                       std::sqrt(std::max(0.0, lim.y))});
    }
    return out;
}

}  // namespace msrds::pitchfork

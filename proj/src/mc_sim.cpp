#include "msrds/mc_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "msrds/errors.hpp"
#include "msrds/numerics/counter_rng.hpp"
#include "msrds/numerics/linalg.hpp"
#include "msrds/numerics/ode.hpp"
#include "msrds/numerics/summation.hpp"
#include "msrds/pitchfork.hpp"

namespace msrds::mc_sim {

using numerics::ExactSum;
using numerics::kReductionChunk;

namespace {

// dedicated step tag for initialization draws; dynamics use steps 0, 1, ...
constexpr std::uint64_t kInitStep = ~std::uint64_t{0};

void run_parallel(std::size_t n_jobs, std::size_t threads,
                  const std::function<void(std::size_t)>& job) {
    if (threads <= 1 || n_jobs <= 1) {
        for (std::size_t k = 0; k < n_jobs; ++k) job(k);
        return;
    }
    const std::size_t used = std::min(threads, n_jobs);
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (std::size_t w = 0; w < used; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t k = w; k < n_jobs; k += used) job(k);
        });
    for (auto& th : pool) th.join();
}

// Per-component ensemble averages of x and (for the pitchfork drift) x^2,
// reduced over fixed-size chunks merged in index order.
struct StepMoments {
    Vector mean;
    double second = 0.0;  // scalar E[X^2], pitchfork only
};

StepMoments reduce_moments(const Ensemble& ens, bool need_second, std::size_t threads) {
    const std::size_t n = ens.size();
    const std::size_t d = ens.d;
    const std::size_t n_chunks = (n + kReductionChunk - 1) / kReductionChunk;
    const std::size_t lanes = d + (need_second ? 1 : 0);

    std::vector<ExactSum> partial(n_chunks * lanes);
    run_parallel(n_chunks, threads, [&](std::size_t c) {
        const std::size_t begin = c * kReductionChunk;
        const std::size_t end = std::min(begin + kReductionChunk, n);
        ExactSum* acc = &partial[c * lanes];
        for (std::size_t p = begin; p < end; ++p) {
            const double* x = &ens.particles[p * d];
            for (std::size_t k = 0; k < d; ++k) acc[k].add(x[k]);
            if (need_second) acc[d].add(x[0] * x[0]);
        }
    });

    StepMoments out{Vector(d, 0.0), 0.0};
    for (std::size_t k = 0; k < lanes; ++k) {
        ExactSum total;
        for (std::size_t c = 0; c < n_chunks; ++c) total.merge(partial[c * lanes + k]);
        const double v = total.value() / static_cast<double>(n);
        if (k < d)
            out.mean[k] = v;
        else
            out.second = v;
    }
    return out;
}

}  // namespace

ModelSpec ModelSpec::linear(CoefficientSystem cs) {
    ModelSpec m{Kind::kLinear, std::move(cs), 0.0, 0.0};
    return m;
}

ModelSpec ModelSpec::pitchfork(double alpha, double beta) {
    ModelSpec m{Kind::kPitchfork, std::nullopt, alpha, beta};
    return m;
}

std::size_t ModelSpec::dimension() const {
    return kind == Kind::kLinear ? coeffs->dimension() : 1;
}

Ensemble simulate_ensemble(const ModelSpec& model, const MomentState& init, double s,
                           double t, double dt, std::size_t n, std::uint64_t seed,
                           const Observer& observer, const SimOptions& opt) {
    const std::size_t d = model.dimension();
    if (init.dimension() != d)
        throw std::invalid_argument("simulate_ensemble: init dimension mismatch");
    moment_dynamics::validate_moment_state(init, 1e-8);

    // Gaussian particles with the prescribed first and second moments
    Matrix cov = init.s;
    cov -= numerics::outer(init.m);
    const Matrix factor = numerics::psd_sqrt_factor(cov);

    Ensemble ens;
    ens.d = d;
    ens.seed = seed;
    ens.time = s;
    ens.particles.assign(n * d, 0.0);
    run_parallel((n + kReductionChunk - 1) / kReductionChunk, opt.threads,
                 [&](std::size_t c) {
                     const std::size_t begin = c * kReductionChunk;
                     const std::size_t end = std::min(begin + kReductionChunk, n);
                     Vector z(d);
                     for (std::size_t p = begin; p < end; ++p) {
                         for (std::size_t k = 0; k < d; ++k)
                             z[k] = numerics::counter_normal(seed, p, kInitStep, k);
                         double* x = &ens.particles[p * d];
                         for (std::size_t i = 0; i < d; ++i) {
                             double v = init.m[i];
                             for (std::size_t k = 0; k < d; ++k) v += factor(i, k) * z[k];
                             x[i] = v;
                         }
                     }
                 });
    return simulate_ensemble(model, std::move(ens), t, dt, observer, opt);
}

Ensemble simulate_ensemble(const ModelSpec& model, Ensemble ens, double t, double dt,
                           const Observer& observer, const SimOptions& opt) {
    const std::size_t d = model.dimension();
    const double s = ens.time;
    if (ens.d != d || ens.particles.size() % d != 0)
        throw std::invalid_argument("simulate_ensemble: ensemble layout mismatch");
    const std::size_t n = ens.size();
    if (n < 100) throw std::invalid_argument("simulate_ensemble: need at least 100 particles");
    if (!(dt > 0.0) || dt > 1e-2)
        throw std::invalid_argument("simulate_ensemble: dt must be in (0, 1e-2]");
    if (!(t >= s)) throw std::invalid_argument("simulate_ensemble: t must be >= start time");

    const bool pitchfork = model.kind == ModelSpec::Kind::kPitchfork;
    const std::size_t n_steps =
        (t == s) ? 0 : static_cast<std::size_t>(std::ceil((t - s) / dt - 1e-9));

    if (observer) observer(0, s, ens);

    std::vector<double> next(ens.particles.size());
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double t0 = s + static_cast<double>(step) * dt;
        const double t1 = (step + 1 == n_steps) ? t : t0 + dt;
        const double h = t1 - t0;
        const double sqrt_h = std::sqrt(h);

        const StepMoments mom = reduce_moments(ens, pitchfork, opt.threads);

        const moment_dynamics::CoefficientSegment* seg = nullptr;
        Vector b_mean(d, 0.0), d_mean(d, 0.0);
        if (!pitchfork) {
            seg = &model.coeffs->segment_at(t0);
            b_mean = seg->b * mom.mean;
            d_mean = seg->d * mom.mean;
        }

        std::atomic<bool> diverged{false};
        const std::size_t n_chunks = (n + kReductionChunk - 1) / kReductionChunk;
        run_parallel(n_chunks, opt.threads, [&](std::size_t c) {
            const std::size_t begin = c * kReductionChunk;
            const std::size_t end = std::min(begin + kReductionChunk, n);
            for (std::size_t p = begin; p < end; ++p) {
                const double* x = &ens.particles[p * d];
                double* y = &next[p * d];
                const double noise =
                    sqrt_h * numerics::counter_normal(ens.seed, p, step, 0);
                if (pitchfork) {
                    const double drift = model.alpha * x[0] + model.beta * mom.mean[0] -
                                         x[0] * mom.second;
                    y[0] = x[0] + drift * h + x[0] * noise;
                    if (std::fabs(y[0]) > opt.blowup_guard || !std::isfinite(y[0]))
                        diverged.store(true, std::memory_order_relaxed);
                } else {
                    for (std::size_t i = 0; i < d; ++i) {
                        double drift = b_mean[i];
                        double diff = d_mean[i];
                        for (std::size_t k = 0; k < d; ++k) {
                            drift += seg->a(i, k) * x[k];
                            diff += seg->c(i, k) * x[k];
                        }
                        y[i] = x[i] + drift * h + diff * noise;
                        if (std::fabs(y[i]) > opt.blowup_guard || !std::isfinite(y[i]))
                            diverged.store(true, std::memory_order_relaxed);
                    }
                }
            }
        });
        if (diverged.load())
            throw SimulationDivergedError(
                "simulate_ensemble: particle exceeded blow-up guard at step " +
                    std::to_string(step),
                static_cast<long>(step));

        ens.particles.swap(next);
        ens.time = t1;
        if (observer) observer(step + 1, t1, ens);
    }
    return ens;
}

MomentEstimate estimate_moments(const Ensemble& ens, const SimOptions& opt) {
    const std::size_t n = ens.size();
    const std::size_t d = ens.d;
    if (n < 2) throw std::invalid_argument("estimate_moments: need at least 2 particles");

    // lanes: d means, then p = d(d+1)/2 second moments, then p fourth-order
    // products for the standard errors of the second moments
    const auto pairs = moment_dynamics::index_map(d);
    const std::size_t np = pairs.size();
    const std::size_t lanes = d + 2 * np;
    const std::size_t n_chunks = (n + kReductionChunk - 1) / kReductionChunk;

    std::vector<ExactSum> partial(n_chunks * lanes);
    run_parallel(n_chunks, opt.threads, [&](std::size_t c) {
        const std::size_t begin = c * kReductionChunk;
        const std::size_t end = std::min(begin + kReductionChunk, n);
        ExactSum* acc = &partial[c * lanes];
        for (std::size_t p = begin; p < end; ++p) {
            const double* x = &ens.particles[p * d];
            for (std::size_t k = 0; k < d; ++k) acc[k].add(x[k]);
            for (std::size_t r = 0; r < np; ++r) {
                const double prod = x[pairs[r].first] * x[pairs[r].second];
                acc[d + r].add(prod);
                acc[d + np + r].add(prod * prod);
            }
        }
    });
    Vector sums(lanes);
    for (std::size_t k = 0; k < lanes; ++k) {
        ExactSum total;
        for (std::size_t c = 0; c < n_chunks; ++c) total.merge(partial[c * lanes + k]);
        sums[k] = total.value() / static_cast<double>(n);
    }

    MomentEstimate out{MomentState{Vector(d), Matrix(d, d)}, Vector(d), Matrix(d, d)};
    const double bessel = static_cast<double>(n) / static_cast<double>(n - 1);
    const double root_n = std::sqrt(static_cast<double>(n));
    for (std::size_t k = 0; k < d; ++k) out.state.m[k] = sums[k];
    for (std::size_t r = 0; r < np; ++r) {
        const auto [i, j] = pairs[r];
        const double sij = sums[d + r];
        out.state.s(i, j) = out.state.s(j, i) = sij;
        const double var = std::max(0.0, (sums[d + np + r] - sij * sij) * bessel);
        const double se = std::sqrt(var) / root_n;
        out.se_secmom(i, j) = out.se_secmom(j, i) = se;
    }
    for (std::size_t k = 0; k < d; ++k) {
        const double var =
            std::max(0.0, (out.state.s(k, k) - sums[k] * sums[k]) * bessel);
        out.se_mean[k] = std::sqrt(var) / root_n;
    }
    return out;
}

namespace {

// Moment ODE of the pitchfork model for general beta; coincides with the
// reduced system at beta = 1.
pitchfork::ReducedState pitchfork_moment_ode(double alpha, double beta,
                                             const pitchfork::ReducedState& init,
                                             double s, double t) {
    numerics::OdeProblem problem{
        2,
        [alpha, beta](double, std::span<const double> y, std::span<double> dy) {
            const double x = y[0];
            const double yy = y[1];
            dy[0] = x * (alpha + beta - yy);
            dy[1] = (2.0 * alpha + 1.0) * yy + 2.0 * beta * x * x - 2.0 * yy * yy;
        },
        s, t, {init.x, init.y}};
    const auto y = numerics::integrate_adaptive(problem, 1e-10, 1e-12);
    return {y[0], y[1]};
}

double safe_z(double diff, double se) {
    if (se == 0.0)
        return diff == 0.0 ? 0.0
                           : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return diff / se;
}

}  // namespace

MomentState moment_reference(const ModelSpec& model, const MomentState& init, double s,
                             double t) {
    if (model.kind == ModelSpec::Kind::kLinear)
        return moment_dynamics::propagate_moments(*model.coeffs, s, t, init);
    const auto r =
        pitchfork_moment_ode(model.alpha, model.beta, {init.m[0], init.s(0, 0)}, s, t);
    MomentState ode{Vector(1, r.x), Matrix(1, 1)};
    ode.s(0, 0) = r.y;
    return ode;
}

ComparisonReport compare_with_moments(const ModelSpec& model, const MomentState& init,
                                      double s, double t, double dt, std::size_t n,
                                      std::uint64_t seed, const SimOptions& opt) {
    const Ensemble final_ens = simulate_ensemble(model, init, s, t, dt, n, seed, {}, opt);
    MomentEstimate mc = estimate_moments(final_ens, opt);
    MomentState ode = moment_reference(model, init, s, t);

    const std::size_t d = model.dimension();
    ComparisonReport report{std::move(mc), std::move(ode), Vector(d), Matrix(d, d), 0.0};
    for (std::size_t k = 0; k < d; ++k) {
        report.z_mean[k] =
            safe_z(report.mc.state.m[k] - report.ode.m[k], report.mc.se_mean[k]);
        report.max_abs_z = std::max(report.max_abs_z, std::fabs(report.z_mean[k]));
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            report.z_secmom(i, j) = safe_z(report.mc.state.s(i, j) - report.ode.s(i, j),
                                           report.mc.se_secmom(i, j));
            report.max_abs_z = std::max(report.max_abs_z, std::fabs(report.z_secmom(i, j)));
        }
    return report;
}

}  // namespace msrds::mc_sim

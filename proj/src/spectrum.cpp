#include "msrds/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "msrds/errors.hpp"
#include "msrds/numerics/counter_rng.hpp"
#include "msrds/numerics/linalg.hpp"

namespace msrds::spectrum {

using moment_dynamics::MomentState;
using numerics::Matrix;
using numerics::Vector;

const char* to_string(Method m) {
    return m == Method::kEigenLift ? "eigen-lift" : "finite-time";
}

const char* to_string(ConeVerdict v) {
    switch (v) {
        case ConeVerdict::kRetained: return "retained";
        case ConeVerdict::kRejected: return "rejected";
        default: return "inconclusive";
    }
}

double gamma_bound(const CoefficientSystem& coeffs) {
    const double d = static_cast<double>(coeffs.dimension());
    const double m = coeffs.bound();
    return 2.0 * d * m + 2.0 * d * d * m * m;
}

namespace {

// Invariant subspace of the eigenvalues NOT in `kept`: kernel of the
// product of the complementary characteristic factors.
Matrix complement_subspace(const Matrix& m, std::vector<std::complex<double>> rest) {
    const std::size_t n = m.rows();
    const double scale = std::max(1.0, m.frobenius_norm());
    Matrix poly = Matrix::identity(n);
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const auto l = rest[i];
        if (l.imag() < 0.0) continue;
        Matrix factor = m;
        if (l.imag() == 0.0) {
            for (std::size_t k = 0; k < n; ++k) factor(k, k) -= l.real();
            factor *= 1.0 / scale;
        } else {
            factor = m * m;
            factor -= (2.0 * l.real()) * m;
            const double mod2 = std::norm(l);
            for (std::size_t k = 0; k < n; ++k) factor(k, k) += mod2;
            factor *= 1.0 / (scale * scale);
        }
        poly = factor * poly;
    }
    return numerics::trailing_nullspace(poly, rest.size());
}

// Oblique spectral projector onto span(basis) along the complementary
// invariant subspace; empty complement means the identity.
struct SpectralProjector {
    Matrix basis;       // n x k
    Matrix left;        // k x n, projector = basis * left
    bool identity = false;
    bool valid = true;

    Vector apply(const Vector& x) const {
        if (identity) return x;
        const std::size_t k = basis.cols();
        Vector coeff(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) s += left(i, j) * x[j];
            coeff[i] = s;
        }
        Vector out(x.size(), 0.0);
        for (std::size_t j = 0; j < x.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) s += basis(j, i) * coeff[i];
            out[j] = s;
        }
        return out;
    }
};

SpectralProjector make_projector(const Matrix& m, const numerics::EigenCluster& cluster) {
    SpectralProjector proj;
    proj.basis = cluster.basis;
    const std::size_t n = m.rows();
    const std::size_t k = cluster.basis.cols();
    if (k >= n) {
        proj.identity = true;
        return proj;
    }

    // eigenvalues of m not in the cluster, removed by nearest match
    auto rest = numerics::eigenvalues(m);
    for (const auto& l : cluster.eigenvalues) {
        std::size_t best = rest.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rest.size(); ++i) {
            const double dist = std::abs(rest[i] - l);
            if (dist < best_d) {
                best_d = dist;
                best = i;
            }
        }
        if (best < rest.size()) rest.erase(rest.begin() + static_cast<long>(best));
    }

    const Matrix v_rest = complement_subspace(m, rest);
    const Matrix w = numerics::trailing_nullspace(v_rest.transposed(), k);
    // projector P = basis (W^T basis)^{-1} W^T
    const Matrix wt_basis = w.transposed() * cluster.basis;
    try {
        proj.left = numerics::solve(wt_basis, w.transposed());
    } catch (const std::exception&) {
        proj.valid = false;
    }
    return proj;
}

bool admissible_direction(std::span<const double> x, std::size_t d, double tol) {
    const std::size_t p = d * (d + 1) / 2;
    const std::span<const double> u = x.subspan(0, p);
    const std::span<const double> v = x.subspan(p, p);
    if (moment_dynamics::is_admissible(u, v, d, tol)) return true;
    Vector neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    return moment_dynamics::is_admissible(std::span<const double>(neg).subspan(0, p),
                                          std::span<const double>(neg).subspan(p, p), d,
                                          tol);
}

}  // namespace

ConeVerdict cone_filter(const LiftedOperator& op, const numerics::EigenCluster& cluster,
                        std::size_t d, const ConeFilterOptions& opt) {
    const std::size_t p = d * (d + 1) / 2;
    const std::size_t dim = cluster.basis.cols();
    if (cluster.basis.rows() != 2 * p)
        throw std::invalid_argument("cone_filter: basis does not match lifted dimension");

    // one-dimensional subspaces are decided exactly
    if (dim == 1) {
        Vector b(2 * p);
        for (std::size_t i = 0; i < 2 * p; ++i) b[i] = cluster.basis(i, 0);
        return admissible_direction(b, d, opt.cone_tol) ? ConeVerdict::kRetained
                                                        : ConeVerdict::kRejected;
    }

    const Matrix m = op.stacked();
    const SpectralProjector proj = make_projector(m, cluster);
    if (proj.valid) {
        for (int i = 0; i < opt.n_samples; ++i) {
            const MomentState sample =
                moment_dynamics::sample_admissible(d, opt.seed + static_cast<std::uint64_t>(i), 1.0);
            const Vector x = moment_dynamics::stack_state(sample);
            Vector px = proj.apply(x);
            const double nx = numerics::norm2(px);
            if (nx <= opt.proj_tol * numerics::norm2(x)) continue;
            for (double& c : px) c /= nx;
            if (admissible_direction(px, d, opt.cone_tol)) return ConeVerdict::kRetained;
        }
    }

    // rejection evidence: every basis direction has a strictly indefinite
    // v-part and no sampled combination produces a PSD one
    bool all_mixed = true;
    for (std::size_t j = 0; j < dim && all_mixed; ++j) {
        Vector v(p);
        for (std::size_t i = 0; i < p; ++i) v[i] = cluster.basis(p + i, j);
        const Matrix vm = moment_dynamics::sym_from_tri(v, d);
        const auto eig = numerics::sym_eigen(vm);
        const double tau = 1e-10 * (1.0 + vm.max_abs());
        if (!(eig.values.front() < -tau && eig.values.back() > tau)) all_mixed = false;
    }
    if (all_mixed) {
        bool found_psd = false;
        for (int trial = 0; trial < opt.n_combinations && !found_psd; ++trial) {
            Vector c(dim);
            double cn = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                c[j] = numerics::counter_normal(opt.seed ^ 0xc0417ULL,
                                                static_cast<std::uint64_t>(trial), 0, j);
                cn += c[j] * c[j];
            }
            if (cn == 0.0) continue;
            Vector v(p, 0.0);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < dim; ++j)
                    v[i] += cluster.basis(p + i, j) * c[j];
            const Matrix vm = moment_dynamics::sym_from_tri(v, d);
            const auto eig = numerics::sym_eigen(vm);
            const double tau = 1e-10 * (1.0 + vm.max_abs());
            if (eig.values.front() >= -tau || eig.values.back() <= tau) found_psd = true;
        }
        if (!found_psd) return ConeVerdict::kRejected;
    }
    return ConeVerdict::kInconclusive;
}

namespace {

struct RateGroup {
    double rate_lo;
    double rate_hi;
    numerics::EigenCluster merged;  // joint subspace of all member clusters
};

std::vector<std::size_t> gap_dims_from_rates(const std::vector<double>& rates,
                                             const std::vector<Interval>& intervals,
                                             double margin) {
    std::vector<std::size_t> dims;
    if (intervals.empty()) {
        dims.push_back(rates.size());
        return dims;
    }
    for (std::size_t g = 0; g <= intervals.size(); ++g) {
        double anchor;
        if (g == 0)
            anchor = intervals.front().lower - margin;
        else if (g == intervals.size())
            anchor = intervals.back().upper + margin;
        else
            anchor = 0.5 * (intervals[g - 1].upper + intervals[g].lower);
        std::size_t n = 0;
        for (double r : rates)
            if (r < anchor) ++n;
        dims.push_back(n);
    }
    return dims;
}

}  // namespace

SpectrumEstimate autonomous_spectrum(const CoefficientSystem& coeffs,
                                     const SpectrumTolerances& tol) {
    if (!coeffs.is_autonomous())
        throw std::invalid_argument(
            "autonomous_spectrum: coefficient schedule is not autonomous");
    const std::size_t d = coeffs.dimension();
    const LiftedOperator op = build_lift(coeffs, 0.0);
    const Matrix m = op.stacked();
    const auto eig = numerics::eigen_decompose(m, tol.cluster);

    const double gamma = gamma_bound(coeffs);
    const double merge = std::max(tol.merge, 0.0);

    // group clusters sharing a growth rate: candidates whose rate ranges
    // come within the merge tolerance are filtered jointly (their union is
    // the invariant subspace of everything growing at that rate)
    struct Work {
        double lo, hi;
        std::vector<const numerics::EigenCluster*> members;
    };
    std::vector<Work> groups;
    std::vector<const numerics::EigenCluster*> order;
    for (const auto& c : eig.clusters) order.push_back(&c);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        double ra = a->eigenvalues.front().real(), rb = b->eigenvalues.front().real();
        for (const auto& l : a->eigenvalues) ra = std::min(ra, l.real());
        for (const auto& l : b->eigenvalues) rb = std::min(rb, l.real());
        return ra < rb;
    });
    for (const auto* c : order) {
        double lo = c->eigenvalues.front().real(), hi = lo;
        for (const auto& l : c->eigenvalues) {
            lo = std::min(lo, l.real());
            hi = std::max(hi, l.real());
        }
        lo *= 0.5;
        hi *= 0.5;
        if (!groups.empty() && lo <= groups.back().hi + merge) {
            groups.back().hi = std::max(groups.back().hi, hi);
            groups.back().members.push_back(c);
        } else {
            groups.push_back(Work{lo, hi, {c}});
        }
    }

    SpectrumEstimate out;
    out.method = Method::kEigenLift;
    out.gamma_bound = gamma;
    out.uncertainty = 0.0;

    for (const auto& g : groups) {
        numerics::EigenCluster joint;
        std::size_t k = 0;
        for (const auto* c : g.members) k += c->basis.cols();
        joint.basis = Matrix(m.rows(), k);
        std::size_t col = 0;
        for (const auto* c : g.members) {
            for (const auto& l : c->eigenvalues) joint.eigenvalues.push_back(l);
            for (std::size_t j = 0; j < c->basis.cols(); ++j, ++col)
                for (std::size_t i = 0; i < m.rows(); ++i)
                    joint.basis(i, col) = c->basis(i, j);
        }
        const ConeVerdict verdict = cone_filter(op, joint, d, tol.cone);
        out.details.push_back(
            {g.lo, g.hi, joint.eigenvalues.size(), verdict, joint.eigenvalues});
        if (verdict != ConeVerdict::kRetained) continue;

        // clamp hairline overshoot of the enclosure; genuine violations stay
        double lo = g.lo, hi = g.hi;
        const double slack = 1e-9 * (1.0 + gamma);
        if (hi > gamma && hi <= gamma + slack) hi = gamma;
        if (lo < -gamma && lo >= -gamma - slack) lo = -gamma;
        lo = std::min(lo, hi);
        if (!out.intervals.empty() && lo <= out.intervals.back().upper + merge)
            out.intervals.back().upper = std::max(out.intervals.back().upper, hi);
        else
            out.intervals.push_back({lo, hi});
    }

    std::vector<double> all_rates;
    for (const auto& l : eig.eigenvalues) all_rates.push_back(0.5 * l.real());
    out.stable_dims = gap_dims_from_rates(all_rates, out.intervals, 1.0);
    return out;
}

std::vector<RateSample> finite_time_exponents(const CoefficientSystem& coeffs, double t_end,
                                              std::size_t n_samples, std::uint64_t seed,
                                              const moment_dynamics::Tolerances& ode_tol) {
    if (!(t_end >= 10.0))
        throw std::invalid_argument("finite_time_exponents: horizon must be >= 10");
    if (n_samples < 16)
        throw std::invalid_argument("finite_time_exponents: need at least 16 samples");
    const std::size_t d = coeffs.dimension();
    const double t0 = coeffs.is_autonomous() ? 0.0 : coeffs.domain_start();

    std::vector<MomentState> states;
    std::vector<std::uint64_t> tags;
    std::vector<bool> structured;
    // structured samples: pure-variance and deterministic states reach the
    // modes a generic draw would average away
    {
        MomentState pure{Vector(d, 0.0), Matrix::identity(d)};
        states.push_back(pure);
        tags.push_back(0);
        for (std::size_t i = 0; i < d; ++i) {
            Vector m(d, 0.0);
            m[i] = 1.0;
            states.push_back(MomentState{m, numerics::outer(m)});
            tags.push_back(i + 1);
            Matrix s(d, d);
            s(i, i) = 1.0;
            states.push_back(MomentState{Vector(d, 0.0), s});
            tags.push_back(d + i + 1);
        }
        Vector ones(d, 1.0 / std::sqrt(static_cast<double>(d)));
        states.push_back(MomentState{ones, numerics::outer(ones)});
        tags.push_back(2 * d + 1);
        structured.assign(states.size(), true);
    }
    while (states.size() < n_samples) {
        const std::uint64_t s = seed + states.size();
        states.push_back(moment_dynamics::sample_admissible(d, s, 1.0));
        tags.push_back(s);
        structured.push_back(false);
    }

    // Renormalized propagation over sub-horizon chunks; the lift is linear,
    // so the accumulated log growth is exact.
    const double chunk = 5.0;
    const auto measure_growth = [&](MomentState& state, double from, double until,
                                    std::uint64_t tag) {
        double tr = state.s.trace();
        if (!(tr > 0.0))
            throw NumericalError("finite_time_exponents: sample with zero trace");
        double log_growth = 0.0;
        double t = from;
        try {
            while (t < until - 1e-12) {
                const double scale = 1.0 / tr;
                state.s *= scale;
                const double ms = std::sqrt(scale);
                for (double& mi : state.m) mi *= ms;
                const double t_next = std::min(t + chunk, until);
                state = moment_dynamics::propagate_moments(coeffs, t, t_next, state,
                                                           ode_tol);
                t = t_next;
                tr = state.s.trace();
                if (!(tr > 0.0))
                    throw NumericalError(
                        "finite_time_exponents: trace collapsed during propagation");
                log_growth += std::log(tr);
            }
        } catch (const IntegrationDivergedError& e) {
            throw IntegrationDivergedError(
                "finite_time_exponents: sample " + std::to_string(tag) + ": " + e.what(),
                e.failure_time());
        }
        return log_growth;
    };

    // Generic draws carry transient components whose decay pollutes a
    // finite-horizon rate (their log-coefficient enters as O(1/T)); a
    // burn-in before the measured window removes them. Structured samples
    // sit exactly on their modes and are measured as-is.
    const double burn_in = 10.0;

    std::vector<RateSample> out;
    out.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        MomentState state = states[k];
        double start = t0;
        if (!structured[k]) {
            (void)measure_growth(state, t0, t0 + burn_in, tags[k]);
            start = t0 + burn_in;
        }
        const double log_growth = measure_growth(state, start, start + t_end, tags[k]);
        out.push_back(RateSample{tags[k], t_end, log_growth / (2.0 * t_end)});
    }
    return out;
}

SpectrumEstimate finite_time_spectrum(const std::vector<RateSample>& samples,
                                      double cluster_width, double gamma,
                                      std::size_t max_intervals) {
    if (samples.empty())
        throw std::invalid_argument("finite_time_spectrum: no samples");
    if (!(cluster_width > 0.0))
        throw std::invalid_argument("finite_time_spectrum: cluster width must be positive");
    const double t_ref = samples.front().horizon;
    for (const auto& s : samples)
        if (std::fabs(s.horizon - t_ref) > 1e-9)
            throw std::invalid_argument("finite_time_spectrum: mixed horizons");

    std::vector<double> rates;
    rates.reserve(samples.size());
    for (const auto& s : samples) rates.push_back(s.rate);
    std::sort(rates.begin(), rates.end());

    struct Cluster {
        double lo, hi;
        std::size_t count;
    };
    std::vector<Cluster> clusters;
    for (double r : rates) {
        if (!clusters.empty() && r - clusters.back().hi <= cluster_width) {
            clusters.back().hi = r;
            ++clusters.back().count;
        } else {
            clusters.push_back({r, r, 1});
        }
    }
    if (max_intervals > 0) {
        while (clusters.size() > max_intervals) {
            std::size_t best = 1;
            double best_gap = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < clusters.size(); ++i) {
                const double gap = clusters[i].lo - clusters[i - 1].hi;
                if (gap < best_gap) {
                    best_gap = gap;
                    best = i;
                }
            }
            clusters[best - 1].hi = clusters[best].hi;
            clusters[best - 1].count += clusters[best].count;
            clusters.erase(clusters.begin() + static_cast<long>(best));
        }
    }

    SpectrumEstimate out;
    out.method = Method::kFiniteTime;
    out.uncertainty = cluster_width;
    out.gamma_bound = gamma;
    for (const auto& c : clusters) {
        double lo = c.lo, hi = c.hi;
        if (std::isfinite(gamma)) {
            // finite-horizon rates may exceed the enclosure by the Gronwall
            // constant log(d)/(2T); the spectrum itself cannot
            lo = std::clamp(lo, -gamma, gamma);
            hi = std::clamp(hi, -gamma, gamma);
        }
        out.intervals.push_back({lo, hi});
        out.details.push_back({lo, hi, c.count, ConeVerdict::kRetained, {}});
    }

    const double margin = std::max(cluster_width, 1e-6);
    out.stable_dims = gap_dims_from_rates(rates, out.intervals, margin);
    return out;
}

SpectrumEstimate finite_time_estimate(const CoefficientSystem& coeffs,
                                      const FiniteTimeOptions& opt) {
    const auto samples =
        finite_time_exponents(coeffs, opt.horizon, opt.n_samples, opt.seed, opt.ode_tol);
    const std::size_t d = coeffs.dimension();
    return finite_time_spectrum(samples, opt.cluster_width, gamma_bound(coeffs),
                                d * (d + 1));
}

bool resolvent_check(const CoefficientSystem& coeffs, double gamma,
                     const SpectrumEstimate& estimate) {
    (void)coeffs;
    for (const auto& iv : estimate.intervals)
        if (gamma >= iv.lower - estimate.uncertainty &&
            gamma <= iv.upper + estimate.uncertainty)
            return false;
    return true;
}

}  // namespace msrds::spectrum

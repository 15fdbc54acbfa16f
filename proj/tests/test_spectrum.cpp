#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "msrds/moment_dynamics.hpp"
#include "msrds/pitchfork.hpp"
#include "msrds/spectrum.hpp"

using namespace msrds;
using moment_dynamics::CoefficientSystem;
using numerics::Matrix;
using spectrum::ConeVerdict;

namespace {

CoefficientSystem linearized(double alpha, double beta) {
    return CoefficientSystem::autonomous(Matrix{{alpha}}, Matrix{{beta}}, Matrix{{1.0}},
                                         Matrix{{0.0}});
}

CoefficientSystem random_system(std::mt19937_64& gen, std::size_t d, double bound) {
    std::uniform_real_distribution<double> entry(-bound, bound);
    Matrix a(d, d), b(d, d), c(d, d), dd(d, d);
    for (auto* m : {&a, &b, &c, &dd})
        for (auto& v : m->data()) v = entry(gen);
    return CoefficientSystem::autonomous(a, b, c, dd, bound);
}

std::vector<double> interval_points(const spectrum::SpectrumEstimate& est) {
    std::vector<double> pts;
    for (const auto& iv : est.intervals) pts.push_back(0.5 * (iv.lower + iv.upper));
    return pts;
}

}  // namespace

TEST_CASE("gamma_bound: 2dm + 2 d^2 m^2") {
    CHECK(spectrum::gamma_bound(linearized(0.0, 1.0)) == 4.0);  // d=1, m=1

    std::mt19937_64 gen(1);
    CHECK(spectrum::gamma_bound(random_system(gen, 2, 0.5)) == 4.0);  // 2+2

    const auto zero = CoefficientSystem::autonomous(Matrix{{0.0}}, Matrix{{0.0}},
                                                    Matrix{{0.0}}, Matrix{{0.0}});
    CHECK(spectrum::gamma_bound(zero) == 0.0);
}

TEST_CASE("autonomous_spectrum reproduces the linearized pitchfork spectrum") {
    const auto both = spectrum::autonomous_spectrum(linearized(0.0, 1.0));
    REQUIRE(both.intervals.size() == 2);
    CHECK(std::fabs(both.intervals[0].lower - 0.5) <= 1e-9);
    CHECK(std::fabs(both.intervals[0].upper - 0.5) <= 1e-9);
    CHECK(std::fabs(both.intervals[1].lower - 1.0) <= 1e-9);

    // beta <= 1/2: the deterministic-sector candidate violates (EX)^2 <= EX^2
    const auto single = spectrum::autonomous_spectrum(linearized(0.0, 0.0));
    REQUIRE(single.intervals.size() == 1);
    CHECK(std::fabs(single.intervals[0].lower - 0.5) <= 1e-9);
    bool saw_rejected = false;
    for (const auto& cand : single.details)
        if (cand.verdict == ConeVerdict::kRejected) saw_rejected = true;
    CHECK(saw_rejected);

    const auto shifted = spectrum::autonomous_spectrum(linearized(-1.0, 2.0));
    REQUIRE(shifted.intervals.size() == 2);
    CHECK(std::fabs(shifted.intervals[0].lower - (-0.5)) <= 1e-9);
    CHECK(std::fabs(shifted.intervals[1].lower - 1.0) <= 1e-9);
}

TEST_CASE("autonomous_spectrum merges the beta = 1/2 resonance into one point") {
    for (double alpha : {-1.0, 0.0, 1.0}) {
        const auto est = spectrum::autonomous_spectrum(linearized(alpha, 0.5));
        REQUIRE(est.intervals.size() == 1);
        CHECK(std::fabs(est.intervals[0].lower - (alpha + 0.5)) <= 1e-9);
        CHECK(std::fabs(est.intervals[0].upper - (alpha + 0.5)) <= 1e-9);
    }
}

TEST_CASE("cone_filter: exact one-dimensional verdicts") {
    const auto op = moment_dynamics::build_lift(linearized(0.0, 1.0), 0.0);

    // deterministic-sector eigendirection (1, 2beta/(2beta-1)) = (1, 2)
    numerics::EigenCluster umode;
    umode.eigenvalues = {2.0};
    umode.basis = Matrix(2, 1);
    umode.basis(0, 0) = 1.0 / std::sqrt(5.0);
    umode.basis(1, 0) = 2.0 / std::sqrt(5.0);
    CHECK(spectrum::cone_filter(op, umode, 1) == ConeVerdict::kRetained);

    // beta = 0: direction (1, 0) has v < u
    const auto op0 = moment_dynamics::build_lift(linearized(0.0, 0.0), 0.0);
    numerics::EigenCluster bad;
    bad.eigenvalues = {0.0};
    bad.basis = Matrix(2, 1);
    bad.basis(0, 0) = 1.0;
    CHECK(spectrum::cone_filter(op0, bad, 1) == ConeVerdict::kRejected);

    // variance-sector direction (0, 1) is a genuine zero-mean state
    numerics::EigenCluster vmode;
    vmode.eigenvalues = {1.0};
    vmode.basis = Matrix(2, 1);
    vmode.basis(1, 0) = 1.0;
    CHECK(spectrum::cone_filter(op, vmode, 1) == ConeVerdict::kRetained);
}

TEST_CASE("cone_filter: merged resonance subspace is retained by sampling") {
    const auto op = moment_dynamics::build_lift(linearized(0.0, 0.5), 0.0);
    numerics::EigenCluster merged;
    merged.eigenvalues = {1.0, 1.0};
    merged.basis = Matrix::identity(2);
    CHECK(spectrum::cone_filter(op, merged, 1) == ConeVerdict::kRetained);
}

TEST_CASE("finite_time_exponents: structured samples hit the extreme modes") {
    // beta = 0: every admissible state grows at alpha + 1/2 exactly
    const auto flat = spectrum::finite_time_exponents(linearized(0.0, 0.0), 50.0, 16, 9);
    CHECK(std::fabs(flat.front().rate - 0.5) <= 0.01);  // pure-variance sample
    for (const auto& s : flat) CHECK(std::fabs(s.rate - 0.5) <= 0.01);

    const auto zero = CoefficientSystem::autonomous(Matrix{{0.0}}, Matrix{{0.0}},
                                                    Matrix{{0.0}}, Matrix{{0.0}});
    for (const auto& s : spectrum::finite_time_exponents(zero, 50.0, 16, 9))
        CHECK(std::fabs(s.rate) <= 1e-12);

    // beta = 1: the deterministic sample rides e^{(2a+2b)T}
    const auto grow = spectrum::finite_time_exponents(linearized(0.0, 1.0), 50.0, 16, 9);
    CHECK(std::fabs(grow[1].rate - 1.0) <= 0.02);  // (m, S) = (1, 1)
}

TEST_CASE("finite_time_spectrum: clustering of rates") {
    const auto flat = spectrum::finite_time_exponents(linearized(0.0, 0.0), 50.0, 64, 9);
    const auto one = spectrum::finite_time_spectrum(flat, 0.05);
    REQUIRE(one.intervals.size() == 1);
    CHECK(std::fabs(0.5 * (one.intervals[0].lower + one.intervals[0].upper) - 0.5) <= 0.02);

    const auto mixed = spectrum::finite_time_exponents(linearized(0.0, 1.0), 50.0, 64, 9);
    const auto two = spectrum::finite_time_spectrum(mixed, 0.05);
    REQUIRE(two.intervals.size() == 2);
    CHECK(std::fabs(0.5 * (two.intervals[0].lower + two.intervals[0].upper) - 0.5) <= 0.02);
    CHECK(std::fabs(0.5 * (two.intervals[1].lower + two.intervals[1].upper) - 1.0) <= 0.02);

    const std::vector<spectrum::RateSample> lone{{7, 50.0, 0.25}};
    const auto point = spectrum::finite_time_spectrum(lone, 0.05);
    REQUIRE(point.intervals.size() == 1);
    CHECK(point.intervals[0].lower == 0.25);
    CHECK(point.intervals[0].upper == 0.25);
}

TEST_CASE("resolvent_check honors gaps, points and the Gamma tail") {
    const auto sys = linearized(0.0, 1.0);
    const auto est = spectrum::autonomous_spectrum(sys);
    CHECK(spectrum::resolvent_check(sys, 0.75, est));
    CHECK_FALSE(spectrum::resolvent_check(sys, 0.5, est));
    CHECK(spectrum::resolvent_check(sys, spectrum::gamma_bound(sys) + 1.0, est));
}

TEST_CASE("property: enclosure, interval cap and monotone stable dimensions") {
    std::mt19937_64 gen(101);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t d = 1 + trial % 3;
        const double m = (trial % 2 == 0) ? 0.5 : 1.0;
        const auto sys = random_system(gen, d, m);
        const double gamma = spectrum::gamma_bound(sys);
        const auto est = spectrum::autonomous_spectrum(sys);

        CHECK(est.intervals.size() <= d * (d + 1));
        for (const auto& iv : est.intervals) {
            CHECK(iv.lower >= -gamma);
            CHECK(iv.upper <= gamma);
            CHECK(iv.lower <= iv.upper);
        }
        for (std::size_t g = 0; g + 1 < est.intervals.size(); ++g)
            CHECK(est.intervals[g].upper < est.intervals[g + 1].lower);
        REQUIRE(est.stable_dims.size() == est.intervals.size() + 1);
        for (std::size_t g = 0; g + 1 < est.stable_dims.size(); ++g)
            CHECK(est.stable_dims[g] <= est.stable_dims[g + 1]);
        ++checked;
    }
    CHECK(checked == 60);
}

TEST_CASE("property: shift covariance of the eigen-lift spectrum") {
    std::mt19937_64 gen(103);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t d = 1 + trial % 2;
        const auto sys = random_system(gen, d, 0.8);
        const double shift = (trial % 2 == 0) ? 0.37 : -0.61;

        const auto& seg = sys.segments().front();
        Matrix a_shifted = seg.a;
        for (std::size_t i = 0; i < d; ++i) a_shifted(i, i) += shift;
        const auto shifted_sys = CoefficientSystem::autonomous(
            a_shifted, seg.b, seg.c, seg.d, seg.a.max_abs() + std::fabs(shift) + 1.0);

        const auto base = spectrum::autonomous_spectrum(sys);
        const auto shifted = spectrum::autonomous_spectrum(shifted_sys);
        const auto p0 = interval_points(base);
        const auto p1 = interval_points(shifted);
        REQUIRE(p0.size() == p1.size());
        for (std::size_t k = 0; k < p0.size(); ++k)
            CHECK(std::fabs(p1[k] - (p0[k] + shift)) <= 1e-9);
    }
}

TEST_CASE("property: finite-time clusters agree with conclusive eigen-lift points") {
    std::mt19937_64 gen(107);
    int conclusive = 0;
    int tried = 0;
    while (conclusive < 8 && tried < 40) {
        ++tried;
        const std::size_t d = 1 + tried % 2;
        const auto sys = random_system(gen, d, 1.0);
        const auto eigen_est = spectrum::autonomous_spectrum(sys);

        bool has_inconclusive = false;
        for (const auto& cand : eigen_est.details)
            if (cand.verdict == ConeVerdict::kInconclusive) has_inconclusive = true;
        if (has_inconclusive) continue;
        ++conclusive;

        spectrum::FiniteTimeOptions opt;
        opt.seed = 5000 + static_cast<std::uint64_t>(tried);
        const auto ft = spectrum::finite_time_estimate(sys, opt);

        // every cluster center near a retained point
        for (const auto& iv : ft.intervals) {
            const double center = 0.5 * (iv.lower + iv.upper);
            double best = 1e300;
            for (const auto& riv : eigen_est.intervals)
                best = std::min(best,
                                std::max(0.0, std::max(riv.lower - center,
                                                       center - riv.upper)));
            CHECK(best <= 0.05);
        }
        // every retained point hit by some cluster
        for (const auto& riv : eigen_est.intervals) {
            double best = 1e300;
            for (const auto& iv : ft.intervals) {
                const double center = 0.5 * (iv.lower + iv.upper);
                best = std::min(best, std::max(0.0, std::max(riv.lower - center,
                                                             center - riv.upper)));
            }
            CHECK(best <= 0.05);
        }
    }
    CHECK(conclusive >= 8);
}

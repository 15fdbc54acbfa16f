#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "msrds/errors.hpp"
#include "msrds/moment_dynamics.hpp"
#include "msrds/numerics/linalg.hpp"
#include "msrds/spectrum.hpp"

using namespace msrds;
using moment_dynamics::CoefficientSystem;
using moment_dynamics::MomentState;
using numerics::Matrix;
using numerics::Vector;

namespace {

// Independent oracle: the first/second moment derivatives evaluated as
// plain componentwise sums, kept deliberately separate from the library's
// matrix-form implementation.
struct OracleDerivative {
    Vector dm;
    Matrix ds;
};

OracleDerivative componentwise_oracle(const Matrix& a, const Matrix& b, const Matrix& c,
                                      const Matrix& d, const Vector& m, const Matrix& s) {
    const std::size_t n = m.size();
    OracleDerivative out{Vector(n, 0.0), Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) out.dm[i] += (a(i, k) + b(i, k)) * m[k];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                v += a(i, k) * s(k, j) + a(j, k) * s(k, i);
            for (std::size_t mm = 0; mm < n; ++mm)
                for (std::size_t nn = 0; nn < n; ++nn) v += c(i, mm) * c(j, nn) * s(mm, nn);
            for (std::size_t k = 0; k < n; ++k)
                v += b(i, k) * m[k] * m[j] + b(j, k) * m[k] * m[i];
            for (std::size_t mm = 0; mm < n; ++mm)
                for (std::size_t nn = 0; nn < n; ++nn)
                    v += (c(i, mm) * d(j, nn) + c(j, nn) * d(i, mm) + d(i, mm) * d(j, nn)) *
                         m[mm] * m[nn];
            out.ds(i, j) = v;
        }
    }
    return out;
}

CoefficientSystem scalar_system(double alpha, double beta, double c = 1.0, double d = 0.0) {
    return CoefficientSystem::autonomous(Matrix{{alpha}}, Matrix{{beta}}, Matrix{{c}},
                                         Matrix{{d}});
}

CoefficientSystem random_system(std::mt19937_64& gen, std::size_t d, double bound) {
    std::uniform_real_distribution<double> entry(-bound, bound);
    Matrix a(d, d), b(d, d), c(d, d), dd(d, d);
    for (auto* m : {&a, &b, &c, &dd})
        for (auto& v : m->data()) v = entry(gen);
    return CoefficientSystem::autonomous(a, b, c, dd, bound);
}

}  // namespace

TEST_CASE("index_map enumerates upper-triangular pairs row-major") {
    CHECK(moment_dynamics::index_map(1) ==
          std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}});
    CHECK(moment_dynamics::index_map(2) ==
          std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {0, 1}, {1, 1}});
    CHECK(moment_dynamics::index_map(3).size() == 6);

    for (std::size_t d : {1u, 2u, 3u, 5u}) {
        const auto pairs = moment_dynamics::index_map(d);
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            CHECK(moment_dynamics::pair_index(pairs[r].first, pairs[r].second, d) == r);
            CHECK(moment_dynamics::pair_index(pairs[r].second, pairs[r].first, d) == r);
        }
    }
}

TEST_CASE("build_lift: scalar pitchfork linearization blocks") {
    const double alpha = -0.25, beta = 0.8;
    const auto op = moment_dynamics::build_lift(scalar_system(alpha, beta), 0.0);
    CHECK(op.l_uu(0, 0) == doctest::Approx(2.0 * (alpha + beta)).epsilon(1e-15));
    CHECK(op.l_vu(0, 0) == doctest::Approx(2.0 * beta).epsilon(1e-15));
    CHECK(op.l_vv(0, 0) == doctest::Approx(2.0 * alpha + 1.0).epsilon(1e-15));
}

TEST_CASE("build_lift: zero system gives zero blocks") {
    const auto op = moment_dynamics::build_lift(scalar_system(0.0, 0.0, 0.0, 0.0), 0.0);
    CHECK(op.l_uu.max_abs() == 0.0);
    CHECK(op.l_vu.max_abs() == 0.0);
    CHECK(op.l_vv.max_abs() == 0.0);
}

TEST_CASE("build_lift agrees with the componentwise oracle entrywise") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 1 + trial % 3;
        const auto sys = random_system(gen, d, 1.0);
        const auto state = moment_dynamics::sample_admissible(d, 1000 + trial, 1.0);
        const auto& seg = sys.segments().front();
        const auto oracle =
            componentwise_oracle(seg.a, seg.b, seg.c, seg.d, state.m, state.s);

        const auto op = moment_dynamics::build_lift(sys, 0.0);
        const auto stacked = moment_dynamics::stack_state(state);
        const auto dstack = op.apply(stacked);

        const auto pairs = moment_dynamics::index_map(d);
        const std::size_t p = pairs.size();
        const double tol = 1e-12 * (1.0 + state.s.max_abs() + state.s.max_abs());
        for (std::size_t r = 0; r < p; ++r) {
            const auto [i, j] = pairs[r];
            // u' from the product rule on m_i m_j
            const double du = oracle.dm[i] * state.m[j] + state.m[i] * oracle.dm[j];
            CHECK(std::fabs(dstack[r] - du) <= tol);
            CHECK(std::fabs(dstack[p + r] - oracle.ds(i, j)) <= tol);
        }
    }
}

TEST_CASE("moment_rhs: scalar pitchfork values and linearity at zero") {
    const double alpha = 0.4, beta = -0.3;
    const auto sys = scalar_system(alpha, beta);
    const auto d1 = moment_dynamics::moment_rhs(sys, 0.0, {{1.0}, Matrix{{1.0}}});
    CHECK(d1.dm[0] == doctest::Approx(alpha + beta).epsilon(1e-15));
    CHECK(d1.ds(0, 0) == doctest::Approx(2.0 * alpha + 1.0 + 2.0 * beta).epsilon(1e-15));

    const auto d0 = moment_dynamics::moment_rhs(sys, 0.0, {{0.0}, Matrix{{0.0}}});
    CHECK(d0.dm[0] == 0.0);
    CHECK(d0.ds(0, 0) == 0.0);
}

TEST_CASE("moment_rhs matches the componentwise oracle on random instances") {
    std::mt19937_64 gen(29);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 1 + trial % 3;
        const auto sys = random_system(gen, d, 1.0);
        const auto state = moment_dynamics::sample_admissible(d, 2000 + trial, 0.8);
        const auto& seg = sys.segments().front();
        const auto oracle =
            componentwise_oracle(seg.a, seg.b, seg.c, seg.d, state.m, state.s);
        const auto got = moment_dynamics::moment_rhs(sys, 0.0, state);
        const double tol = 1e-12 * (1.0 + state.s.max_abs());
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(std::fabs(got.dm[i] - oracle.dm[i]) <= tol);
            for (std::size_t j = 0; j < d; ++j)
                CHECK(std::fabs(got.ds(i, j) - 0.5 * (oracle.ds(i, j) + oracle.ds(j, i))) <=
                      tol);
        }
    }
}

TEST_CASE("propagate_moments: identity at t = s and closed-form oracles") {
    const auto sys = scalar_system(0.0, 1.0);
    const MomentState init{{1.0}, Matrix{{1.0}}};
    const auto same = moment_dynamics::propagate_moments(sys, 2.0, 2.0, init);
    CHECK(same.m[0] == 1.0);
    CHECK(same.s(0, 0) == 1.0);

    // closed form: e^{(2a+1)t} ||Z||^2 + 2b/(2b-1) (e^{(2a+2b)t} - e^{(2a+1)t}) (EZ)^2
    const auto moved = moment_dynamics::propagate_moments(sys, 0.0, 1.0, init);
    const double expected = 2.0 * std::exp(2.0) - std::exp(1.0);  // 12.05983...
    CHECK(std::fabs(moved.s(0, 0) - expected) <= 1e-6);
    CHECK(moved.m[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-9));

    const auto pure = moment_dynamics::propagate_moments(scalar_system(0.0, 0.0), 0.0, 1.0,
                                                         {{0.0}, Matrix{{1.0}}});
    CHECK(std::fabs(pure.s(0, 0) - std::exp(1.0)) <= 1e-8);
}

TEST_CASE("ms_norm values and the inadmissible trace guard") {
    CHECK(moment_dynamics::ms_norm({{0.0}, Matrix{{0.0}}}) == 0.0);
    CHECK(moment_dynamics::ms_norm({{0.0, 0.0}, Matrix::identity(2)}) ==
          doctest::Approx(std::sqrt(2.0)));
    CHECK(moment_dynamics::ms_norm({{0.0}, Matrix{{12.05983}}}) ==
          doctest::Approx(3.47273).epsilon(1e-5));
    CHECK_THROWS_AS((void)moment_dynamics::ms_norm({{0.0}, Matrix{{-1.0}}}),
                    InadmissibleStateError);
}

TEST_CASE("sample_admissible: deterministic, always in the cone") {
    const auto zero = moment_dynamics::sample_admissible(5, 0, 0.0);
    CHECK(numerics::norm2(zero.m) == 0.0);
    CHECK(zero.s.max_abs() == 0.0);

    const auto a = moment_dynamics::sample_admissible(42, 42, 1.0);
    const auto b = moment_dynamics::sample_admissible(42, 42, 1.0);
    CHECK(a.m == b.m);

    for (std::uint64_t seed : {1ull, 42ull, 77ull}) {
        const auto st = moment_dynamics::sample_admissible(3, seed, 1.0);
        Matrix cov = st.s;
        cov -= numerics::outer(st.m);
        CHECK(numerics::sym_min_eigenvalue(cov) >= -1e-12 * (1.0 + st.s.max_abs()));
        CHECK_NOTHROW(moment_dynamics::validate_moment_state(st));
    }
}

TEST_CASE("is_admissible encodes (EX)^2 <= EX^2") {
    const double u1[] = {1.0}, v1[] = {1.0};
    CHECK(moment_dynamics::is_admissible(u1, v1, 1, 1e-9));
    const double v0[] = {0.0};
    CHECK_FALSE(moment_dynamics::is_admissible(u1, v0, 1, 1e-9));
    const double u0[] = {0.0};
    CHECK(moment_dynamics::is_admissible(u0, v1, 1, 1e-9));  // pure-variance state

    // rank-2 u is not a first-moment square
    const double u2[] = {1.0, 0.0, 1.0};  // identity in tri form, d = 2
    const double v2[] = {2.0, 0.0, 2.0};
    CHECK_FALSE(moment_dynamics::is_admissible(u2, v2, 2, 1e-9));
}

TEST_CASE("property: two-parameter semigroup (cocycle) of propagation") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 1 + trial % 2;
        const auto sys = random_system(gen, d, 0.8);
        const auto init = moment_dynamics::sample_admissible(d, 3000 + trial, 1.0);
        const double s = uni(gen);
        const double r = s + 0.3 + uni(gen);
        const double t = r + 0.3 + uni(gen);

        const auto direct = moment_dynamics::propagate_moments(sys, s, t, init);
        const auto mid = moment_dynamics::propagate_moments(sys, s, r, init);
        const auto composed = moment_dynamics::propagate_moments(sys, r, t, mid);
        const double scale = 1.0 + direct.s.max_abs();
        for (std::size_t i = 0; i < d; ++i)
            CHECK(std::fabs(direct.m[i] - composed.m[i]) <= 1e-8 * scale);
        CHECK((direct.s - composed.s).frobenius_norm() <= 1e-8 * scale);
    }
}

TEST_CASE("property: propagation preserves the admissible cone") {
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> horizon(0.5, 20.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 1 + trial % 2;
        const auto sys = random_system(gen, d, 0.3);
        const auto init = moment_dynamics::sample_admissible(d, 4000 + trial, 1.0);
        const auto out = moment_dynamics::propagate_moments(sys, 0.0, horizon(gen), init);
        const double scale = 1.0 + out.s.max_abs();
        CHECK(numerics::sym_min_eigenvalue(out.s) >= -1e-8 * scale);
        Matrix cov = out.s;
        cov -= numerics::outer(out.m);
        CHECK(numerics::sym_min_eigenvalue(cov) >= -1e-8 * scale);
    }
}

TEST_CASE("property: lifted propagation is linear") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t d = 1 + trial % 2;
        const auto sys = random_system(gen, d, 0.6);
        const auto x1 =
            moment_dynamics::stack_state(moment_dynamics::sample_admissible(d, 5000 + trial, 1.0));
        const auto x2 =
            moment_dynamics::stack_state(moment_dynamics::sample_admissible(d, 6000 + trial, 1.0));
        const double c1 = coeff(gen), c2 = coeff(gen);

        Vector combo(x1.size());
        for (std::size_t i = 0; i < x1.size(); ++i) combo[i] = c1 * x1[i] + c2 * x2[i];

        const auto p1 = moment_dynamics::propagate_lifted(sys, 0.0, 1.5, x1);
        const auto p2 = moment_dynamics::propagate_lifted(sys, 0.0, 1.5, x2);
        const auto pc = moment_dynamics::propagate_lifted(sys, 0.0, 1.5, combo);
        double norm = 0.0;
        for (std::size_t i = 0; i < pc.size(); ++i)
            norm = std::max(norm, std::fabs(pc[i]));
        for (std::size_t i = 0; i < pc.size(); ++i)
            CHECK(std::fabs(pc[i] - (c1 * p1[i] + c2 * p2[i])) <= 1e-8 * (1.0 + norm));
    }
}

TEST_CASE("property: Gronwall envelope with the Gamma bound") {
    std::mt19937_64 gen(43);
    std::uniform_real_distribution<double> horizon(0.2, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 1 + trial % 2;
        const auto sys = random_system(gen, d, 0.4);
        const double gamma = spectrum::gamma_bound(sys);
        const auto init = moment_dynamics::sample_admissible(d, 7000 + trial, 1.0);
        const double tau = horizon(gen);
        const auto out = moment_dynamics::propagate_moments(sys, 0.0, tau, init);

        const double tr0 = init.s.trace();
        const double tr1 = out.s.trace();
        const double dd = static_cast<double>(d);
        CHECK(tr1 <= dd * std::exp(2.0 * gamma * tau) * tr0 * (1.0 + 1e-9));
        CHECK(tr1 >= (1.0 / dd) * std::exp(-2.0 * gamma * tau) * tr0 * (1.0 - 1e-9));
    }
}

TEST_CASE("piecewise schedules propagate across segment boundaries") {
    // two segments: pure growth then pure variance rotation
    std::vector<moment_dynamics::CoefficientSegment> segs;
    segs.push_back({-std::numeric_limits<double>::infinity(), Matrix{{0.5}}, Matrix{{0.0}},
                    Matrix{{0.0}}, Matrix{{0.0}}});
    segs.push_back({1.0, Matrix{{-0.5}}, Matrix{{0.0}}, Matrix{{0.0}}, Matrix{{0.0}}});
    const auto sys = CoefficientSystem::piecewise(segs);
    CHECK_FALSE(sys.is_autonomous());

    const auto out =
        moment_dynamics::propagate_moments(sys, 0.0, 2.0, {{1.0}, Matrix{{1.0}}});
    // dS = 2 a S on each segment: growth e^{1} then decay e^{-1}
    CHECK(out.s(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(out.m[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("moment state validation catches asymmetry and indefiniteness") {
    Matrix bad(2, 2);
    bad(0, 1) = 1e-6;  // asymmetric
    CHECK_THROWS_AS(moment_dynamics::make_moment_state({0.0, 0.0}, bad),
                    InadmissibleStateError);

    Matrix indef = Matrix::identity(2);
    indef(1, 1) = -0.5;
    CHECK_THROWS_AS(moment_dynamics::make_moment_state({0.0, 0.0}, indef),
                    InadmissibleStateError);

    // covariance violation: S - m m^T indefinite even though S is PSD
    CHECK_THROWS_AS(moment_dynamics::make_moment_state({2.0}, Matrix{{1.0}}),
                    InadmissibleStateError);
}

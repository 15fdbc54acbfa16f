#include "msrds/moment_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "msrds/errors.hpp"
#include "msrds/numerics/counter_rng.hpp"
#include "msrds/numerics/linalg.hpp"
#include "msrds/numerics/ode.hpp"

namespace msrds::moment_dynamics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_coeff_matrix(const Matrix& m, std::size_t d, const char* name) {
    if (m.rows() != d || m.cols() != d)
        throw std::invalid_argument(std::string("CoefficientSystem: matrix ") + name +
                                    " is not d x d");
    if (!m.all_finite())
        throw std::invalid_argument(std::string("CoefficientSystem: matrix ") + name +
                                    " has non-finite entries");
}

}  // namespace

CoefficientSystem::CoefficientSystem(std::vector<CoefficientSegment> segments, double bound)
    : segments_(std::move(segments)) {
    if (segments_.empty())
        throw std::invalid_argument("CoefficientSystem: needs at least one segment");
    d_ = segments_.front().a.rows();
    double max_entry = 0.0;
    double prev = -kInf;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        const auto& seg = segments_[k];
        check_coeff_matrix(seg.a, d_, "A");
        check_coeff_matrix(seg.b, d_, "B");
        check_coeff_matrix(seg.c, d_, "C");
        check_coeff_matrix(seg.d, d_, "D");
        if (k > 0 && !(seg.start > prev))
            throw std::invalid_argument(
                "CoefficientSystem: segment start times must be strictly increasing");
        prev = seg.start;
        max_entry = std::max({max_entry, seg.a.max_abs(), seg.b.max_abs(), seg.c.max_abs(),
                              seg.d.max_abs()});
    }
    bound_ = bound < 0.0 ? max_entry : bound;
    if (max_entry > bound_ * (1.0 + 1e-12) + 1e-300)
        throw std::invalid_argument(
            "CoefficientSystem: an entry exceeds the declared bound m");
}

CoefficientSystem CoefficientSystem::autonomous(Matrix a, Matrix b, Matrix c, Matrix d,
                                                double bound) {
    std::vector<CoefficientSegment> segs;
    segs.push_back(CoefficientSegment{-kInf, std::move(a), std::move(b), std::move(c),
                                      std::move(d)});
    return CoefficientSystem(std::move(segs), bound);
}

CoefficientSystem CoefficientSystem::piecewise(std::vector<CoefficientSegment> segments,
                                               double bound) {
    return CoefficientSystem(std::move(segments), bound);
}

const CoefficientSegment& CoefficientSystem::segment_at(double t) const {
    if (t < segments_.front().start)
        throw std::invalid_argument("CoefficientSystem: time below schedule domain");
    for (std::size_t k = segments_.size(); k-- > 0;)
        if (t >= segments_[k].start) return segments_[k];
    return segments_.front();
}

void validate_moment_state(const MomentState& state, double psd_tol) {
    const std::size_t d = state.m.size();
    if (d == 0) throw InadmissibleStateError("MomentState: empty first moment");
    if (state.s.rows() != d || state.s.cols() != d)
        throw InadmissibleStateError("MomentState: S is not d x d");
    for (double v : state.m)
        if (!std::isfinite(v)) throw InadmissibleStateError("MomentState: non-finite m");
    if (!state.s.all_finite()) throw InadmissibleStateError("MomentState: non-finite S");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (std::fabs(state.s(i, j) - state.s(j, i)) > 1e-12)
                throw InadmissibleStateError("MomentState: S not symmetric within 1e-12");
    const double scale = 1.0 + state.s.max_abs();
    if (numerics::sym_min_eigenvalue(state.s) < -psd_tol * scale)
        throw InadmissibleStateError("MomentState: S not positive semidefinite");
    Matrix cov = state.s;
    cov -= numerics::outer(state.m);
    if (numerics::sym_min_eigenvalue(cov) < -psd_tol * scale)
        throw InadmissibleStateError("MomentState: S - m m^T not positive semidefinite");
}

MomentState make_moment_state(Vector m, Matrix s, double psd_tol) {
    MomentState state{std::move(m), std::move(s)};
    validate_moment_state(state, psd_tol);
    return state;
}

double ms_norm(const MomentState& state) {
    const double tr = state.s.trace();
    if (tr < -1e-10)
        throw InadmissibleStateError("ms_norm: trace of S below -1e-10");
    return std::sqrt(std::max(0.0, tr));
}

std::vector<std::pair<std::size_t, std::size_t>> index_map(std::size_t d) {
    if (d == 0) throw std::invalid_argument("index_map: d must be >= 1");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(d * (d + 1) / 2);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) out.emplace_back(i, j);
    return out;
}

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t d) {
    if (i > j) std::swap(i, j);
    // row i starts after i rows of lengths d, d-1, ..., d-i+1
    return i * d - i * (i - 1) / 2 + (j - i);
}

Matrix LiftedOperator::stacked() const {
    const std::size_t p = d * (d + 1) / 2;
    Matrix out(2 * p, 2 * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            out(i, j) = l_uu(i, j);
            out(p + i, j) = l_vu(i, j);
            out(p + i, p + j) = l_vv(i, j);
        }
    return out;
}

Vector LiftedOperator::apply(std::span<const double> stacked_uv) const {
    const std::size_t p = d * (d + 1) / 2;
    if (stacked_uv.size() != 2 * p)
        throw std::invalid_argument("LiftedOperator::apply: wrong stacked length");
    Vector out(2 * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double su = 0.0, sv = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            su += l_uu(i, j) * stacked_uv[j];
            sv += l_vu(i, j) * stacked_uv[j] + l_vv(i, j) * stacked_uv[p + j];
        }
        out[i] = su;
        out[p + i] = sv;
    }
    return out;
}

LiftedOperator build_lift(const CoefficientSystem& coeffs, double t) {
    const auto& seg = coeffs.segment_at(t);
    const std::size_t d = coeffs.dimension();
    const std::size_t p = d * (d + 1) / 2;
    LiftedOperator op{d, Matrix(p, p), Matrix(p, p), Matrix(p, p)};
    const Matrix& a = seg.a;
    const Matrix& b = seg.b;
    const Matrix& c = seg.c;
    const Matrix& dd = seg.d;

    const auto pairs = index_map(d);
    for (std::size_t r = 0; r < p; ++r) {
        const auto [i, j] = pairs[r];
        // u' and the u -> v, v -> v single sums; u_{k,j} refers to the
        // unordered pair {k, j}
        for (std::size_t k = 0; k < d; ++k) {
            op.l_uu(r, pair_index(k, j, d)) += a(i, k) + b(i, k);
            op.l_uu(r, pair_index(k, i, d)) += a(j, k) + b(j, k);
            op.l_vv(r, pair_index(k, j, d)) += a(i, k);
            op.l_vv(r, pair_index(k, i, d)) += a(j, k);
            op.l_vu(r, pair_index(k, j, d)) += b(i, k);
            op.l_vu(r, pair_index(k, i, d)) += b(j, k);
        }
        // double sums run over all (m, n); off-diagonal pairs accumulate
        // both orderings onto the i <= j representative
        for (std::size_t mm = 0; mm < d; ++mm) {
            for (std::size_t nn = 0; nn < d; ++nn) {
                const std::size_t col = pair_index(mm, nn, d);
                op.l_vv(r, col) += c(i, mm) * c(j, nn);
                op.l_vu(r, col) +=
                    c(i, mm) * dd(j, nn) + c(j, nn) * dd(i, mm) + dd(i, mm) * dd(j, nn);
            }
        }
    }
    return op;
}

namespace {

// dS in matrix form; shared by the public op and the packed integrand.
Matrix second_moment_rhs(const CoefficientSegment& seg, const Vector& m, const Matrix& s) {
    const Matrix mm = numerics::outer(m);
    Matrix ds = seg.a * s + s * seg.a.transposed();
    ds += seg.c * s * seg.c.transposed();
    ds += seg.b * mm + mm * seg.b.transposed();
    ds += seg.c * mm * seg.d.transposed();
    ds += seg.d * mm * seg.c.transposed();
    ds += seg.d * mm * seg.d.transposed();
    // symmetric in exact arithmetic; enforce against round-off
    const std::size_t d = m.size();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = 0.5 * (ds(i, j) + ds(j, i));
            ds(i, j) = ds(j, i) = v;
        }
    return ds;
}

Vector first_moment_rhs(const CoefficientSegment& seg, const Vector& m) {
    Vector dm = seg.a * m;
    const Vector bm = seg.b * m;
    for (std::size_t i = 0; i < dm.size(); ++i) dm[i] += bm[i];
    return dm;
}

}  // namespace

MomentDerivative moment_rhs(const CoefficientSystem& coeffs, double t,
                            const MomentState& state) {
    if (state.dimension() != coeffs.dimension())
        throw std::invalid_argument("moment_rhs: dimension mismatch");
    validate_moment_state(state, 1e-8);  // tolerance-relaxed precondition
    const auto& seg = coeffs.segment_at(t);
    return MomentDerivative{first_moment_rhs(seg, state.m),
                            second_moment_rhs(seg, state.m, state.s)};
}

namespace {

// packed layout for integration: m (d entries) then upper triangle of S
Vector pack(const MomentState& st) {
    const std::size_t d = st.dimension();
    Vector y(d + d * (d + 1) / 2);
    for (std::size_t i = 0; i < d; ++i) y[i] = st.m[i];
    std::size_t k = d;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) y[k++] = st.s(i, j);
    return y;
}

MomentState unpack(std::span<const double> y, std::size_t d) {
    MomentState st{Vector(d), Matrix(d, d)};
    for (std::size_t i = 0; i < d; ++i) st.m[i] = y[i];
    std::size_t k = d;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            st.s(i, j) = y[k];
            st.s(j, i) = y[k];
            ++k;
        }
    return st;
}

// splits [s, t] at interior schedule boundaries
std::vector<double> segment_breaks(const CoefficientSystem& coeffs, double s, double t) {
    std::vector<double> times{s};
    for (const auto& seg : coeffs.segments())
        if (seg.start > s && seg.start < t) times.push_back(seg.start);
    times.push_back(t);
    return times;
}

}  // namespace

MomentState propagate_moments(const CoefficientSystem& coeffs, double s, double t,
                              const MomentState& initial, const Tolerances& tol) {
    if (!(t >= s)) throw std::invalid_argument("propagate_moments: t must be >= s");
    if (initial.dimension() != coeffs.dimension())
        throw std::invalid_argument("propagate_moments: dimension mismatch");
    validate_moment_state(initial, 1e-8);
    if (t == s) return initial;
    if (s < coeffs.domain_start())
        throw std::invalid_argument("propagate_moments: start below schedule domain");

    const std::size_t d = coeffs.dimension();
    Vector y = pack(initial);
    const auto breaks = segment_breaks(coeffs, s, t);
    for (std::size_t leg = 0; leg + 1 < breaks.size(); ++leg) {
        const double a = breaks[leg];
        const double b = breaks[leg + 1];
        const CoefficientSegment& seg = coeffs.segment_at(0.5 * (a + b));
        numerics::OdeProblem problem{
            y.size(),
            [&seg, d](double, std::span<const double> yy, std::span<double> dy) {
                const MomentState st = unpack(yy, d);
                const Vector dm = first_moment_rhs(seg, st.m);
                const Matrix ds = second_moment_rhs(seg, st.m, st.s);
                for (std::size_t i = 0; i < d; ++i) dy[i] = dm[i];
                std::size_t k = d;
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = i; j < d; ++j) dy[k++] = ds(i, j);
            },
            a, b, y};
        y = numerics::integrate_adaptive(problem, tol.rel, tol.abs);
    }
    return unpack(y, d);
}

Vector stack_state(const MomentState& state) {
    const std::size_t d = state.dimension();
    const std::size_t p = d * (d + 1) / 2;
    Vector out(2 * p);
    const auto pairs = index_map(d);
    for (std::size_t r = 0; r < p; ++r) {
        const auto [i, j] = pairs[r];
        out[r] = state.m[i] * state.m[j];
        out[p + r] = state.s(i, j);
    }
    return out;
}

Matrix sym_from_tri(std::span<const double> tri, std::size_t d) {
    if (tri.size() != d * (d + 1) / 2)
        throw std::invalid_argument("sym_from_tri: wrong length");
    Matrix m(d, d);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            m(i, j) = tri[k];
            m(j, i) = tri[k];
            ++k;
        }
    return m;
}

Vector tri_from_sym(const Matrix& m) {
    const std::size_t d = m.rows();
    Vector out(d * (d + 1) / 2);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) out[k++] = m(i, j);
    return out;
}

Vector propagate_lifted(const CoefficientSystem& coeffs, double s, double t, Vector stacked,
                        const Tolerances& tol) {
    if (!(t >= s)) throw std::invalid_argument("propagate_lifted: t must be >= s");
    const std::size_t d = coeffs.dimension();
    if (stacked.size() != d * (d + 1))
        throw std::invalid_argument("propagate_lifted: wrong stacked length");
    if (t == s) return stacked;

    const auto breaks = segment_breaks(coeffs, s, t);
    for (std::size_t leg = 0; leg + 1 < breaks.size(); ++leg) {
        const double a = breaks[leg];
        const double b = breaks[leg + 1];
        const LiftedOperator op = build_lift(coeffs, 0.5 * (a + b));
        numerics::OdeProblem problem{
            stacked.size(),
            [&op](double, std::span<const double> yy, std::span<double> dy) {
                const Vector out = op.apply(yy);
                std::copy(out.begin(), out.end(), dy.begin());
            },
            a, b, stacked};
        stacked = numerics::integrate_adaptive(problem, tol.rel, tol.abs);
    }
    return stacked;
}

MomentState sample_admissible(std::size_t d, std::uint64_t seed, double scale) {
    if (d == 0) throw std::invalid_argument("sample_admissible: d must be >= 1");
    Vector m(d);
    for (std::size_t i = 0; i < d; ++i)
        m[i] = scale * numerics::counter_normal(seed, 0, 0, i);
    Matrix g(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            g(i, j) = scale * numerics::counter_normal(seed, 1, i, j);
    Matrix s = numerics::outer(m);
    s += g * g.transposed();
    return MomentState{std::move(m), std::move(s)};
}

bool is_admissible(std::span<const double> u, std::span<const double> v, std::size_t d,
                   double tol) {
    const Matrix uu = sym_from_tri(u, d);
    const Matrix vv = sym_from_tri(v, d);
    const double scale = 1.0 + std::max(uu.max_abs(), vv.max_abs());
    const double slack = tol * scale;

    const auto ue = numerics::sym_eigen(uu);
    if (ue.values.front() < -slack) return false;
    if (d >= 2 && ue.values[d - 2] > slack) return false;  // rank above 1
    if (numerics::sym_min_eigenvalue(vv) < -slack) return false;
    Matrix diff = vv;
    diff -= uu;
    return numerics::sym_min_eigenvalue(diff) >= -slack;
}

}  // namespace msrds::moment_dynamics

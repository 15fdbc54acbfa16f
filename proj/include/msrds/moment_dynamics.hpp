#ifndef MSRDS_MOMENT_DYNAMICS_HPP
#define MSRDS_MOMENT_DYNAMICS_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "msrds/numerics/matrix.hpp"

namespace msrds::moment_dynamics {

using numerics::Matrix;
using numerics::Vector;

// One piece of a piecewise-constant coefficient schedule for the linear
// mean-field SDE dX = (A X + B E[X]) dt + (C X + D E[X]) dW.
struct CoefficientSegment {
    double start;  // -infinity for the single segment of an autonomous system
    Matrix a, b, c, d;
};

// Validated coefficient schedule. All four matrices of every segment are
// d x d with entries bounded by `bound` in absolute value; segment start
// times are strictly increasing.
class CoefficientSystem {
  public:
    // Single-segment (autonomous) system. bound < 0 means "use the largest
    // entry magnitude".
    static CoefficientSystem autonomous(Matrix a, Matrix b, Matrix c, Matrix d,
                                        double bound = -1.0);
    static CoefficientSystem piecewise(std::vector<CoefficientSegment> segments,
                                       double bound = -1.0);

    std::size_t dimension() const { return d_; }
    double bound() const { return bound_; }
    bool is_autonomous() const { return segments_.size() == 1; }
    double domain_start() const { return segments_.front().start; }
    const std::vector<CoefficientSegment>& segments() const { return segments_; }
    const CoefficientSegment& segment_at(double t) const;

  private:
    CoefficientSystem(std::vector<CoefficientSegment> segments, double bound);
    std::size_t d_;
    double bound_;
    std::vector<CoefficientSegment> segments_;
};

// First moment vector E[X^i] and second moment matrix E[X^i X^j]. States
// produced by genuine random vectors satisfy S = S^T, S >= 0 and
// S - m m^T >= 0; validation checks those up to the given eigenvalue slack.
struct MomentState {
    Vector m;
    Matrix s;

    std::size_t dimension() const { return m.size(); }
};

// Throws InadmissibleStateError if the state violates symmetry (1e-12) or
// positive semidefiniteness of S and S - m m^T below -psd_tol.
void validate_moment_state(const MomentState& state, double psd_tol = 1e-10);
MomentState make_moment_state(Vector m, Matrix s, double psd_tol = 1e-10);

// sqrt(trace S) = sqrt(E|X|^2). Throws when trace S < -1e-10; smaller
// negative round-off is clamped to zero.
double ms_norm(const MomentState& state);

// Canonical row-major enumeration of index pairs (i, j), i <= j, 0-based:
// (0,0), (0,1), ..., (0,d-1), (1,1), ..., (d-1,d-1).
std::vector<std::pair<std::size_t, std::size_t>> index_map(std::size_t d);

// Position of the unordered pair {i, j} in index_map(d).
std::size_t pair_index(std::size_t i, std::size_t j, std::size_t d);

// Linear operator of the lifted ODE on R^{d(d+1)} acting on the stacked
// vector (u, v) of upper-triangular pairs: u' = L_uu u and
// v' = L_vu u + L_vv v. The u-equation never involves v.
struct LiftedOperator {
    std::size_t d;
    Matrix l_uu, l_vu, l_vv;  // each d(d+1)/2 square

    std::size_t lifted_dimension() const { return d * (d + 1); }
    Matrix stacked() const;  // [[L_uu, 0], [L_vu, L_vv]]
    // derivative of a stacked (u, v) vector
    Vector apply(std::span<const double> stacked_uv) const;
};

LiftedOperator build_lift(const CoefficientSystem& coeffs, double t);

// Time derivative of (m, S): dm = (A+B) m and
// dS = A S + S A^T + C S C^T + B M + M B^T + C M D^T + D M C^T + D M D^T
// with M = m m^T; dS is symmetric by construction.
struct MomentDerivative {
    Vector dm;
    Matrix ds;
};
MomentDerivative moment_rhs(const CoefficientSystem& coeffs, double t,
                            const MomentState& state);

struct Tolerances {
    double rel = 1e-10;
    double abs = 1e-12;
};

// Evolves the moments from time s to t >= s with the adaptive integrator,
// splitting at schedule boundaries. The returned S is exactly symmetric.
MomentState propagate_moments(const CoefficientSystem& coeffs, double s, double t,
                              const MomentState& initial, const Tolerances& tol = {});

// Lifted-coordinate helpers. The stacked layout is u (d(d+1)/2 entries in
// index_map order) followed by v.
Vector stack_state(const MomentState& state);
Matrix sym_from_tri(std::span<const double> tri, std::size_t d);
Vector tri_from_sym(const Matrix& m);

// Evolves an arbitrary stacked (u, v) vector by the lifted linear ODE; the
// admissible cone is not required (the lift is defined on all of
// R^{d(d+1)}).
Vector propagate_lifted(const CoefficientSystem& coeffs, double s, double t,
                        Vector stacked, const Tolerances& tol = {});

// Draws m ~ scale * N(0, I) and a factor G likewise, returning
// (m, m m^T + G G^T); admissible by construction and deterministic per seed.
MomentState sample_admissible(std::size_t d, std::uint64_t seed, double scale);

// Cone membership in lifted coordinates: U PSD of rank <= 1, V PSD and
// V - U PSD, each within tol (scaled by the largest entry magnitude).
// Encodes (E X)^2 <= E X^2.
bool is_admissible(std::span<const double> u, std::span<const double> v, std::size_t d,
                   double tol);

}  // namespace msrds::moment_dynamics

#endif

#include "msrds/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace msrds::numerics {

namespace {

// LU decomposition with partial pivoting; returns pivot row order and the
// sign of the permutation, factors stored in place.
int lu_factor(Matrix& a, std::vector<std::size_t>& piv) {
    const std::size_t n = a.rows();
    piv.resize(n);
    std::iota(piv.begin(), piv.end(), std::size_t{0});
    int sign = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::fabs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::fabs(a(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best == 0.0) return 0;  // singular
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(piv[k], piv[p]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            a(i, k) /= a(k, k);
            const double f = a(i, k);
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return sign;
}

}  // namespace

Vector solve(const Matrix& a, const Vector& b) {
    if (!a.square() || a.rows() != b.size())
        throw std::invalid_argument("solve: shape mismatch");
    Matrix lu = a;
    std::vector<std::size_t> piv;
    if (lu_factor(lu, piv) == 0) throw std::runtime_error("solve: singular matrix");
    const std::size_t n = a.rows();
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[piv[i]];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu(ii, j) * x[j];
        x[ii] /= lu(ii, ii);
    }
    return x;
}

Matrix solve(const Matrix& a, const Matrix& b) {
    Matrix x(b.rows(), b.cols());
    Vector col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        Vector xj = solve(a, col);
        for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = xj[i];
    }
    return x;
}

double determinant(const Matrix& a) {
    if (!a.square()) throw std::invalid_argument("determinant: non-square");
    Matrix lu = a;
    std::vector<std::size_t> piv;
    const int sign = lu_factor(lu, piv);
    if (sign == 0) return 0.0;
    double det = sign;
    for (std::size_t i = 0; i < a.rows(); ++i) det *= lu(i, i);
    return det;
}

PivotedQr pivoted_qr(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    PivotedQr out{Matrix::identity(m), a, std::vector<std::size_t>(n)};
    std::iota(out.permutation.begin(), out.permutation.end(), std::size_t{0});
    Matrix& r = out.r;
    Matrix& q = out.q;

    const std::size_t steps = std::min(m, n);
    std::vector<double> v(m);
    for (std::size_t k = 0; k < steps; ++k) {
        // pivot: bring the column with the largest remaining norm to front
        std::size_t best = k;
        double best_norm = -1.0;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += r(i, j) * r(i, j);
            if (s > best_norm) {
                best_norm = s;
                best = j;
            }
        }
        if (best != k) {
            for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, best));
            std::swap(out.permutation[k], out.permutation[best]);
        }

        double alpha = 0.0;
        for (std::size_t i = k; i < m; ++i) alpha += r(i, k) * r(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (r(k, k) > 0.0) alpha = -alpha;

        double vnorm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            v[i] = r(i, k);
            if (i == k) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;

        // apply H = I - 2 v v^T / (v^T v) to R (left) and accumulate into Q
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += v[i] * r(i, j);
            s = 2.0 * s / vnorm2;
            for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i];
        }
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += v[i] * q(i, j);
            s = 2.0 * s / vnorm2;
            for (std::size_t i = k; i < m; ++i) q(i, j) -= s * v[i];
        }
        for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;
    }
    // q currently holds the product of reflectors applied to I, i.e. Q^T
    out.q = q.transposed();
    return out;
}

Matrix trailing_nullspace(const Matrix& a, std::size_t k) {
    const std::size_t n = a.cols();
    if (k == 0 || k > n) throw std::invalid_argument("trailing_nullspace: bad k");
    PivotedQr qr = pivoted_qr(a.transposed());
    Matrix basis(n, k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) basis(i, j) = qr.q(i, n - k + j);
    return basis;
}

SymEigen sym_eigen(const Matrix& a) {
    if (!a.square()) throw std::invalid_argument("sym_eigen: non-square");
    const std::size_t n = a.rows();
    Matrix d = a;
    // symmetrize defensively; callers pass nominally symmetric matrices
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (d(i, j) + d(j, i));
            d(i, j) = d(j, i) = v;
        }
    Matrix v = Matrix::identity(n);

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += d(i, j) * d(i, j);
        if (off <= 1e-30 * (1.0 + d.frobenius_norm())) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = d(p, q);
                if (apq == 0.0) continue;
                const double app = d(p, p);
                const double aqq = d(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double dkp = d(k, p);
                    const double dkq = d(k, q);
                    d(k, p) = c * dkp - s * dkq;
                    d(k, q) = s * dkp + c * dkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double dpk = d(p, k);
                    const double dqk = d(q, k);
                    d(p, k) = c * dpk - s * dqk;
                    d(q, k) = s * dpk + c * dqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen out{Vector(n), Matrix(n, n)};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Vector diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = d(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] < diag[y]; });
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = diag[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

double sym_min_eigenvalue(const Matrix& a) { return sym_eigen(a).values.front(); }

Matrix psd_sqrt_factor(const Matrix& a) {
    SymEigen e = sym_eigen(a);
    const std::size_t n = a.rows();
    Matrix f(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double lam = std::max(0.0, e.values[j]);
        const double s = std::sqrt(lam);
        for (std::size_t i = 0; i < n; ++i) f(i, j) = e.vectors(i, j) * s;
    }
    return f;
}

}  // namespace msrds::numerics

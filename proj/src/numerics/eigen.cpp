#include "msrds/numerics/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "msrds/errors.hpp"
#include "msrds/numerics/linalg.hpp"

namespace msrds::numerics {

namespace {

using cdouble = std::complex<double>;

void hessenberg_reduce(Matrix& h) {
    const std::size_t n = h.rows();
    if (n < 3) return;
    std::vector<double> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += h(i, k) * h(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (h(k + 1, k) > 0.0) alpha = -alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = h(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        // similarity transform H <- P H P with P = I - 2 v v^T / v^T v
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
            s = 2.0 * s / vnorm2;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            s = 2.0 * s / vnorm2;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
        }
        h(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

// Eigenvalues of a real 2x2 [[a,b],[c,d]], stable against cancellation.
void eig2x2(double a, double b, double c, double d, cdouble& l1, cdouble& l2) {
    const double mid = 0.5 * (a + d);
    const double p = 0.5 * (a - d);
    const double disc = p * p + b * c;
    if (disc >= 0.0) {
        const double q = std::sqrt(disc);
        const double big = mid + std::copysign(q, mid);
        if (big == 0.0) {
            l1 = cdouble(q, 0.0);
            l2 = cdouble(-q, 0.0);
        } else {
            l1 = cdouble(big, 0.0);
            l2 = cdouble((a * d - b * c) / big, 0.0);
        }
    } else {
        const double q = std::sqrt(-disc);
        l1 = cdouble(mid, q);
        l2 = cdouble(mid, -q);
    }
}

std::vector<cdouble> hessenberg_eigenvalues(Matrix h) {
    const int n = static_cast<int>(h.rows());
    std::vector<cdouble> eig;
    eig.reserve(n);
    if (n == 1) {
        eig.push_back(cdouble(h(0, 0), 0.0));
        return eig;
    }
    const double eps = std::numeric_limits<double>::epsilon();
    double anorm = 0.0;
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) anorm += std::fabs(h(i, j));
    if (anorm == 0.0) anorm = 1.0;

    int hi = n - 1;
    int its = 0;
    long total = 0;
    const long total_cap = 80L * n;

    while (hi >= 0) {
        // locate the active block lo..hi by scanning for a negligible
        // subdiagonal entry
        int lo = hi;
        while (lo > 0) {
            double s = std::fabs(h(lo - 1, lo - 1)) + std::fabs(h(lo, lo));
            if (s == 0.0) s = anorm;
            if (std::fabs(h(lo, lo - 1)) <= eps * s) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }

        if (lo == hi) {
            eig.push_back(cdouble(h(hi, hi), 0.0));
            --hi;
            its = 0;
            continue;
        }
        if (lo == hi - 1) {
            cdouble l1, l2;
            eig2x2(h(lo, lo), h(lo, hi), h(hi, lo), h(hi, hi), l1, l2);
            eig.push_back(l1);
            eig.push_back(l2);
            hi -= 2;
            its = 0;
            continue;
        }

        if (++total > total_cap)
            throw EigensolverFailedError("eigen_decompose: QR iteration did not converge");
        ++its;

        // Francis double shift from the trailing 2x2, with the usual
        // exceptional shift every 10 stalled iterations
        double tr, det;
        if (its % 20 == 10) {
            const double s = std::fabs(h(hi, hi - 1)) + std::fabs(h(hi - 1, hi - 2));
            const double h11 = 0.75 * s + h(hi, hi);
            const double h12 = -0.4375 * s;
            const double h21 = s;
            tr = 2.0 * h11;
            det = h11 * h11 - h12 * h21;
        } else if (its > 40) {
            throw EigensolverFailedError("eigen_decompose: active block stalled");
        } else {
            tr = h(hi - 1, hi - 1) + h(hi, hi);
            det = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
        }

        // implicit bulge chase
        for (int k = lo; k <= hi - 1; ++k) {
            double x, y, z;
            const bool three = (k + 2 <= hi);
            if (k == lo) {
                x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) -
                    tr * h(lo, lo) + det;
                y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - tr);
                z = three ? h(lo + 1, lo) * h(lo + 2, lo + 1) : 0.0;
            } else {
                x = h(k, k - 1);
                y = h(k + 1, k - 1);
                z = three ? h(k + 2, k - 1) : 0.0;
            }
            double alpha = std::sqrt(x * x + y * y + z * z);
            if (alpha == 0.0) continue;
            if (x > 0.0) alpha = -alpha;
            const double v0 = x - alpha;
            const double v1 = y;
            const double v2 = z;
            const double vnorm2 = v0 * v0 + v1 * v1 + v2 * v2;
            if (vnorm2 == 0.0) continue;

            const int c0 = (k == lo) ? lo : k - 1;
            for (int j = c0; j <= hi; ++j) {
                double s = v0 * h(k, j) + v1 * h(k + 1, j);
                if (three) s += v2 * h(k + 2, j);
                s *= 2.0 / vnorm2;
                h(k, j) -= s * v0;
                h(k + 1, j) -= s * v1;
                if (three) h(k + 2, j) -= s * v2;
            }
            const int r1 = std::min(k + 3, hi);
            for (int i = lo; i <= r1; ++i) {
                double s = v0 * h(i, k) + v1 * h(i, k + 1);
                if (three) s += v2 * h(i, k + 2);
                s *= 2.0 / vnorm2;
                h(i, k) -= s * v0;
                h(i, k + 1) -= s * v1;
                if (three) h(i, k + 2) -= s * v2;
            }
            if (k > lo) {
                h(k + 1, k - 1) = 0.0;
                if (three) h(k + 2, k - 1) = 0.0;
            }
        }
    }
    return eig;
}

}  // namespace

std::vector<cdouble> eigenvalues(const Matrix& m) {
    if (!m.square()) throw std::invalid_argument("eigenvalues: non-square matrix");
    if (m.rows() > 64) throw std::invalid_argument("eigenvalues: dimension above 64");
    Matrix h = m;
    hessenberg_reduce(h);
    auto eig = hessenberg_eigenvalues(std::move(h));
    std::sort(eig.begin(), eig.end(), [](const cdouble& a, const cdouble& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return eig;
}

EigenDecomposition eigen_decompose(const Matrix& m, double cluster_tol) {
    if (!m.square()) throw std::invalid_argument("eigen_decompose: non-square matrix");
    if (m.rows() > 64) throw std::invalid_argument("eigen_decompose: dimension above 64");
    const std::size_t n = m.rows();

    EigenDecomposition out;
    out.eigenvalues = eigenvalues(m);
    out.residual = 0.0;

    double rho = 0.0;
    for (const auto& l : out.eigenvalues) rho = std::max(rho, std::abs(l));
    if (cluster_tol <= 0.0) cluster_tol = 1e-7 * (1.0 + rho);

    // single-linkage clustering, then closure under conjugation
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(out.eigenvalues[i] - out.eigenvalues[j]) <= cluster_tol)
                unite(i, j);
    for (std::size_t i = 0; i < n; ++i) {
        if (out.eigenvalues[i].imag() == 0.0) continue;
        const cdouble conj = std::conj(out.eigenvalues[i]);
        for (std::size_t j = 0; j < n; ++j)
            if (out.eigenvalues[j] == conj) {
                unite(i, j);
                break;
            }
    }

    std::vector<std::vector<std::size_t>> groups;
    std::vector<long> group_of(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (group_of[r] < 0) {
            group_of[r] = static_cast<long>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(group_of[r])].push_back(i);
    }

    const double scale = std::max(1.0, m.frobenius_norm());
    for (const auto& idx : groups) {
        EigenCluster cluster;
        for (std::size_t i : idx) cluster.eigenvalues.push_back(out.eigenvalues[i]);

        // kernel of the cluster's characteristic factors evaluated at M;
        // complex pairs enter as one real quadratic
        Matrix poly = Matrix::identity(n);
        for (std::size_t i : idx) {
            const cdouble l = out.eigenvalues[i];
            if (l.imag() < 0.0) continue;  // covered by the conjugate's quadratic
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
        cluster.basis = trailing_nullspace(poly, idx.size());

        // invariance residual ||M V - V (V^T M V)||_F
        const Matrix mv = m * cluster.basis;
        const Matrix small = cluster.basis.transposed() * mv;
        out.residual = std::max(out.residual, (mv - cluster.basis * small).frobenius_norm());
        out.clusters.push_back(std::move(cluster));
    }

    std::sort(out.clusters.begin(), out.clusters.end(),
              [](const EigenCluster& a, const EigenCluster& b) {
                  double ra = a.eigenvalues.front().real(), rb = b.eigenvalues.front().real();
                  for (const auto& l : a.eigenvalues) ra = std::min(ra, l.real());
                  for (const auto& l : b.eigenvalues) rb = std::min(rb, l.real());
                  return ra < rb;
              });
    return out;
}

}  // namespace msrds::numerics

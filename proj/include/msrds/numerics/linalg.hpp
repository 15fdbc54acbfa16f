#ifndef MSRDS_NUMERICS_LINALG_HPP
#define MSRDS_NUMERICS_LINALG_HPP

#include "msrds/numerics/matrix.hpp"

namespace msrds::numerics {

// Solves A x = b by LU with partial pivoting. Throws on singular A.
Vector solve(const Matrix& a, const Vector& b);

// Multi-RHS variant: solves A X = B column by column.
Matrix solve(const Matrix& a, const Matrix& b);

double determinant(const Matrix& a);

// Householder QR with column pivoting, A P = Q R. Returns the full
// orthogonal factor Q (n x n), the upper-triangular R and the permutation.
struct PivotedQr {
    Matrix q;
    Matrix r;
    std::vector<std::size_t> permutation;
};
PivotedQr pivoted_qr(const Matrix& a);

// Orthonormal basis (columns) of the best-conditioned k-dimensional
// subspace of the kernel of A: the trailing k columns of Q from a pivoted
// QR of A^T. For rank(A) = n - k this is the exact null space.
Matrix trailing_nullspace(const Matrix& a, std::size_t k);

// Symmetric eigenproblem via cyclic Jacobi rotations. Eigenvalues are
// returned in ascending order; `vectors` holds the corresponding
// orthonormal eigenvectors as columns.
struct SymEigen {
    Vector values;
    Matrix vectors;
};
SymEigen sym_eigen(const Matrix& a);

// Smallest eigenvalue of a symmetric matrix (convenience for cone checks).
double sym_min_eigenvalue(const Matrix& a);

// Symmetric PSD square root factor F with F F^T = A (negative eigenvalues
// are clamped to zero). Used to draw Gaussian vectors with prescribed
// covariance.
Matrix psd_sqrt_factor(const Matrix& a);

}  // namespace msrds::numerics

#endif

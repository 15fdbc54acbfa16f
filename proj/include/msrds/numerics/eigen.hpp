#ifndef MSRDS_NUMERICS_EIGEN_HPP
#define MSRDS_NUMERICS_EIGEN_HPP

#include <complex>
#include <vector>

#include "msrds/numerics/matrix.hpp"

namespace msrds::numerics {

// A group of eigenvalues (closed under conjugation) together with an
// orthonormal real basis of the associated invariant subspace.
struct EigenCluster {
    std::vector<std::complex<double>> eigenvalues;
    Matrix basis;  // n x k, k = number of eigenvalues in the cluster
};

struct EigenDecomposition {
    std::vector<std::complex<double>> eigenvalues;  // all, with multiplicity
    std::vector<EigenCluster> clusters;
    double residual;  // max over clusters of ||M V - V (V^T M V)||_F
};

// Dense nonsymmetric eigenvalues via Hessenberg reduction and implicit
// double-shift QR, for dimensions up to 64. Eigenvalues whose pairwise
// distance is at most cluster_tol are merged into one cluster (clusters
// are additionally closed under complex conjugation so that real bases
// exist). cluster_tol <= 0 selects the default 1e-7 * (1 + spectral radius).
//
// Invariant subspaces are recovered as kernels of the cluster's
// characteristic factors evaluated at M, which also handles defective
// (Jordan) clusters such as coincident eigenvalues.
EigenDecomposition eigen_decompose(const Matrix& m, double cluster_tol);

// Eigenvalues only (same algorithm, no subspaces).
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

}  // namespace msrds::numerics

#endif

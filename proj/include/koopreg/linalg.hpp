#pragma once

#include <complex>

#include "koopreg/kernel.hpp"

namespace koopreg {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Default relative rank tolerance (relative to the largest eigenvalue).
inline constexpr double kDefaultRankTol = 1e-12;

/// Raised when a numerical routine cannot produce a trustworthy answer
/// (failed factorization, defective spectrum, insufficient rank).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eigenpairs sorted by descending eigenvalue; column i of `vectors` belongs
/// to `values(i)`.
struct EigPairList {
    Vector values;
    Matrix vectors;
};

/// Full symmetric eigendecomposition. Vectors are orthonormal, each column's
/// largest-magnitude entry is made positive.
EigPairList sym_eig(const MatrixRef &S);

/// Eigenpairs of a PSD matrix whose eigenvalue exceeds rtol * lambda_max.
/// Computed by block subspace iteration when the retained part is small
/// compared with n, which is what makes large Gram matrices affordable;
/// falls back to the full decomposition otherwise.
EigPairList sym_eig_dominant(const MatrixRef &S, double rtol = kDefaultRankTol);

struct PsdRoots {
    Matrix sqrt;
    Matrix inv_sqrt;
    Eigen::Index rank = 0;
};

/// Square root and pseudo-inverse square root of a PSD matrix. Eigenvalues
/// at or below rtol * lambda_max are treated as zero.
PsdRoots psd_sqrt_pinv(const MatrixRef &S, double rtol = kDefaultRankTol);

/// Top-r solutions of A u = lambda B u for symmetric A and SPD B, by Cholesky
/// whitening. Vectors satisfy U^T B U = I.
EigPairList gep_symdef(const MatrixRef &A, const MatrixRef &B, Eigen::Index r);

/// Eigendecomposition of a small real nonsymmetric matrix with biorthonormal
/// left/right vectors: left.col(j).adjoint() * right.col(i) == delta_ij.
struct ComplexEig {
    CVector values;
    CMatrix right;
    CMatrix left;
};

/// Condition number of the (column-normalized) eigenvector matrix above which
/// the spectrum is reported as defective.
inline constexpr double kDefectiveCond = 1e10;

ComplexEig eig_small_nonsym(const MatrixRef &A);

struct TruncatedSvd {
    Matrix U;
    Vector singular_values;
    Matrix V;
};

/// Best rank-r approximation U diag(s) V^T.
TruncatedSvd trunc_svd(const MatrixRef &A, Eigen::Index r);

}  // namespace koopreg

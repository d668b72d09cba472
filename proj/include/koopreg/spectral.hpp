#pragma once

#include "koopreg/estimators.hpp"

namespace koopreg {

/// Spectral decomposition of a fitted estimator, obtained from the r x r
/// matrix V^T M U (M = G_YX) and mapped back to eigenfunction coefficients.
///
/// Right eigenfunctions: psi_i(x) = n^{-1/2} sum_j psi_coeffs(j, i) k(x_j, x).
/// Left eigenfunctions:  xi_i = Z* xi_coeffs.col(i), xi_coeffs = V u_i / conj(lambda_i).
/// Eigenvalues are sorted by descending modulus, then descending real part.
struct SpectralDecomposition {
    CVector eigenvalues;
    CMatrix psi_coeffs;  ///< n x r, column i = U v_i
    CMatrix xi_coeffs;   ///< n x r, column i = V u_i / conj(lambda_i)
    CMatrix right;       ///< r x r right eigenvectors of V^T M U
    CMatrix left;        ///< r x r left eigenvectors, left^H right = I
    Eigen::Index dropped = 0;  ///< pairs failing the biorthogonality check

    KernelSpec kernel;
    Matrix X;  ///< training inputs, needed to evaluate eigenfunctions

    [[nodiscard]] Eigen::Index rank() const { return eigenvalues.size(); }
    [[nodiscard]] Eigen::Index n() const { return X.rows(); }
};

/// Dynamic modes, row i holds gamma_i^f for every observable component.
struct ModeSet {
    CMatrix gammas;
};

struct Forecast {
    Vector value;           ///< real part of sum_i lambda_i^t gamma_i^f psi_i(x)
    double imag_residual;   ///< max |imaginary part| over components
};

/// decompose() keeps an eigenpair only when its row of the biorthogonality
/// matrix is within this distance of the unit vector.
inline constexpr double kBiorthogonalityTol = 1e-8;
/// The retained pairs must reproduce V^T M U to this relative Frobenius
/// error, else decompose() throws NumericalError.
inline constexpr double kModalResidualTol = 1e-9;

/// Largest rank accepted by decompose(); KRR estimators on more samples than
/// this go through leading_eigenvalues().
inline constexpr Eigen::Index kMaxDenseSpectralRank = 2000;

/// Throws NumericalError for defective spectra and when the resolvable
/// eigenpairs do not reproduce the estimator (typical of KRR on smooth
/// kernels, whose tail eigenvalues sit at rounding level).
SpectralDecomposition decompose(const FittedEstimator &est);
SpectralDecomposition decompose(const FittedEstimator &est, const GramCache &gram);

/// psi_i(x) for all retained i.
CVector eval_eigenfunctions(const SpectralDecomposition &dec, const VectorRef &x);
/// Row j holds psi(points.row(j)).
CMatrix eval_eigenfunctions_batch(const SpectralDecomposition &dec, const MatrixRef &points);

ModeSet modes(const SpectralDecomposition &dec, const ObservableOnSample &obs);

Forecast forecast(const SpectralDecomposition &dec, const ObservableOnSample &obs,
                  const VectorRef &x, int t);
Forecast forecast(const SpectralDecomposition &dec, const ModeSet &modes, const VectorRef &x,
                  int t);

/// xi^H M psi, which must be the identity for a valid decomposition.
CMatrix biorthogonality_matrix(const SpectralDecomposition &dec, const GramCache &gram);

/// The `count` largest-modulus eigenvalues of the estimator, computed with an
/// Arnoldi iteration on the n x n matrix U V^T M. Intended for full-rank
/// (KRR) estimators whose dense decomposition is too expensive.
CVector leading_eigenvalues(const FittedEstimator &est, const GramCache &gram,
                            Eigen::Index count, double tol = 1e-10);

/// Orders eigenvalues by descending modulus, then descending real part, then
/// index. Returns the permutation.
std::vector<Eigen::Index> spectral_order(const CVector &values);

}  // namespace koopreg

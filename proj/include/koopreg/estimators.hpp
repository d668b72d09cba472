#pragma once

#include <string>

#include "koopreg/kernel.hpp"
#include "koopreg/linalg.hpp"

namespace koopreg {

enum class EstimatorKind { KRR, PCR, RRR };

const char *to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string &name);

/// A fitted estimator G = S* U V^T Z, where S and Z are the (n^{-1/2}
/// scaled) sampling operators of the training inputs and outputs.
///
/// For KRR the left factor is the identity and is not materialized; use
/// left_factor() when an explicit matrix is needed.
struct FittedEstimator {
    EstimatorKind kind = EstimatorKind::RRR;
    KernelSpec kernel;
    Matrix X;  ///< n x d training inputs
    Matrix Y;  ///< n x d training outputs
    Matrix U;  ///< n x r (empty for KRR)
    Matrix V;  ///< n x r
    double gamma = 0.0;
    Eigen::Index rank = 0;
    Vector sigma_sq;  ///< GEP values (RRR) or Gram eigenvalues (PCR)

    [[nodiscard]] Eigen::Index n() const { return X.rows(); }
    [[nodiscard]] Eigen::Index dim() const { return X.cols(); }
    [[nodiscard]] bool identity_left() const { return kind == EstimatorKind::KRR; }
    [[nodiscard]] Matrix left_factor() const;

    /// U^T B and V^T B without materializing an identity U.
    [[nodiscard]] Matrix ut_times(const MatrixRef &B) const;
    /// W B = U (V^T B).
    [[nodiscard]] Matrix w_times(const MatrixRef &B) const;
    /// W^T B = V (U^T B).
    [[nodiscard]] Matrix wt_times(const MatrixRef &B) const;
};

/// Dominant eigenpairs of G_X (above the rank tolerance) together with the
/// projection Q^T G_Y Q. Shared by PCR and RRR fits on the same Gram so that
/// sweeping gamma or the rank reuses a single eigendecomposition.
struct GramSpectrum {
    EigPairList gx;
    Matrix gy_projected;
    double rtol = kDefaultRankTol;

    [[nodiscard]] Eigen::Index numerical_rank() const { return gx.values.size(); }
};

GramSpectrum gram_spectrum(const GramCache &gram, double rtol = kDefaultRankTol);

/// Kernel ridge regression, V = (G_X + gamma I)^{-1}.
FittedEstimator fit_krr(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                        const MatrixRef &Y, double gamma);

/// Principal component regression (kernel DMD) of rank r.
FittedEstimator fit_pcr(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                        const MatrixRef &Y, Eigen::Index r);
FittedEstimator fit_pcr(const GramCache &gram, const GramSpectrum &spectrum,
                        const KernelSpec &kernel, const MatrixRef &X, const MatrixRef &Y,
                        Eigen::Index r);

/// Reduced rank regression of rank r with Tikhonov parameter gamma.
///
/// The generalized problem G_Y G_X u = s^2 (G_X + gamma I) u is solved in the
/// symmetric-definite form G_X^{1/2} G_Y G_X^{1/2} w = s^2 G_gamma w with
/// u = G_X^{-1/2} w, restricted to the numerical range of G_X where the
/// pseudo-inverse square root is defined. Columns are renormalized so that
/// u_i^T G_X G_gamma u_i = 1, and V = G_X U.
FittedEstimator fit_rrr(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                        const MatrixRef &Y, Eigen::Index r, double gamma);
FittedEstimator fit_rrr(const GramCache &gram, const GramSpectrum &spectrum,
                        const KernelSpec &kernel, const MatrixRef &X, const MatrixRef &Y,
                        Eigen::Index r, double gamma);

/// Reduced rank regression with explicit features (rows of PhiX / PhiY):
/// C_gamma^{-1/2} [[ C_gamma^{-1/2} C_xy ]]_r. Returns the D x D matrix B
/// acting on feature coefficients, so that [G f](x) = phi(x)^T B w when
/// f = <w, phi(.)>.
Matrix fit_rrr_featurespace(const MatrixRef &PhiX, const MatrixRef &PhiY, Eigen::Index r,
                            double gamma);

/// Rows of `values` are f(y_i) for the training outputs y_i.
struct ObservableOnSample {
    Matrix values;
};

Vector predict_observable(const FittedEstimator &est, const ObservableOnSample &obs,
                          const VectorRef &x);
/// Row j of the result is the prediction at row j of `points`.
Matrix predict_observable_batch(const FittedEstimator &est, const ObservableOnSample &obs,
                                const MatrixRef &points);
Vector predict_state(const FittedEstimator &est, const VectorRef &x);

/// Closed-form training risk; dispatches on the estimator kind.
double empirical_risk(const FittedEstimator &est, const GramCache &gram);
/// empirical_risk + gamma * ||G||_HS^2.
double regularized_risk(const FittedEstimator &est, const GramCache &gram);

/// Mean over held-out pairs of |phi(y') - G* phi(x')|^2.
double test_risk(const FittedEstimator &est, const MatrixRef &X_test, const MatrixRef &Y_test);
double test_risk(const FittedEstimator &est, const GramCache &gram, const MatrixRef &X_test,
                 const MatrixRef &Y_test);

/// Hilbert-Schmidt norm sqrt(tr((U^T G_X U)(V^T G_Y V))).
double hs_norm(const FittedEstimator &est, const GramCache &gram);
double hs_norm(const FittedEstimator &est);

}  // namespace koopreg

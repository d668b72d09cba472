#include "koopreg/estimators.hpp"

#include <cmath>
#include <string>

namespace koopreg {

namespace {

void require_training_shapes(const GramCache &gram, const MatrixRef &X, const MatrixRef &Y) {
    if (X.rows() != gram.n || Y.rows() != gram.n || X.cols() != Y.cols()) {
        throw std::invalid_argument("training data does not match the Gram matrices");
    }
}

void require_gram_matches(const FittedEstimator &est, const GramCache &gram) {
    if (gram.n != est.n()) {
        throw std::invalid_argument("Gram matrices have " + std::to_string(gram.n) +
                                    " samples, estimator has " + std::to_string(est.n()));
    }
}

FittedEstimator make_estimator(EstimatorKind kind, const KernelSpec &kernel, const MatrixRef &X,
                               const MatrixRef &Y, double gamma) {
    FittedEstimator est;
    est.kind = kind;
    est.kernel = kernel;
    est.X = X;
    est.Y = Y;
    est.gamma = gamma;
    return est;
}

Matrix output_gram(const FittedEstimator &est) {
    return kernel_matrix(est.kernel, est.Y, est.Y) / static_cast<double>(est.n());
}

}  // namespace

const char *to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::KRR: return "krr";
        case EstimatorKind::PCR: return "pcr";
        case EstimatorKind::RRR: return "rrr";
    }
    return "unknown";
}

EstimatorKind estimator_kind_from_string(const std::string &name) {
    if (name == "krr" || name == "KRR") return EstimatorKind::KRR;
    if (name == "pcr" || name == "PCR") return EstimatorKind::PCR;
    if (name == "rrr" || name == "RRR") return EstimatorKind::RRR;
    throw std::invalid_argument("unknown estimator '" + name + "' (expected krr, pcr or rrr)");
}

Matrix FittedEstimator::left_factor() const {
    if (identity_left()) return Matrix::Identity(n(), n());
    return U;
}

Matrix FittedEstimator::ut_times(const MatrixRef &B) const {
    if (identity_left()) return B;
    return U.transpose() * B;
}

Matrix FittedEstimator::w_times(const MatrixRef &B) const {
    Matrix vtb = V.transpose() * B;
    if (identity_left()) return vtb;
    return U * vtb;
}

Matrix FittedEstimator::wt_times(const MatrixRef &B) const { return V * ut_times(B); }

GramSpectrum gram_spectrum(const GramCache &gram, double rtol) {
    GramSpectrum s;
    s.rtol = rtol;
    s.gx = sym_eig_dominant(gram.gx, rtol);
    s.gy_projected = s.gx.vectors.transpose() * gram.gy * s.gx.vectors;
    s.gy_projected = (s.gy_projected + s.gy_projected.transpose()).eval() * 0.5;
    return s;
}

FittedEstimator fit_krr(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                        const MatrixRef &Y, double gamma) {
    require_training_shapes(gram, X, Y);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("KRR requires gamma > 0");
    }
    const Eigen::Index n = gram.n;
    Matrix reg = gram.gx;
    reg.diagonal().array() += gamma;
    const Eigen::LLT<Matrix> llt(reg);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("KRR: Cholesky of G_X + gamma I failed; increase gamma");
    }
    FittedEstimator est = make_estimator(EstimatorKind::KRR, kernel, X, Y, gamma);
    est.V = llt.solve(Matrix::Identity(n, n));
    est.V = (est.V + est.V.transpose()).eval() * 0.5;
    est.rank = n;
    return est;
}

FittedEstimator fit_pcr(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                        const MatrixRef &Y, Eigen::Index r) {
    return fit_pcr(gram, gram_spectrum(gram), kernel, X, Y, r);
}

FittedEstimator fit_pcr(const GramCache &gram, const GramSpectrum &spectrum,
                        const KernelSpec &kernel, const MatrixRef &X, const MatrixRef &Y,
                        Eigen::Index r) {
    require_training_shapes(gram, X, Y);
    const Eigen::Index rank = spectrum.numerical_rank();
    if (r < 1) throw std::invalid_argument("PCR rank must be >= 1");
    if (r > rank) {
        throw NumericalError("PCR rank " + std::to_string(r) + " exceeds the numerical rank " +
                             std::to_string(rank) + " of G_X");
    }
    FittedEstimator est = make_estimator(EstimatorKind::PCR, kernel, X, Y, 0.0);
    est.rank = r;
    est.sigma_sq = spectrum.gx.values.head(r);
    est.V = spectrum.gx.vectors.leftCols(r);
    est.U = est.V * est.sigma_sq.cwiseInverse().asDiagonal();
    return est;
}

FittedEstimator fit_rrr(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                        const MatrixRef &Y, Eigen::Index r, double gamma) {
    return fit_rrr(gram, gram_spectrum(gram), kernel, X, Y, r, gamma);
}

FittedEstimator fit_rrr(const GramCache &gram, const GramSpectrum &spectrum,
                        const KernelSpec &kernel, const MatrixRef &X, const MatrixRef &Y,
                        Eigen::Index r, double gamma) {
    require_training_shapes(gram, X, Y);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("RRR requires gamma > 0");
    }
    if (r < 1 || r > gram.n) throw std::invalid_argument("RRR rank must lie in [1, n]");
    const Eigen::Index k = spectrum.numerical_rank();
    if (r > k) {
        throw NumericalError("effective rank too low: G_X has numerical rank " +
                             std::to_string(k) + " < requested rank " + std::to_string(r));
    }

    // In the eigenbasis of G_X: A = L^{1/2} (Q^T G_Y Q) L^{1/2}, B = L + gamma.
    const Vector &lam = spectrum.gx.values;
    const Vector sqrt_lam = lam.cwiseSqrt();
    Matrix A = sqrt_lam.asDiagonal() * spectrum.gy_projected * sqrt_lam.asDiagonal();
    A = (A + A.transpose()).eval() * 0.5;
    Matrix B = (lam.array() + gamma).matrix().asDiagonal();
    const EigPairList gep = gep_symdef(A, B, r);

    const double smax = std::max(gep.values(0), 0.0);
    Eigen::Index positive = 0;
    for (Eigen::Index i = 0; i < r; ++i) {
        if (gep.values(i) > 1e-12 * smax && smax > 0.0) ++positive;
    }
    if (positive < r) {
        throw NumericalError("effective rank too low: only " + std::to_string(positive) +
                             " positive singular values for rank " + std::to_string(r));
    }

    FittedEstimator est = make_estimator(EstimatorKind::RRR, kernel, X, Y, gamma);
    est.rank = r;
    est.sigma_sq = gep.values;
    est.U = spectrum.gx.vectors * (sqrt_lam.cwiseInverse().asDiagonal() * gep.vectors);
    est.V = gram.gx * est.U;
    // u^T G_X G_gamma u = v^T v + gamma v^T u
    for (Eigen::Index i = 0; i < r; ++i) {
        const double norm_sq = est.V.col(i).squaredNorm() + gamma * est.V.col(i).dot(est.U.col(i));
        if (!(norm_sq > 0.0)) {
            throw NumericalError("RRR: degenerate generalized eigenvector " + std::to_string(i));
        }
        const double s = 1.0 / std::sqrt(norm_sq);
        est.U.col(i) *= s;
        est.V.col(i) *= s;
    }
    return est;
}

Matrix fit_rrr_featurespace(const MatrixRef &PhiX, const MatrixRef &PhiY, Eigen::Index r,
                            double gamma) {
    if (PhiX.rows() != PhiY.rows() || PhiX.cols() != PhiY.cols()) {
        throw std::invalid_argument("feature matrices must have the same shape");
    }
    const Eigen::Index D = PhiX.cols();
    if (D > 1000) throw std::invalid_argument("feature dimension too large for the explicit path");
    if (!(gamma > 0.0)) throw std::invalid_argument("feature-space RRR requires gamma > 0");
    if (r < 1 || r > D) throw std::invalid_argument("rank must lie in [1, D]");
    const double inv_n = 1.0 / static_cast<double>(PhiX.rows());

    Matrix cov = PhiX.transpose() * PhiX * inv_n;
    cov.diagonal().array() += gamma;
    const Matrix cross = PhiX.transpose() * PhiY * inv_n;
    const EigPairList eig = sym_eig(cov);
    const Matrix inv_sqrt =
        eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.vectors.transpose();
    const TruncatedSvd svd = trunc_svd(inv_sqrt * cross, r);
    return inv_sqrt * svd.U * svd.singular_values.asDiagonal() * svd.V.transpose();
}

Vector predict_observable(const FittedEstimator &est, const ObservableOnSample &obs,
                          const VectorRef &x) {
    const Matrix point = x.transpose();
    return predict_observable_batch(est, obs, point).row(0).transpose();
}

Matrix predict_observable_batch(const FittedEstimator &est, const ObservableOnSample &obs,
                                const MatrixRef &points) {
    if (obs.values.rows() != est.n()) {
        throw std::invalid_argument("observable has " + std::to_string(obs.values.rows()) +
                                    " rows, estimator was trained on " + std::to_string(est.n()));
    }
    if (points.cols() != est.dim()) {
        throw std::invalid_argument("prediction point has dimension " +
                                    std::to_string(points.cols()) + ", expected " +
                                    std::to_string(est.dim()));
    }
    const Matrix K = kernel_matrix(est.kernel, est.X, points);  // n x m
    const Matrix wf = est.w_times(obs.values);                  // n x p
    return K.transpose() * wf / static_cast<double>(est.n());
}

Vector predict_state(const FittedEstimator &est, const VectorRef &x) {
    return predict_observable(est, ObservableOnSample{est.Y}, x);
}

double empirical_risk(const FittedEstimator &est, const GramCache &gram) {
    require_gram_matches(est, gram);
    const double tr_gy = gram.gy.trace();
    switch (est.kind) {
        case EstimatorKind::KRR: {
            // gamma^2 tr(G_gamma^{-2} G_Y), V = G_gamma^{-1}
            const Matrix vg = est.V * gram.gy;
            return est.gamma * est.gamma * est.V.cwiseProduct(vg.transpose()).sum();
        }
        case EstimatorKind::PCR: {
            // tr((I - G_X U V^T) G_Y)
            const Matrix gxu = gram.gx * est.U;
            return tr_gy - (est.V.transpose() * gram.gy * gxu).trace();
        }
        case EstimatorKind::RRR: {
            // tr((I - G_X U V^T - gamma G_X (U V^T)^2) G_Y) with G_X U = V
            const Matrix gyv = gram.gy * est.V;
            const Matrix vtgyv = est.V.transpose() * gyv;
            const Matrix vtu = est.V.transpose() * est.U;
            return tr_gy - vtgyv.trace() - est.gamma * (vtu * vtgyv).trace();
        }
    }
    return 0.0;
}

double regularized_risk(const FittedEstimator &est, const GramCache &gram) {
    const double hs = hs_norm(est, gram);
    return empirical_risk(est, gram) + est.gamma * hs * hs;
}

double test_risk(const FittedEstimator &est, const MatrixRef &X_test, const MatrixRef &Y_test) {
    GramCache gram;
    gram.n = est.n();
    gram.gy = output_gram(est);
    return test_risk(est, gram, X_test, Y_test);
}

double test_risk(const FittedEstimator &est, const GramCache &gram, const MatrixRef &X_test,
                 const MatrixRef &Y_test) {
    require_gram_matches(est, gram);
    if (X_test.rows() == 0) throw std::invalid_argument("test_risk: empty test set");
    if (X_test.rows() != Y_test.rows() || X_test.cols() != est.dim() ||
        Y_test.cols() != est.dim()) {
        throw std::invalid_argument("test_risk: test pairs do not match the training dimension");
    }
    const double inv_n = 1.0 / static_cast<double>(est.n());
    const Eigen::Index m = X_test.rows();
    const Matrix Kx = kernel_matrix(est.kernel, est.X, X_test);  // n x m
    const Matrix Ky = kernel_matrix(est.kernel, est.Y, Y_test);  // n x m

    // Per test pair j, with c_j = U^T kx_j:
    //   k(y', y') - (2/n) c_j^T V^T ky_j + (1/n) c_j^T (V^T G_Y V) c_j
    Vector cross(m), quad(m);
    if (est.identity_left()) {
        const Matrix P = est.V * Kx;  // W^T kx, W^T = V
        cross = P.cwiseProduct(Ky).colwise().sum().transpose();
        quad = P.cwiseProduct(gram.gy * P).colwise().sum().transpose();
    } else {
        const Matrix C = est.U.transpose() * Kx;
        const Matrix vtgyv = est.V.transpose() * gram.gy * est.V;
        cross = C.cwiseProduct(est.V.transpose() * Ky).colwise().sum().transpose();
        quad = C.cwiseProduct(vtgyv * C).colwise().sum().transpose();
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        const double kyy = est.kernel(Y_test.row(j).transpose(), Y_test.row(j).transpose());
        total += kyy - 2.0 * inv_n * cross(j) + inv_n * quad(j);
    }
    return total / static_cast<double>(m);
}

double hs_norm(const FittedEstimator &est, const GramCache &gram) {
    require_gram_matches(est, gram);
    double sq = 0.0;
    if (est.identity_left()) {
        // tr(G_X V G_Y V)
        const Matrix a = gram.gx * est.V;
        const Matrix b = gram.gy * est.V;
        sq = a.cwiseProduct(b.transpose()).sum();
    } else {
        const Matrix utgxu = est.U.transpose() * (gram.gx * est.U);
        const Matrix vtgyv = est.V.transpose() * (gram.gy * est.V);
        sq = utgxu.cwiseProduct(vtgyv.transpose()).sum();
    }
    return std::sqrt(std::max(sq, 0.0));
}

double hs_norm(const FittedEstimator &est) {
    return hs_norm(est, build_gram(est.kernel, est.X, est.Y));
}

}  // namespace koopreg

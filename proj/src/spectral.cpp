#include "koopreg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "koopreg/rng.hpp"

namespace koopreg {

std::vector<Eigen::Index> spectral_order(const CVector &values) {
    std::vector<Eigen::Index> order(static_cast<size_t>(values.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double ma = std::abs(values(a)), mb = std::abs(values(b));
        if (ma != mb) return ma > mb;
        return values(a).real() > values(b).real();
    });
    return order;
}

SpectralDecomposition decompose(const FittedEstimator &est) {
    return decompose(est, build_gram(est.kernel, est.X, est.Y));
}

SpectralDecomposition decompose(const FittedEstimator &est, const GramCache &gram) {
    if (gram.n != est.n()) throw std::invalid_argument("decompose: Gram does not match estimator");
    if (est.kind == EstimatorKind::KRR && !(est.gamma > 0.0)) {
        throw std::invalid_argument("decompose: KRR requires gamma > 0");
    }
    const Eigen::Index r = est.identity_left() ? est.n() : est.U.cols();
    if (r > kMaxDenseSpectralRank) {
        throw std::invalid_argument("decompose: rank " + std::to_string(r) +
                                    " too large for a dense decomposition; use "
                                    "leading_eigenvalues or a low-rank estimator");
    }

    // A = V^T M U
    const Matrix A = est.ut_times(gram.gyx.transpose() * est.V).transpose();
    const ComplexEig eig = eig_small_nonsym(A);

    // Left eigenfunctions divide by lambda, so the rounding error of small
    // eigenpairs is amplified. Row i of L^H A R / lambda_i must be e_i; pairs
    // whose row misses by more than kBiorthogonalityTol are not resolved.
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        max_abs = std::max(max_abs, std::abs(eig.values(i)));
    }
    std::vector<Eigen::Index> cand;
    for (Eigen::Index idx : spectral_order(eig.values)) {
        if (std::abs(eig.values(idx)) > 1e-12 * max_abs) cand.push_back(idx);
    }
    const auto nc = static_cast<Eigen::Index>(cand.size());
    CMatrix Rc(r, nc), Lc(r, nc);
    for (Eigen::Index c = 0; c < nc; ++c) {
        Rc.col(c) = eig.right.col(cand[static_cast<size_t>(c)]);
        Lc.col(c) = eig.left.col(cand[static_cast<size_t>(c)]);
    }
    const CMatrix C = Lc.adjoint() * (A.cast<Complex>() * Rc);
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < nc; ++c) {
        CVector row = C.row(c).transpose() / eig.values(cand[static_cast<size_t>(c)]);
        row(c) -= 1.0;
        if (row.norm() <= kBiorthogonalityTol) kept.push_back(cand[static_cast<size_t>(c)]);
    }

    // The retained modes must still reproduce the operator; otherwise the
    // modal expansion would disagree with the estimator it describes.
    {
        CMatrix Rk(r, static_cast<Eigen::Index>(kept.size())), Lk(r, Rk.cols());
        CVector lk(Rk.cols());
        for (Eigen::Index c = 0; c < Rk.cols(); ++c) {
            const Eigen::Index idx = kept[static_cast<size_t>(c)];
            Rk.col(c) = eig.right.col(idx);
            Lk.col(c) = eig.left.col(idx);
            lk(c) = eig.values(idx);
        }
        const double a_norm = A.norm();
        const double resid =
            (A.cast<Complex>() - Rk * lk.asDiagonal() * Lk.adjoint()).norm() / std::max(a_norm, 1e-300);
        if (!(resid <= kModalResidualTol)) {
            std::ostringstream os;
            os << "decompose: " << (r - Rk.cols()) << " of " << r
               << " eigenpairs are numerically unresolved (relative operator residual "
               << resid << "); lower the rank or increase gamma";
            throw NumericalError(os.str());
        }
    }

    SpectralDecomposition dec;
    dec.kernel = est.kernel;
    dec.X = est.X;
    dec.dropped = r - static_cast<Eigen::Index>(kept.size());
    const Eigen::Index k = static_cast<Eigen::Index>(kept.size());
    dec.eigenvalues.resize(k);
    dec.right.resize(r, k);
    dec.left.resize(r, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index idx = kept[static_cast<size_t>(c)];
        dec.eigenvalues(c) = eig.values(idx);
        dec.right.col(c) = eig.right.col(idx);
        dec.left.col(c) = eig.left.col(idx);
    }

    const Matrix Ufull = est.left_factor();
    dec.psi_coeffs = Ufull.cast<Complex>() * dec.right;
    // Gauge: largest-modulus eigenfunction coefficient real positive. The
    // same phase on the left vector keeps left^H right unchanged.
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index imax = 0;
        dec.psi_coeffs.col(c).cwiseAbs().maxCoeff(&imax);
        const Complex z = dec.psi_coeffs(imax, c);
        if (std::abs(z) == 0.0) continue;
        const Complex phase = std::conj(z) / std::abs(z);
        dec.psi_coeffs.col(c) *= phase;
        dec.right.col(c) *= phase;
        dec.left.col(c) *= phase;
    }
    dec.xi_coeffs = est.V.cast<Complex>() * dec.left;
    for (Eigen::Index c = 0; c < k; ++c) dec.xi_coeffs.col(c) /= std::conj(dec.eigenvalues(c));
    return dec;
}

CVector eval_eigenfunctions(const SpectralDecomposition &dec, const VectorRef &x) {
    const Matrix point = x.transpose();
    return eval_eigenfunctions_batch(dec, point).row(0).transpose();
}

CMatrix eval_eigenfunctions_batch(const SpectralDecomposition &dec, const MatrixRef &points) {
    if (points.cols() != dec.X.cols()) {
        throw std::invalid_argument("eval_eigenfunctions: point has dimension " +
                                    std::to_string(points.cols()) + ", expected " +
                                    std::to_string(dec.X.cols()));
    }
    const Matrix K = kernel_matrix(dec.kernel, points, dec.X);  // m x n
    return K.cast<Complex>() * dec.psi_coeffs / std::sqrt(static_cast<double>(dec.n()));
}

ModeSet modes(const SpectralDecomposition &dec, const ObservableOnSample &obs) {
    if (obs.values.rows() != dec.n()) {
        throw std::invalid_argument("modes: observable has " + std::to_string(obs.values.rows()) +
                                    " rows, expected " + std::to_string(dec.n()));
    }
    // u_i^* V^T f / (lambda_i sqrt(n)) == xi_i^H f / sqrt(n)
    return ModeSet{dec.xi_coeffs.adjoint() * obs.values.cast<Complex>() /
                   std::sqrt(static_cast<double>(dec.n()))};
}

Forecast forecast(const SpectralDecomposition &dec, const ObservableOnSample &obs,
                  const VectorRef &x, int t) {
    return forecast(dec, modes(dec, obs), x, t);
}

Forecast forecast(const SpectralDecomposition &dec, const ModeSet &ms, const VectorRef &x,
                  int t) {
    if (t < 1) throw std::invalid_argument("forecast: horizon must be >= 1");
    if (ms.gammas.rows() != dec.rank()) {
        throw std::invalid_argument("forecast: mode set does not match the decomposition");
    }
    const CVector psi = eval_eigenfunctions(dec, x);
    CVector weights(dec.rank());
    for (Eigen::Index i = 0; i < dec.rank(); ++i) {
        weights(i) = std::pow(dec.eigenvalues(i), t) * psi(i);
    }
    const CVector out = ms.gammas.transpose() * weights;
    Forecast f;
    f.value = out.real();
    f.imag_residual = out.size() ? out.imag().cwiseAbs().maxCoeff() : 0.0;
    return f;
}

CMatrix biorthogonality_matrix(const SpectralDecomposition &dec, const GramCache &gram) {
    if (gram.n != dec.n()) throw std::invalid_argument("biorthogonality: Gram size mismatch");
    return dec.xi_coeffs.adjoint() * (gram.gyx.cast<Complex>() * dec.psi_coeffs);
}

CVector leading_eigenvalues(const FittedEstimator &est, const GramCache &gram, Eigen::Index count,
                            double tol) {
    const Eigen::Index n = est.n();
    if (gram.n != n) throw std::invalid_argument("leading_eigenvalues: Gram size mismatch");
    if (count < 1 || count > n) throw std::invalid_argument("leading_eigenvalues: bad count");

    auto apply = [&](const Vector &v) -> Vector { return est.w_times(gram.gyx * v); };

    CounterRng rng(0x4b6f6f70ULL);
    Vector start(n);
    for (Eigen::Index i = 0; i < n; ++i) start(i) = rng.uniform(-1.0, 1.0);
    start.normalize();

    Eigen::Index m = std::min<Eigen::Index>(n, std::max<Eigen::Index>(40, 4 * count));
    for (;;) {
        Matrix Q(n, m + 1);
        Matrix H = Matrix::Zero(m + 1, m);
        Q.col(0) = start;
        Eigen::Index steps = m;
        bool invariant = false;
        for (Eigen::Index j = 0; j < m; ++j) {
            Vector w = apply(Q.col(j));
            // two passes of classical Gram-Schmidt
            for (int pass = 0; pass < 2; ++pass) {
                const Vector h = Q.leftCols(j + 1).transpose() * w;
                w -= Q.leftCols(j + 1) * h;
                H.col(j).head(j + 1) += h;
            }
            const double beta = w.norm();
            H(j + 1, j) = beta;
            if (beta <= 1e-14 * std::max(1.0, H.col(j).head(j + 1).norm())) {
                steps = j + 1;
                invariant = true;
                break;
            }
            Q.col(j + 1) = w / beta;
        }
        const Matrix Hm = H.topLeftCorner(steps, steps);
        const Eigen::EigenSolver<Matrix> es(Hm, true);
        if (es.info() != Eigen::Success) throw NumericalError("Arnoldi: Ritz solve failed");
        const CVector theta = es.eigenvalues();
        const auto order = spectral_order(theta);
        const Eigen::Index want = std::min(count, steps);
        bool converged = true;
        if (!invariant) {
            const double scale = std::abs(theta(order[0]));
            for (Eigen::Index c = 0; c < want; ++c) {
                const Eigen::Index idx = order[static_cast<size_t>(c)];
                const CVector y = es.eigenvectors().col(idx).normalized();
                const double resid = H(steps, steps - 1) * std::abs(y(steps - 1));
                if (resid > tol * std::max(scale, 1e-300)) converged = false;
            }
        }
        if ((converged && want == count) || steps == n || invariant) {
            CVector out = CVector::Zero(count);
            for (Eigen::Index c = 0; c < want; ++c) out(c) = theta(order[static_cast<size_t>(c)]);
            return out;
        }
        m = std::min(n, 2 * m);
    }
}

}  // namespace koopreg

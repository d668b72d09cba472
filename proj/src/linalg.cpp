#include "koopreg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace koopreg {

namespace {

void require_square_finite(const MatrixRef &S, const char *who) {
    if (S.rows() != S.cols()) {
        throw std::invalid_argument(std::string(who) + ": matrix must be square");
    }
    if (!S.allFinite()) {
        throw std::invalid_argument(std::string(who) + ": matrix has non-finite entries");
    }
}

void require_symmetric(const MatrixRef &S, const char *who) {
    require_square_finite(S, who);
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument(std::string(who) + ": matrix is not symmetric");
    }
}

// Makes the largest-magnitude entry of every column positive.
void fix_signs(Matrix &V) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        Eigen::Index imax = 0;
        V.col(j).cwiseAbs().maxCoeff(&imax);
        if (V(imax, j) < 0.0) V.col(j) *= -1.0;
    }
}

// Eigen returns ascending eigenvalues; reorder descending with a stable sort
// so equal eigenvalues keep a deterministic relative order.
EigPairList to_descending(const Vector &w, const Matrix &Z) {
    const Eigen::Index m = w.size();
    std::vector<Eigen::Index> order(static_cast<size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return w(a) > w(b); });
    EigPairList out;
    out.values.resize(m);
    out.vectors.resize(Z.rows(), m);
    for (Eigen::Index k = 0; k < m; ++k) {
        out.values(k) = w(order[static_cast<size_t>(k)]);
        out.vectors.col(k) = Z.col(order[static_cast<size_t>(k)]);
    }
    fix_signs(out.vectors);
    return out;
}

EigPairList dense_eig(const MatrixRef &S) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es((S + S.transpose()) * 0.5);
    if (es.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver did not converge");
    }
    return to_descending(es.eigenvalues(), es.eigenvectors());
}

EigPairList truncate_below(EigPairList all, double rtol) {
    if (all.values.size() == 0 || !(all.values(0) > 0.0)) {
        return {Vector(0), Matrix(all.vectors.rows(), 0)};
    }
    const double cut = rtol * all.values(0);
    Eigen::Index keep = 0;
    while (keep < all.values.size() && all.values(keep) > cut) ++keep;
    all.values.conservativeResize(keep);
    all.vectors.conservativeResize(Eigen::NoChange, keep);
    return all;
}

Matrix orthonormal_basis(const Matrix &Z) {
    const Eigen::HouseholderQR<Matrix> qr(Z);
    return qr.householderQ() * Matrix::Identity(Z.rows(), Z.cols());
}

// Subspace iteration on a block that must extend below the cut. Returns
// false when the block was too small or did not converge.
bool subspace_dominant(const MatrixRef &S, double rtol, Eigen::Index b, EigPairList &out) {
    const Eigen::Index n = S.rows();
    Matrix Q(n, b);
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    for (Eigen::Index j = 0; j < b; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            // xorshift64*: a fixed start block keeps results reproducible
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            const std::uint64_t r = state * 0x2545f4914f6cdd1dULL;
            Q(i, j) = static_cast<double>(r >> 11) * 0x1.0p-53 - 0.5;
        }
    }
    Q = orthonormal_basis(S * Q);
    for (int it = 0; it < 100; ++it) {
        const Matrix Z = S * Q;
        const Matrix B = Q.transpose() * Z;
        const Eigen::SelfAdjointEigenSolver<Matrix> es((B + B.transpose()) * 0.5);
        if (es.info() != Eigen::Success) return false;
        const EigPairList ritz = to_descending(es.eigenvalues(), es.eigenvectors());
        const double top = ritz.values(0);
        if (!(top > 0.0)) {
            out = {Vector(0), Matrix(n, 0)};
            return true;
        }
        const double cut = rtol * top;
        if (ritz.values(b - 1) > 1e-2 * cut) return false;  // block too small

        const Matrix X = Q * ritz.vectors;
        const Matrix R = Z * ritz.vectors - X * ritz.values.asDiagonal();
        bool converged = true;
        for (Eigen::Index i = 0; i < b && ritz.values(i) > cut; ++i) {
            if (R.col(i).norm() > 1e-13 * top) converged = false;
        }
        if (converged) {
            out = truncate_below({ritz.values, X}, rtol);
            fix_signs(out.vectors);
            return true;
        }
        Q = orthonormal_basis(Z * ritz.vectors);
    }
    return false;
}

}  // namespace

EigPairList sym_eig(const MatrixRef &S) {
    require_symmetric(S, "sym_eig");
    if (S.rows() == 0) return {};
    return dense_eig(S);
}

EigPairList sym_eig_dominant(const MatrixRef &S, double rtol) {
    require_symmetric(S, "sym_eig_dominant");
    const Eigen::Index n = S.rows();
    if (n == 0) return {};
    // Kernel Gram spectra decay fast, so a block a little wider than the
    // numerical rank captures everything above the cut.
    for (Eigen::Index b = 48; 3 * b <= n; b *= 2) {
        EigPairList out;
        if (subspace_dominant(S, rtol, b, out)) return out;
    }
    return truncate_below(dense_eig(S), rtol);
}

PsdRoots psd_sqrt_pinv(const MatrixRef &S, double rtol) {
    const EigPairList eig = sym_eig(S);
    const Eigen::Index n = S.rows();
    PsdRoots out;
    if (n == 0) return out;
    const double lmax = std::max(eig.values(0), 0.0);
    const double cut = rtol * lmax;
    Vector s(n), is(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = std::max(eig.values(i), 0.0);
        s(i) = std::sqrt(l);
        if (l > cut && l > 0.0) {
            is(i) = 1.0 / s(i);
            ++out.rank;
        } else {
            is(i) = 0.0;
        }
    }
    out.sqrt = eig.vectors * s.asDiagonal() * eig.vectors.transpose();
    out.inv_sqrt = eig.vectors * is.asDiagonal() * eig.vectors.transpose();
    return out;
}

EigPairList gep_symdef(const MatrixRef &A, const MatrixRef &B, Eigen::Index r) {
    require_symmetric(A, "gep_symdef");
    require_symmetric(B, "gep_symdef");
    const Eigen::Index n = A.rows();
    if (B.rows() != n) throw std::invalid_argument("gep_symdef: A and B differ in size");
    if (r < 1 || r > n) throw std::invalid_argument("gep_symdef: rank must lie in [1, n]");

    const Eigen::LLT<Matrix> llt((B + B.transpose()) * 0.5);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(
            "gep_symdef: B is not positive definite; increase the regularization gamma");
    }
    const auto L = llt.matrixL();
    // C = L^{-1} A L^{-T}
    Matrix C = L.solve(Matrix(A));
    C = L.solve(Matrix(C.transpose()));
    const EigPairList eig = sym_eig((C + C.transpose()) * 0.5);

    EigPairList out;
    out.values = eig.values.head(r);
    out.vectors = llt.matrixU().solve(Matrix(eig.vectors.leftCols(r)));
    return out;
}

ComplexEig eig_small_nonsym(const MatrixRef &A) {
    require_square_finite(A, "eig_small_nonsym");
    const Eigen::Index r = A.rows();
    ComplexEig out;
    if (r == 0) return out;

    const Eigen::EigenSolver<Matrix> es(A, true);
    if (es.info() != Eigen::Success) {
        throw NumericalError("eig_small_nonsym: eigenvalue iteration did not converge");
    }
    out.values = es.eigenvalues();
    CMatrix R = es.eigenvectors();
    for (Eigen::Index j = 0; j < r; ++j) {
        const double nrm = R.col(j).norm();
        if (nrm > 0.0) R.col(j) /= nrm;
    }
    const Eigen::JacobiSVD<CMatrix> svd(R);
    const auto &sv = svd.singularValues();
    const double cond = sv(r - 1) > 0.0 ? sv(0) / sv(r - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= kDefectiveCond)) {
        throw NumericalError("defective spectrum; lower rank or change gamma");
    }
    // Rows of R^{-1} are left eigenvectors already paired with the columns of R.
    const CMatrix Rinv = R.partialPivLu().inverse();
    out.right = std::move(R);
    out.left = Rinv.adjoint();
    return out;
}

TruncatedSvd trunc_svd(const MatrixRef &A, Eigen::Index r) {
    if (r < 1 || r > std::min(A.rows(), A.cols())) {
        throw std::invalid_argument("trunc_svd: rank must lie in [1, min(rows, cols)]");
    }
    if (!A.allFinite()) throw std::invalid_argument("trunc_svd: matrix has non-finite entries");
    const Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    TruncatedSvd out;
    out.U = svd.matrixU().leftCols(r);
    out.singular_values = svd.singularValues().head(r);
    out.V = svd.matrixV().leftCols(r);
    return out;
}

}  // namespace koopreg

#include <doctest.h>

#include <algorithm>

#include "koopreg/linalg.hpp"
#include "support.hpp"

using namespace koopreg;
using koopreg::testing::random_matrix;
using koopreg::testing::random_symmetric;

TEST_CASE("sym_eig small cases") {
    const EigPairList id = sym_eig(Matrix::Identity(3, 3));
    CHECK((id.values - Vector::Ones(3)).norm() < 1e-15);

    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 1.0;
    D(1, 1) = 3.0;
    const EigPairList e = sym_eig(D);
    CHECK(e.values(0) == doctest::Approx(3.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    Matrix perm(2, 2);
    perm << 0, 1, 1, 0;
    CHECK((e.vectors - perm).norm() < 1e-14);
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
    CounterRng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix S = random_symmetric(rng, 8);
        const EigPairList e = sym_eig(S);
        const Matrix R = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((R - S).norm() < 1e-10);
        CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(8, 8)).norm() < 1e-12);
        for (Eigen::Index i = 1; i < 8; ++i) CHECK(e.values(i - 1) >= e.values(i));
        for (Eigen::Index j = 0; j < 8; ++j) {
            Eigen::Index k;
            e.vectors.col(j).cwiseAbs().maxCoeff(&k);
            CHECK(e.vectors(k, j) > 0.0);
        }
    }
}

TEST_CASE("sym_eig input validation") {
    Matrix A(2, 2);
    A << 1, 2, 3, 4;
    CHECK_THROWS_AS(sym_eig(A), std::invalid_argument);
    CHECK_THROWS_AS(sym_eig(Matrix::Zero(2, 3)), std::invalid_argument);
    Matrix B = Matrix::Identity(2, 2);
    B(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(sym_eig(B), std::invalid_argument);
}

TEST_CASE("dominant eigenpairs of a Gram matrix match the dense solver") {
    // A smooth kernel on 1-D points has rapidly decaying eigenvalues, so only a
    // few dozen survive the cut and the iterative path is taken.
    CounterRng rng(21);
    const Eigen::Index n = 600;
    Matrix X(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) X(i, 0) = rng.uniform();
    const Matrix K = kernel_matrix(KernelSpec::gaussian(0.3), X, X) / static_cast<double>(n);

    const double rtol = 1e-10;
    const EigPairList dom = sym_eig_dominant(K, rtol);
    const Eigen::SelfAdjointEigenSolver<Matrix> ref(K);
    const Vector all = ref.eigenvalues().reverse();
    const double lmax = all(0);
    const auto kept = static_cast<Eigen::Index>(
        std::count_if(all.data(), all.data() + n, [&](double v) { return v > rtol * lmax; }));

    REQUIRE(kept < n / 4);
    // Values near the cut can fall on either side in floating point.
    CHECK(std::abs(dom.values.size() - kept) <= 1);
    const Eigen::Index m = std::min(dom.values.size(), kept);
    for (Eigen::Index i = 0; i < m; ++i) {
        CHECK(std::abs(dom.values(i) - all(i)) < 1e-12 * lmax);
        const Vector v = dom.vectors.col(i);
        CHECK((K * v - dom.values(i) * v).norm() < 1e-10 * lmax);
    }
    CHECK((dom.vectors.transpose() * dom.vectors - Matrix::Identity(dom.values.size(), dom.values.size()))
              .norm() < 1e-10);
}

TEST_CASE("dominant eigenpairs drop the null space") {
    CounterRng rng(3);
    const Matrix A = random_matrix(rng, 10, 3);
    const EigPairList e = sym_eig_dominant(A * A.transpose());
    CHECK(e.values.size() == 3);
}

TEST_CASE("psd roots") {
    Matrix S = Matrix::Zero(2, 2);
    S(0, 0) = 4.0;
    const PsdRoots r = psd_sqrt_pinv(S);
    CHECK(r.rank == 1);
    CHECK(std::abs(r.sqrt(0, 0) - 2.0) < 1e-15);
    CHECK(std::abs(r.inv_sqrt(0, 0) - 0.5) < 1e-15);
    CHECK(r.sqrt.cwiseAbs().sum() == doctest::Approx(2.0));
    CHECK(r.inv_sqrt.cwiseAbs().sum() == doctest::Approx(0.5));

    const PsdRoots id = psd_sqrt_pinv(Matrix::Identity(4, 4));
    CHECK((id.sqrt - Matrix::Identity(4, 4)).norm() < 1e-15);
    CHECK((id.inv_sqrt - Matrix::Identity(4, 4)).norm() < 1e-15);

    CounterRng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix A = random_matrix(rng, 7, 4);
        const Matrix P = A * A.transpose();
        const PsdRoots pr = psd_sqrt_pinv(P);
        CHECK(pr.rank == 4);
        CHECK((pr.sqrt * pr.sqrt - P).norm() < 1e-9 * P.norm());
        // inv_sqrt * P * inv_sqrt is the projector onto the range of P.
        const Matrix proj = pr.inv_sqrt * P * pr.inv_sqrt;
        CHECK((proj * proj - proj).norm() < 1e-9);
        CHECK(proj.trace() == doctest::Approx(4.0).epsilon(1e-9));
    }
}

TEST_CASE("generalized symmetric-definite eigenproblem") {
    const EigPairList id = gep_symdef(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 2);
    CHECK((id.values - Vector::Ones(2)).norm() < 1e-15);

    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 2.0;
    const EigPairList e = gep_symdef(A, Matrix::Identity(2, 2), 1);
    CHECK(e.values(0) == doctest::Approx(2.0));
    CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0) < 1e-15);
    CHECK(std::abs(e.vectors(1, 0)) < 1e-15);

    CounterRng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix M = random_matrix(rng, 6, 6);
        const Matrix B = M * M.transpose() + 0.5 * Matrix::Identity(6, 6);
        const Matrix Asym = koopreg::testing::random_symmetric(rng, 6);
        const EigPairList g = gep_symdef(Asym, B, 4);
        for (Eigen::Index i = 0; i < 4; ++i) {
            const Vector u = g.vectors.col(i);
            CHECK((Asym * u - g.values(i) * B * u).norm() < 1e-8);
        }
        CHECK((g.vectors.transpose() * B * g.vectors - Matrix::Identity(4, 4)).norm() < 1e-10);
    }

    Matrix notpd = Matrix::Identity(2, 2);
    notpd(1, 1) = -1.0;
    CHECK_THROWS_AS(gep_symdef(A, notpd, 1), NumericalError);
    CHECK_THROWS_AS(gep_symdef(A, Matrix::Identity(2, 2), 3), std::invalid_argument);
}

namespace {

bool contains(const CVector &values, Complex z, double tol) {
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (std::abs(values(i) - z) < tol) return true;
    return false;
}

}  // namespace

TEST_CASE("small nonsymmetric eigenproblems") {
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 0.9;
    D(1, 1) = 0.5;
    const ComplexEig d = eig_small_nonsym(D);
    CHECK(contains(d.values, 0.9, 1e-15));
    CHECK(contains(d.values, 0.5, 1e-15));
    for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK(std::abs(d.right.col(j).cwiseAbs().maxCoeff() - 1.0) < 1e-15);
    }

    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;
    const ComplexEig r = eig_small_nonsym(rot);
    CHECK(contains(r.values, Complex(0, 1), 1e-14));
    CHECK(contains(r.values, Complex(0, -1), 1e-14));

    CounterRng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix A = random_matrix(rng, 6, 6);
        const ComplexEig e = eig_small_nonsym(A);
        CHECK(std::abs(e.values.sum() - A.trace()) < 1e-9);
        const CMatrix Ac = A.cast<Complex>();
        CHECK((e.left.adjoint() * e.right - CMatrix::Identity(6, 6)).norm() < 1e-9);
        for (Eigen::Index i = 0; i < 6; ++i) {
            CHECK((Ac * e.right.col(i) - e.values(i) * e.right.col(i)).norm() < 1e-9);
            CHECK((e.left.col(i).adjoint() * Ac - e.values(i) * e.left.col(i).adjoint()).norm() < 1e-8);
        }
    }
}

TEST_CASE("defective spectrum is reported") {
    Matrix J(2, 2);
    J << 1, 1, 0, 1;
    CHECK_THROWS_AS(eig_small_nonsym(J), NumericalError);
}

TEST_CASE("truncated svd") {
    Matrix D = Matrix::Zero(3, 3);
    D.diagonal() << 3, 2, 1;
    const TruncatedSvd s = trunc_svd(D, 2);
    CHECK((s.singular_values - Eigen::Vector2d(3, 2)).norm() < 1e-14);

    CounterRng rng(19);
    const Vector a = random_matrix(rng, 5, 1).col(0), b = random_matrix(rng, 4, 1).col(0);
    const Matrix R1 = a * b.transpose();
    const TruncatedSvd one = trunc_svd(R1, 1);
    CHECK((one.U * one.singular_values.asDiagonal() * one.V.transpose() - R1).norm() <
          1e-12 * R1.norm());

    const Matrix A = random_matrix(rng, 10, 7);
    const TruncatedSvd t = trunc_svd(A, 3);
    const Vector all = Eigen::JacobiSVD<Matrix>(A).singularValues();
    const Matrix Ar = t.U * t.singular_values.asDiagonal() * t.V.transpose();
    CHECK(std::abs((A - Ar).squaredNorm() - all.tail(4).squaredNorm()) < 1e-10);

    CHECK_THROWS_AS(trunc_svd(A, 0), std::invalid_argument);
    CHECK_THROWS_AS(trunc_svd(A, 8), std::invalid_argument);
}

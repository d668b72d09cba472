#pragma once

#include <variant>

#include <Eigen/Dense>
#include <json.hpp>

namespace koopreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// exp(-|x - y|^2 / (2 l^2))
struct GaussianKernel {
    double lengthscale = 1.0;
};

/// <x, y> / scale
struct LinearKernel {
    double scale = 1.0;
};

/// (<x, y> / scale + offset)^degree
struct PolynomialKernel {
    int degree = 2;
    double offset = 1.0;
    double scale = 1.0;
};

/// A positive-definite kernel family with its hyperparameters. Construction
/// through the factory functions validates the parameters.
class KernelSpec {
public:
    using Family = std::variant<GaussianKernel, LinearKernel, PolynomialKernel>;

    KernelSpec() = default;

    static KernelSpec gaussian(double lengthscale);
    static KernelSpec linear(double scale = 1.0);
    static KernelSpec polynomial(int degree, double offset = 1.0, double scale = 1.0);

    [[nodiscard]] const Family &family() const { return family_; }
    [[nodiscard]] const char *name() const;

    /// Evaluates k(x, y). Throws std::invalid_argument on dimension mismatch.
    [[nodiscard]] double operator()(const VectorRef &x, const VectorRef &y) const;

    friend bool operator==(const KernelSpec &, const KernelSpec &);

private:
    explicit KernelSpec(Family f) : family_(f) {}
    Family family_ = GaussianKernel{};
};

bool operator==(const GaussianKernel &, const GaussianKernel &);
bool operator==(const LinearKernel &, const LinearKernel &);
bool operator==(const PolynomialKernel &, const PolynomialKernel &);

double eval_kernel(const KernelSpec &spec, const VectorRef &x, const VectorRef &y);

/// Gram matrices of a paired sample, every entry divided by n.
///   gx(i, j)  = k(x_i, x_j) / n
///   gy(i, j)  = k(y_i, y_j) / n
///   gyx(i, j) = k(y_i, x_j) / n     (rows index outputs)
struct GramCache {
    Matrix gx;
    Matrix gy;
    Matrix gyx;
    Eigen::Index n = 0;
};

/// Rows of X and Y are the samples x_i and y_i. Requires equal shapes and n >= 2.
GramCache build_gram(const KernelSpec &spec, const MatrixRef &X, const MatrixRef &Y);

/// Unscaled cross kernel matrix, K(i, j) = k(A_i, B_j).
Matrix kernel_matrix(const KernelSpec &spec, const MatrixRef &A, const MatrixRef &B);

/// Entry i is k(X_i, x), unscaled.
Vector kernel_vector(const KernelSpec &spec, const MatrixRef &X, const VectorRef &x);

void to_json(nlohmann::json &j, const KernelSpec &spec);
void from_json(const nlohmann::json &j, KernelSpec &spec);

}  // namespace koopreg

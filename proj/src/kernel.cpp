#include "koopreg/kernel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace koopreg {

namespace {

template<class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template<class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char *what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + " must be a positive finite number");
    }
}

// Kernel evaluation on raw row data. Callers have already checked dimensions.
struct RawEval {
    const KernelSpec::Family &family;

    double operator()(const double *x, Eigen::Index sx, const double *y, Eigen::Index sy,
                      Eigen::Index d) const {
        return std::visit(
            Overloaded{
                [&](const GaussianKernel &g) {
                    double r = 0.0;
                    for (Eigen::Index k = 0; k < d; ++k) {
                        const double diff = x[k * sx] - y[k * sy];
                        r += diff * diff;
                    }
                    return std::exp(-r / (2.0 * g.lengthscale * g.lengthscale));
                },
                [&](const LinearKernel &l) {
                    double dot = 0.0;
                    for (Eigen::Index k = 0; k < d; ++k) dot += x[k * sx] * y[k * sy];
                    return dot / l.scale;
                },
                [&](const PolynomialKernel &p) {
                    double dot = 0.0;
                    for (Eigen::Index k = 0; k < d; ++k) dot += x[k * sx] * y[k * sy];
                    return std::pow(dot / p.scale + p.offset, p.degree);
                },
            },
            family);
    }
};

[[noreturn]] void non_finite(const char *which, Eigen::Index i, Eigen::Index j) {
    std::ostringstream os;
    os << "non-finite kernel value in " << which << " at pair (" << i << ", " << j << ")";
    throw std::runtime_error(os.str());
}

// Fills a symmetric scaled Gram of the rows of A.
Matrix symmetric_gram(const RawEval &k, const MatrixRef &A, double scale, const char *which) {
    const Eigen::Index n = A.rows(), d = A.cols();
    Matrix G(n, n);
    const Eigen::Index rs = A.rowStride() ? A.rowStride() : 1;
    const Eigen::Index cs = A.colStride();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double *aj = A.data() + j * rs;
        for (Eigen::Index i = j; i < n; ++i) {
            const double v = k(A.data() + i * rs, cs, aj, cs, d);
            if (!std::isfinite(v)) non_finite(which, i, j);
            G(i, j) = v * scale;
            G(j, i) = G(i, j);
        }
    }
    return G;
}

}  // namespace

KernelSpec KernelSpec::gaussian(double lengthscale) {
    require_positive(lengthscale, "gaussian lengthscale");
    return KernelSpec(GaussianKernel{lengthscale});
}

KernelSpec KernelSpec::linear(double scale) {
    require_positive(scale, "linear scale");
    return KernelSpec(LinearKernel{scale});
}

KernelSpec KernelSpec::polynomial(int degree, double offset, double scale) {
    if (degree < 1) throw std::invalid_argument("polynomial degree must be >= 1");
    if (!(offset >= 0.0) || !std::isfinite(offset)) {
        throw std::invalid_argument("polynomial offset must be a nonnegative finite number");
    }
    require_positive(scale, "polynomial scale");
    return KernelSpec(PolynomialKernel{degree, offset, scale});
}

const char *KernelSpec::name() const {
    return std::visit(Overloaded{[](const GaussianKernel &) { return "gaussian"; },
                                 [](const LinearKernel &) { return "linear"; },
                                 [](const PolynomialKernel &) { return "polynomial"; }},
                      family_);
}

double KernelSpec::operator()(const VectorRef &x, const VectorRef &y) const {
    if (x.size() != y.size()) {
        throw std::invalid_argument("kernel arguments have different dimensions (" +
                                    std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
                                    ")");
    }
    return RawEval{family_}(x.data(), 1, y.data(), 1, x.size());
}

bool operator==(const GaussianKernel &a, const GaussianKernel &b) {
    return a.lengthscale == b.lengthscale;
}
bool operator==(const LinearKernel &a, const LinearKernel &b) { return a.scale == b.scale; }
bool operator==(const PolynomialKernel &a, const PolynomialKernel &b) {
    return a.degree == b.degree && a.offset == b.offset && a.scale == b.scale;
}
bool operator==(const KernelSpec &a, const KernelSpec &b) { return a.family_ == b.family_; }

double eval_kernel(const KernelSpec &spec, const VectorRef &x, const VectorRef &y) {
    return spec(x, y);
}

GramCache build_gram(const KernelSpec &spec, const MatrixRef &X, const MatrixRef &Y) {
    if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
        throw std::invalid_argument("build_gram: X and Y must have the same shape");
    }
    const Eigen::Index n = X.rows();
    if (n < 2) throw std::invalid_argument("build_gram: need at least 2 samples");

    const RawEval k{spec.family()};
    const double scale = 1.0 / static_cast<double>(n);
    GramCache g;
    g.n = n;
    g.gx = symmetric_gram(k, X, scale, "GX");
    g.gy = symmetric_gram(k, Y, scale, "GY");
    g.gyx = kernel_matrix(spec, Y, X) * scale;
    return g;
}

Matrix kernel_matrix(const KernelSpec &spec, const MatrixRef &A, const MatrixRef &B) {
    if (A.cols() != B.cols()) {
        throw std::invalid_argument("kernel_matrix: sample dimensions differ");
    }
    const RawEval k{spec.family()};
    const Eigen::Index d = A.cols();
    const Eigen::Index ars = A.rowStride() ? A.rowStride() : 1, acs = A.colStride();
    const Eigen::Index brs = B.rowStride() ? B.rowStride() : 1, bcs = B.colStride();
    Matrix K(A.rows(), B.rows());
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
        const double *bj = B.data() + j * brs;
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            const double v = k(A.data() + i * ars, acs, bj, bcs, d);
            if (!std::isfinite(v)) non_finite("kernel matrix", i, j);
            K(i, j) = v;
        }
    }
    return K;
}

Vector kernel_vector(const KernelSpec &spec, const MatrixRef &X, const VectorRef &x) {
    if (X.cols() != x.size()) {
        throw std::invalid_argument("kernel_vector: point has dimension " +
                                    std::to_string(x.size()) + ", samples have " +
                                    std::to_string(X.cols()));
    }
    const RawEval k{spec.family()};
    const Eigen::Index rs = X.rowStride() ? X.rowStride() : 1, cs = X.colStride();
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out(i) = k(X.data() + i * rs, cs, x.data(), 1, x.size());
    }
    return out;
}

void to_json(nlohmann::json &j, const KernelSpec &spec) {
    std::visit(Overloaded{
                   [&](const GaussianKernel &g) {
                       j = {{"family", "gaussian"}, {"lengthscale", g.lengthscale}};
                   },
                   [&](const LinearKernel &l) { j = {{"family", "linear"}, {"scale", l.scale}}; },
                   [&](const PolynomialKernel &p) {
                       j = {{"family", "polynomial"},
                            {"degree", p.degree},
                            {"offset", p.offset},
                            {"scale", p.scale}};
                   },
               },
               spec.family());
}

void from_json(const nlohmann::json &j, KernelSpec &spec) {
    const auto family = j.at("family").get<std::string>();
    if (family == "gaussian") {
        spec = KernelSpec::gaussian(j.at("lengthscale").get<double>());
    } else if (family == "linear") {
        spec = KernelSpec::linear(j.value("scale", 1.0));
    } else if (family == "polynomial") {
        spec = KernelSpec::polynomial(j.at("degree").get<int>(), j.value("offset", 1.0),
                                      j.value("scale", 1.0));
    } else {
        throw std::invalid_argument("unknown kernel family '" + family + "'");
    }
}

}  // namespace koopreg

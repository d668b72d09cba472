#include <cmath>
#include <numbers>
#include <sstream>

#include "koopreg/datagen.hpp"
#include "koopreg/spectral.hpp"

namespace koopreg {

namespace {

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double logistic(double x) { return 4.0 * x * (1.0 - x); }

struct BasisTable {
    int N;
    Vector coeff;  // sqrt(C_N binom(N, i))

    explicit BasisTable(int n) : N(n), coeff(n + 1) {
        const double cn = trig_noise_normalization(n);
        for (int i = 0; i <= n; ++i) coeff(i) = std::sqrt(cn * std::exp(log_binomial(n, i)));
    }

    double operator()(int i, double x) const {
        const double c = std::cos(std::numbers::pi * x);
        const double s = std::sin(std::numbers::pi * x);
        return coeff(i) * std::pow(c, i) * std::pow(s, N - i);
    }
};

struct OracleCore {
    Matrix P;
    CVector values;
    CMatrix right;
    CMatrix left;
};

OracleCore assemble(int N, const Vector &nodes, const Vector &weights) {
    const BasisTable beta(N);
    const Eigen::Index q = nodes.size();
    Matrix B(q, N + 1), A(q, N + 1);
    for (Eigen::Index k = 0; k < q; ++k) {
        for (int i = 0; i <= N; ++i) {
            B(k, i) = beta(i, nodes(k));
            A(k, i) = beta(i, logistic(nodes(k)));
        }
    }
    OracleCore core;
    core.P = B.transpose() * weights.asDiagonal() * A;
    const ComplexEig eig = eig_small_nonsym(core.P);
    const auto order = spectral_order(eig.values);
    core.values.resize(N + 1);
    core.right.resize(N + 1, N + 1);
    core.left.resize(N + 1, N + 1);
    for (int c = 0; c <= N; ++c) {
        core.values(c) = eig.values(order[static_cast<size_t>(c)]);
        core.right.col(c) = eig.right.col(order[static_cast<size_t>(c)]);
        core.left.col(c) = eig.left.col(order[static_cast<size_t>(c)]);
    }
    return core;
}

}  // namespace

std::pair<Vector, Vector> gauss_legendre01(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre01: order must be >= 1");
    Vector nodes(order), weights(order);
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1, 1] -> [0, 1]; nodes ascending
        nodes(i) = 0.5 * (1.0 - z);
        nodes(n - 1 - i) = 0.5 * (1.0 + z);
        weights(i) = 0.5 * w;
        weights(n - 1 - i) = 0.5 * w;
    }
    return {nodes, weights};
}

double LogisticOracle::beta(int i, double x) const { return BasisTable(N)(i, x); }

double LogisticOracle::alpha(int i, double x) const { return beta(i, logistic(x)); }

double LogisticOracle::invariant_density(double x) const {
    const BasisTable b(N);
    double s = 0.0;
    for (int i = 0; i <= N; ++i) s += b(i, x) * invariant_coeffs(i);
    return s;
}

Complex LogisticOracle::eigenfunction(Eigen::Index c, double x) const {
    const BasisTable b(N);
    const double fx = logistic(x);
    Complex s = 0.0;
    for (int i = 0; i <= N; ++i) s += b(i, fx) * eigfun_coeffs(i, c);
    return s;
}

double LogisticOracle::invariant_mean(const std::function<double(double)> &g) const {
    double s = 0.0;
    for (Eigen::Index k = 0; k < nodes.size(); ++k) {
        s += weights(k) * g(nodes(k)) * invariant_density(nodes(k));
    }
    return s;
}

LogisticOracle build_logistic_oracle(int N, int quad_order) {
    if (N < 2 || N % 2 != 0) throw std::invalid_argument("logistic oracle: N must be even and >= 2");
    if (quad_order < 64) throw std::invalid_argument("logistic oracle: quad_order must be >= 64");

    auto [nodes, weights] = gauss_legendre01(quad_order);
    const OracleCore core = assemble(N, nodes, weights);
    {
        const auto [n2, w2] = gauss_legendre01(2 * quad_order);
        const OracleCore fine = assemble(N, n2, w2);
        const double change = (fine.values - core.values).cwiseAbs().maxCoeff();
        if (change > 1e-8) {
            std::ostringstream os;
            os << "logistic oracle: quadrature not converged (eigenvalues moved by " << change
               << " when doubling the order)";
            throw NumericalError(os.str());
        }
    }

    LogisticOracle o;
    o.N = N;
    o.quad_order = quad_order;
    o.P = core.P;
    o.eigenvalues = core.values;
    o.eigfun_coeffs = core.right;
    o.nodes = std::move(nodes);
    o.weights = std::move(weights);

    // The stationary eigenvalue is the one closest to 1; the left eigenvector
    // u satisfies u^H P = u^H, so d = conj(u) solves P^T d = d.
    Eigen::Index unit = 0;
    (o.eigenvalues.array() - Complex(1.0, 0.0)).abs().minCoeff(&unit);
    Vector d = core.left.col(unit).conjugate().real();
    const BasisTable b(N);
    double mass = 0.0;
    for (Eigen::Index k = 0; k < o.nodes.size(); ++k) {
        double dens = 0.0;
        for (int i = 0; i <= N; ++i) dens += b(i, o.nodes(k)) * d(i);
        mass += o.weights(k) * dens;
    }
    if (mass == 0.0) throw NumericalError("logistic oracle: invariant density has zero mass");
    o.invariant_coeffs = d / mass;
    return o;
}

}  // namespace koopreg

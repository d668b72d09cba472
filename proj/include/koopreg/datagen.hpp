#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "koopreg/kernel.hpp"
#include "koopreg/linalg.hpp"
#include "koopreg/rng.hpp"

namespace koopreg {

/// An ordered state sequence. Training pairs are (states[i], states[i+1]).
struct Trajectory {
    Matrix states;  ///< (n + 1) x d
    double dt = 1.0;
    nlohmann::json meta;  ///< generator name, parameters, seed

    [[nodiscard]] Eigen::Index num_pairs() const { return states.rows() > 0 ? states.rows() - 1 : 0; }
    [[nodiscard]] Eigen::Index dim() const { return states.cols(); }
    [[nodiscard]] Matrix inputs() const { return states.topRows(num_pairs()); }
    [[nodiscard]] Matrix outputs() const { return states.bottomRows(num_pairs()); }
};

/// Paired samples cut out of a trajectory.
struct PairSet {
    Matrix X;
    Matrix Y;
    Eigen::Index first = 0;  ///< index of the first pair in the source trajectory

    [[nodiscard]] Eigen::Index size() const { return X.rows(); }
};

struct LogisticParams {
    int N = 20;             ///< even exponent of the cos^N noise density
    double x0 = 0.33;
    Eigen::Index burn_in = 100;
};

/// Normalization constant C_N = pi / B((N+1)/2, 1/2) of the trigonometric noise.
double trig_noise_normalization(int N);

/// One draw of xi with density C_N cos^N(pi xi) on [-1/2, 1/2], by rejection
/// from the uniform proposal.
double sample_trig_noise(CounterRng &rng, int N);

/// x_{t+1} = (4 x_t (1 - x_t) + xi_t) mod 1, n pairs after burn_in steps.
Trajectory simulate_logistic(const LogisticParams &params, Eigen::Index n, std::uint64_t seed);

struct Lorenz63Params {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    double dt = 0.1;          ///< sampling interval
    double burn_time = 100.0;
    double step = 1e-3;       ///< internal RK4 step
    Eigen::Vector3d x0 = Eigen::Vector3d(1.0, 1.0, 1.0);
};

/// Fixed-step RK4 integration recording every dt after burn_time. The seed
/// is recorded in the metadata only; the system is deterministic.
Trajectory simulate_lorenz63(const Lorenz63Params &params, Eigen::Index n,
                             std::uint64_t seed = 0);

/// x_{t+1} = F x_t + w_t with F = diag(f_eigs), w_t ~ N(0, I) and x_0 drawn
/// from the invariant law N(0, (I - F^2)^{-1}).
Trajectory simulate_ou(const Vector &f_eigs, Eigen::Index n, std::uint64_t seed);

struct BlockSplit {
    std::vector<std::vector<Eigen::Index>> odd;   ///< Y_j blocks (0-based pair indices)
    std::vector<std::vector<Eigen::Index>> even;  ///< Y'_j blocks
    std::vector<Eigen::Index> thinned;            ///< every 2 tau-th pair
    Eigen::Index dropped = 0;                     ///< trailing pairs not in any block
};

/// Interlaced blocks of length tau over the trajectory's pairs.
BlockSplit block_subsample(const Trajectory &traj, Eigen::Index tau);

/// Contiguous prefix/suffix split of the pairs; train gets floor(fraction * n).
std::pair<PairSet, PairSet> split_time(const Trajectory &traj, double train_fraction);

PairSet all_pairs(const Trajectory &traj);
PairSet pair_range(const Trajectory &traj, Eigen::Index first, Eigen::Index count);

/// Analytic Koopman spectrum of the trigonometric-noise logistic map via the
/// separable transition kernel p(x, y) = sum_i alpha_i(x) beta_i(y).
struct LogisticOracle {
    int N = 20;
    int quad_order = 256;
    Matrix P;                   ///< P_ij = int beta_i alpha_j
    CVector eigenvalues;        ///< descending modulus
    CMatrix eigfun_coeffs;      ///< column c: h(x) = sum_i alpha_i(x) c_i
    Vector invariant_coeffs;    ///< pi(x) = sum_i beta_i(x) d_i, integrates to 1

    [[nodiscard]] double beta(int i, double x) const;
    [[nodiscard]] double alpha(int i, double x) const;
    [[nodiscard]] double invariant_density(double x) const;
    /// Koopman eigenfunction for eigenvalue index c.
    [[nodiscard]] Complex eigenfunction(Eigen::Index c, double x) const;
    /// int_0^1 g(x) pi(x) dx by the oracle's quadrature rule.
    [[nodiscard]] double invariant_mean(const std::function<double(double)> &g) const;

    Vector nodes;     ///< Gauss-Legendre nodes on [0, 1]
    Vector weights;
};

/// Gauss-Legendre nodes and weights on [0, 1].
std::pair<Vector, Vector> gauss_legendre01(int order);

/// Builds the oracle and certifies it: doubling the quadrature order must
/// change no eigenvalue by more than 1e-8.
LogisticOracle build_logistic_oracle(int N, int quad_order = 256);

}  // namespace koopreg

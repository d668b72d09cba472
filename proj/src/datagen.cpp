#include "koopreg/datagen.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace koopreg {

double trig_noise_normalization(int N) {
    const double a = 0.5 * (N + 1);
    const double log_beta = std::lgamma(a) + std::lgamma(0.5) - std::lgamma(a + 0.5);
    return std::numbers::pi / std::exp(log_beta);
}

double sample_trig_noise(CounterRng &rng, int N) {
    for (;;) {
        const double xi = rng.uniform(-0.5, 0.5);
        const double accept = std::pow(std::cos(std::numbers::pi * xi), N);
        if (rng.uniform() < accept) return xi;
    }
}

namespace {

double logistic_step(double x, double xi) {
    const double v = 4.0 * x * (1.0 - x) + xi;
    double w = v - std::floor(v);
    if (w >= 1.0) w = 0.0;
    return w;
}

void require_even_noise_order(int N) {
    if (N < 2 || N % 2 != 0) throw std::invalid_argument("logistic map: N must be even and >= 2");
}

}  // namespace

Trajectory simulate_logistic(const LogisticParams &params, Eigen::Index n, std::uint64_t seed) {
    require_even_noise_order(params.N);
    if (n < 2) throw std::invalid_argument("logistic map: need n >= 2 pairs");
    if (!(params.x0 >= 0.0 && params.x0 < 1.0)) {
        throw std::invalid_argument("logistic map: x0 must lie in [0, 1)");
    }
    if (params.burn_in < 0) throw std::invalid_argument("logistic map: burn_in must be >= 0");

    CounterRng rng(seed);
    double x = params.x0;
    for (Eigen::Index t = 0; t < params.burn_in; ++t) x = logistic_step(x, sample_trig_noise(rng, params.N));

    Trajectory traj;
    traj.states.resize(n + 1, 1);
    traj.states(0, 0) = x;
    for (Eigen::Index t = 1; t <= n; ++t) {
        x = logistic_step(x, sample_trig_noise(rng, params.N));
        traj.states(t, 0) = x;
    }
    traj.dt = 1.0;
    traj.meta = {{"generator", "logistic"},
                 {"params", {{"N", params.N}, {"x0", params.x0}, {"burn_in", params.burn_in}}},
                 {"seed", seed},
                 {"dt", 1.0}};
    return traj;
}

Trajectory simulate_lorenz63(const Lorenz63Params &p, Eigen::Index n, std::uint64_t seed) {
    if (!(p.dt > 0.0) || !(p.step > 0.0)) throw std::invalid_argument("lorenz63: dt and step must be positive");
    if (n < 2) throw std::invalid_argument("lorenz63: need n >= 2 pairs");
    if (p.burn_time < 0.0) throw std::invalid_argument("lorenz63: burn_time must be >= 0");
    const auto per_sample = static_cast<long long>(std::llround(p.dt / p.step));
    if (per_sample < 1 || std::abs(static_cast<double>(per_sample) * p.step - p.dt) > 1e-9 * p.dt) {
        throw std::invalid_argument("lorenz63: dt must be an integer multiple of the RK4 step");
    }
    const auto burn_steps = static_cast<long long>(std::llround(p.burn_time / p.step));

    const auto field = [&](const Eigen::Vector3d &s) {
        return Eigen::Vector3d(p.sigma * (s(1) - s(0)), s(0) * (p.rho - s(2)) - s(1),
                               s(0) * s(1) - p.beta * s(2));
    };
    const double h = p.step;
    long long step_index = 0;
    Eigen::Vector3d s = p.x0;
    const auto advance = [&] {
        const Eigen::Vector3d k1 = field(s);
        const Eigen::Vector3d k2 = field(s + 0.5 * h * k1);
        const Eigen::Vector3d k3 = field(s + 0.5 * h * k2);
        const Eigen::Vector3d k4 = field(s + h * k3);
        s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ++step_index;
        if (!s.allFinite()) {
            throw NumericalError("lorenz63: state diverged at integration step " +
                                 std::to_string(step_index));
        }
    };

    for (long long i = 0; i < burn_steps; ++i) advance();
    Trajectory traj;
    traj.states.resize(n + 1, 3);
    traj.states.row(0) = s.transpose();
    for (Eigen::Index t = 1; t <= n; ++t) {
        for (long long i = 0; i < per_sample; ++i) advance();
        traj.states.row(t) = s.transpose();
    }
    traj.dt = p.dt;
    traj.meta = {{"generator", "lorenz63"},
                 {"params",
                  {{"sigma", p.sigma},
                   {"rho", p.rho},
                   {"beta", p.beta},
                   {"dt", p.dt},
                   {"burn_time", p.burn_time},
                   {"step", p.step},
                   {"x0", {p.x0(0), p.x0(1), p.x0(2)}}}},
                 {"seed", seed},
                 {"dt", p.dt}};
    return traj;
}

Trajectory simulate_ou(const Vector &f_eigs, Eigen::Index n, std::uint64_t seed) {
    if (f_eigs.size() < 1) throw std::invalid_argument("ou: need at least one eigenvalue");
    for (Eigen::Index i = 0; i < f_eigs.size(); ++i) {
        if (!(f_eigs(i) > 0.0 && f_eigs(i) < 1.0)) {
            std::ostringstream os;
            os << "ou: eigenvalue " << f_eigs(i) << " outside (0, 1)";
            throw std::invalid_argument(os.str());
        }
    }
    if (n < 2) throw std::invalid_argument("ou: need n >= 2 pairs");

    const Eigen::Index d = f_eigs.size();
    CounterRng rng(seed);
    Trajectory traj;
    traj.states.resize(n + 1, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        traj.states(0, i) = rng.normal() / std::sqrt(1.0 - f_eigs(i) * f_eigs(i));
    }
    for (Eigen::Index t = 1; t <= n; ++t) {
        for (Eigen::Index i = 0; i < d; ++i) {
            traj.states(t, i) = f_eigs(i) * traj.states(t - 1, i) + rng.normal();
        }
    }
    traj.dt = 1.0;
    std::vector<double> eigs(f_eigs.data(), f_eigs.data() + d);
    traj.meta = {{"generator", "ou"}, {"params", {{"F_eigs", eigs}}}, {"seed", seed}, {"dt", 1.0}};
    return traj;
}

BlockSplit block_subsample(const Trajectory &traj, Eigen::Index tau) {
    const Eigen::Index n = traj.num_pairs();
    if (tau < 1) throw std::invalid_argument("block_subsample: tau must be >= 1");
    if (2 * tau >= n) throw std::invalid_argument("block_subsample: tau must be < n / 2");
    const Eigen::Index m = n / (2 * tau);
    BlockSplit out;
    out.dropped = n - 2 * m * tau;
    for (Eigen::Index j = 0; j < m; ++j) {
        std::vector<Eigen::Index> odd, even;
        for (Eigen::Index i = 0; i < tau; ++i) {
            odd.push_back(2 * j * tau + i);
            even.push_back((2 * j + 1) * tau + i);
        }
        out.odd.push_back(std::move(odd));
        out.even.push_back(std::move(even));
        out.thinned.push_back(2 * j * tau);
    }
    return out;
}

PairSet pair_range(const Trajectory &traj, Eigen::Index first, Eigen::Index count) {
    if (first < 0 || count < 0 || first + count > traj.num_pairs()) {
        throw std::out_of_range("pair_range: requested pairs exceed the trajectory");
    }
    PairSet p;
    p.first = first;
    p.X = traj.states.middleRows(first, count);
    p.Y = traj.states.middleRows(first + 1, count);
    return p;
}

PairSet all_pairs(const Trajectory &traj) { return pair_range(traj, 0, traj.num_pairs()); }

std::pair<PairSet, PairSet> split_time(const Trajectory &traj, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split_time: fraction must lie in (0, 1)");
    }
    const Eigen::Index n = traj.num_pairs();
    const auto n_train = static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(n)));
    const Eigen::Index n_test = n - n_train;
    if (n_train < 2 || n_test < 2) {
        throw std::invalid_argument("split_time: both sides need at least 2 pairs");
    }
    return {pair_range(traj, 0, n_train), pair_range(traj, n_train, n_test)};
}

}  // namespace koopreg

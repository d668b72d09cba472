#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "koopreg/datagen.hpp"
#include "koopreg/estimators.hpp"
#include "koopreg/spectral.hpp"

namespace koopreg {

/// Raised when a configuration document violates its schema. what() lists
/// every violation, one per line.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::vector<std::string> &problems);
    [[nodiscard]] const std::vector<std::string> &problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct GammaGrid {
    double lo = 1e-7;
    double hi = 1.0;
    int count = 20;

    [[nodiscard]] std::vector<double> values() const;  ///< log-spaced, ascending
};

struct EigenBenchConfig {
    int N = 20;
    Eigen::Index n = 4000;
    int repeats = 10;
    Eigen::Index rank = 3;
    GammaGrid gamma_grid;
    double lengthscale = 0.7;
    Eigen::Index test_size = 500;
    double validation_fraction = 0.2;
    double x0 = 0.33;
    Eigen::Index burn_in = 100;
    std::uint64_t seed = 0;
    int threads = 0;  ///< 0: hardware concurrency; not part of the report
};

/// Resolved, validated configuration. Unknown keys and bad values raise
/// ConfigError listing all problems.
EigenBenchConfig eigen_bench_config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const EigenBenchConfig &cfg);

struct Stat {
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
};

Stat summarize(const std::vector<double> &values);

struct RepeatRecord {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  ///< set when the repeat failed
    double train_risk = 0.0;
    double test_risk = 0.0;
    double rel_err_lambda1 = 0.0;
    double rel_err_lambda23 = 0.0;  ///< mean over the conjugate pair
    double gamma = 0.0;             ///< selected gamma (0 for PCR)
    CVector eigenvalues;            ///< leading estimates, spectral order
};

struct EstimatorBenchStats {
    Stat train_risk;
    Stat test_risk;
    Stat rel_err_lambda1;
    Stat rel_err_lambda23;
    Stat gamma;
    int failed = 0;
    std::vector<RepeatRecord> repeats;
};

struct EigenBenchReport {
    EigenBenchConfig config;
    CVector oracle_eigenvalues;  ///< the three matched targets
    std::map<std::string, EstimatorBenchStats> estimators;  ///< keyed by "krr", "pcr", "rrr"
    std::vector<std::uint64_t> seeds;
};

/// Greedy matching: oracle values are taken in the given order and each is
/// assigned the nearest (|lambda - lambda_hat|) unassigned estimate. Returns
/// |lambda - lambda_hat| / |lambda| per oracle value. Both sets must have the
/// same size.
std::vector<double> match_eigenvalues(const CVector &oracle, const CVector &estimated);

EigenBenchReport eigenvalue_benchmark(const EigenBenchConfig &cfg);
nlohmann::json to_json(const EigenBenchReport &report);
/// One row per estimator x statistic.
std::string to_csv(const EigenBenchReport &report);

/// Risk on a fixed set of held-out pairs for many estimators trained on the
/// same sample. Kernel evaluations against the held-out points are computed
/// once; KRR risks for any gamma come from the eigenpairs in `spectrum`, with
/// directions below its tolerance treated as exact zeros of G_X.
class HoldoutRisk {
public:
    /// `spectrum` may be null when krr() is not needed; the KRR setup costs
    /// O(n^2 m) for m held-out pairs.
    HoldoutRisk(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                const MatrixRef &Y, const MatrixRef &X_out, const MatrixRef &Y_out,
                const GramSpectrum *spectrum = nullptr);

    /// Same value as test_risk(est, X_out, Y_out).
    [[nodiscard]] double operator()(const FittedEstimator &est) const;
    /// test_risk of fit_krr(..., gamma), up to the spectrum truncation.
    [[nodiscard]] double krr(double gamma) const;

private:
    const GramCache *gram_;
    Eigen::Index n_;
    Matrix kx_, ky_;
    Vector kyy_;
    // KRR pieces in the eigenbasis Q of G_X; R = Kx - Q Q^T Kx.
    Vector lam_;
    Matrix s_;        // Q^T G_Y Q
    Matrix b_;        // Q^T Kx
    Matrix qt_ky_;    // Q^T Ky
    Matrix qt_gy_r_;  // Q^T G_Y R
    Vector r_gy_r_;   // diag(R^T G_Y R)
    Vector r_ky_;     // diag(R^T Ky)
    bool krr_ready_ = false;
};

struct HsMatch {
    double gamma = 0.0;
    double hs_norm = 0.0;
    FittedEstimator estimator;
};

struct HsMatchOptions {
    double gamma_lo = 1e-12;
    double gamma_hi = 1e2;
    double tol = 1e-4;
    int monotonicity_points = 10;
};

/// Finds gamma such that the rank-r RRR estimator has HS norm `target`
/// (relative tolerance opts.tol) by bisection on log gamma.
HsMatch match_hs_norm(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                      const MatrixRef &Y, Eigen::Index r, double target,
                      const HsMatchOptions &opts = {});
HsMatch match_hs_norm(const GramCache &gram, const GramSpectrum &spectrum,
                      const KernelSpec &kernel, const MatrixRef &X, const MatrixRef &Y,
                      Eigen::Index r, double target, const HsMatchOptions &opts = {});

struct BoundConfig {
    std::string system = "logistic";
    int N = 20;  ///< logistic noise order
    std::vector<Eigen::Index> n_grid = {250, 500, 1000, 2000, 4000};
    Eigen::Index rank = 3;
    int repeats = 10;
    Eigen::Index test_size = 10000;
    double lengthscale = 0.7;
    double lorenz_dt = 0.1;
    HsMatchOptions match;
    double x0 = 0.33;
    Eigen::Index burn_in = 100;
    std::uint64_t seed = 0;
    int threads = 0;
};

BoundConfig bound_config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const BoundConfig &cfg);

struct BoundCell {
    Eigen::Index n = 0;
    int repeats_ok = 0;
    int failed = 0;
    double pcr_train = 0.0, pcr_test = 0.0;
    double rrr_train = 0.0, rrr_test = 0.0;
    double pcr_dev = 0.0, rrr_dev = 0.0;
    double matched_hs_norm = 0.0;
    double matched_gamma = 0.0;
    double max_hs_mismatch = 0.0;  ///< max relative |hs(PCR) - hs(RRR)| over repeats
    bool rrr_not_worse = true;     ///< mean RRR train and test risk <= PCR's
};

struct BoundReport {
    BoundConfig config;
    std::vector<BoundCell> cells;
    double pcr_slope = 0.0;  ///< least-squares slope of log(mean deviation) vs log(n)
    double rrr_slope = 0.0;
};

BoundReport ivanov_bound_experiment(const BoundConfig &cfg);
nlohmann::json to_json(const BoundReport &report);
/// One row per n-cell.
std::string to_csv(const BoundReport &report);

/// 16 hex digits of the FNV-1a hash of the compact JSON dump.
std::string config_hash(const nlohmann::json &config);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double> &x, const std::vector<double> &y);

}  // namespace koopreg

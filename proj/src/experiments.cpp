#include "koopreg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "koopreg/rng.hpp"

namespace koopreg {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string> &lines) {
    std::string out = "invalid configuration:";
    for (const auto &l : lines) out += "\n  " + l;
    return out;
}

/// Reads fields of one JSON object, collecting every problem instead of
/// stopping at the first.
class FieldReader {
public:
    FieldReader(const json &obj, std::string prefix, std::vector<std::string> &problems)
        : obj_(obj), prefix_(std::move(prefix)), problems_(problems) {
        if (!obj_.is_object()) {
            problems_.push_back((prefix_.empty() ? std::string("config") : prefix_) +
                                ": expected a JSON object");
            valid_ = false;
        }
    }

    template <class T>
    void integer(const char *key, T &out, std::function<bool(T)> ok = {},
                 const char *requirement = "") {
        const json *v = find(key);
        if (!v) return;
        if (!v->is_number_integer()) {
            fail(key, "expected an integer");
            return;
        }
        if constexpr (std::is_unsigned_v<T>) {
            if (v->is_number_unsigned()) {
                out = v->get<T>();
            } else {
                fail(key, "expected a non-negative integer");
                return;
            }
        } else {
            out = static_cast<T>(v->get<long long>());
        }
        if (ok && !ok(out)) fail(key, requirement);
    }

    void real(const char *key, double &out, std::function<bool(double)> ok = {},
              const char *requirement = "") {
        const json *v = find(key);
        if (!v) return;
        if (!v->is_number()) {
            fail(key, "expected a number");
            return;
        }
        out = v->get<double>();
        if (!std::isfinite(out) || (ok && !ok(out))) fail(key, requirement);
    }

    void string(const char *key, std::string &out, const std::vector<std::string> &allowed) {
        const json *v = find(key);
        if (!v) return;
        if (!v->is_string()) {
            fail(key, "expected a string");
            return;
        }
        out = v->get<std::string>();
        if (std::find(allowed.begin(), allowed.end(), out) == allowed.end()) {
            std::string msg = "must be one of";
            for (const auto &a : allowed) msg += " '" + a + "'";
            fail(key, msg);
        }
    }

    void index_list(const char *key, std::vector<Eigen::Index> &out) {
        const json *v = find(key);
        if (!v) return;
        if (!v->is_array()) {
            fail(key, "expected an array of integers");
            return;
        }
        std::vector<Eigen::Index> vals;
        for (const auto &e : *v) {
            if (!e.is_number_integer()) {
                fail(key, "expected an array of integers");
                return;
            }
            vals.push_back(static_cast<Eigen::Index>(e.get<long long>()));
        }
        out = vals;
    }

    /// Sub-object, or null when absent.
    const json *object(const char *key) { return find(key); }

    void finish() {
        if (!valid_) return;
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) problems_.push_back(name(it.key().c_str()) + ": unknown key");
        }
    }

    void fail(const char *key, const std::string &why) {
        problems_.push_back(name(key) + ": " + why);
    }

private:
    const json *find(const char *key) {
        seen_.insert(key);
        if (!valid_) return nullptr;
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }
    std::string name(const char *key) const { return prefix_ + key; }

    const json &obj_;
    std::string prefix_;
    std::vector<std::string> &problems_;
    std::set<std::string> seen_;
    bool valid_ = true;
};

int resolve_threads(int requested, int tasks) {
    int t = requested;
    if (t <= 0) t = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return std::max(1, std::min(t, tasks));
}

/// Runs body(i) for i in [0, count). Results must be written to per-index
/// slots so that the outcome does not depend on scheduling.
void parallel_for(int count, int threads, const std::function<void(int)> &body) {
    const int workers = resolve_threads(threads, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

json complex_to_json(const CVector &v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

json stat_to_json(const Stat &s) { return {{"mean", s.mean}, {"sd", s.sd}, {"median", s.median}}; }

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CVector leading(const CVector &values, Eigen::Index count) {
    const auto order = spectral_order(values);
    CVector out(std::min<Eigen::Index>(count, values.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = values(order[static_cast<size_t>(i)]);
    return out;
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string> &problems)
    : std::invalid_argument(join_lines(problems)), problems_(problems) {}

std::vector<double> GammaGrid::values() const {
    std::vector<double> out;
    if (count == 1) return {lo};
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) {
        out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / (count - 1)));
    }
    return out;
}

std::string config_hash(const json &config) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Stat summarize(const std::vector<double> &values) {
    Stat s;
    const size_t m = values.size();
    if (m == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(m);
    if (m >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(m - 1));
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    return s;
}

// ---------------------------------------------------------------------------
// configs

EigenBenchConfig eigen_bench_config_from_json(const json &j) {
    EigenBenchConfig c;
    std::vector<std::string> problems;
    FieldReader r(j, "", problems);
    r.integer<int>("N", c.N, [](int v) { return v >= 2 && v <= 200; }, "must lie in [2, 200]");
    r.integer<Eigen::Index>("n", c.n, [](Eigen::Index v) { return v >= 10; }, "must be >= 10");
    r.integer<int>("repeats", c.repeats, [](int v) { return v >= 2; }, "must be >= 2");
    r.integer<Eigen::Index>("rank", c.rank, [](Eigen::Index v) { return v >= 3; },
                            "must be >= 3 (three eigenvalues are matched)");
    if (const json *g = r.object("gamma_grid")) {
        FieldReader gr(*g, "gamma_grid.", problems);
        gr.real("lo", c.gamma_grid.lo, [](double v) { return v > 0.0; }, "must be > 0");
        gr.real("hi", c.gamma_grid.hi, [](double v) { return v > 0.0; }, "must be > 0");
        gr.integer<int>("count", c.gamma_grid.count, [](int v) { return v >= 1; }, "must be >= 1");
        gr.finish();
        if (c.gamma_grid.hi < c.gamma_grid.lo) gr.fail("hi", "must be >= gamma_grid.lo");
    }
    r.real("lengthscale", c.lengthscale, [](double v) { return v > 0.0; }, "must be > 0");
    r.integer<Eigen::Index>("test_size", c.test_size, [](Eigen::Index v) { return v >= 1; },
                            "must be >= 1");
    r.real("validation_fraction", c.validation_fraction,
           [](double v) { return v > 0.0 && v < 1.0; }, "must lie in (0, 1)");
    r.real("x0", c.x0, [](double v) { return v >= 0.0 && v < 1.0; }, "must lie in [0, 1)");
    r.integer<Eigen::Index>("burn_in", c.burn_in, [](Eigen::Index v) { return v >= 0; },
                            "must be >= 0");
    r.integer<std::uint64_t>("seed", c.seed);
    r.integer<int>("threads", c.threads, [](int v) { return v >= 0; }, "must be >= 0");
    r.finish();
    const auto n_val = static_cast<Eigen::Index>(std::floor(c.validation_fraction * c.n));
    if (problems.empty() && (n_val < 1 || c.n - n_val <= c.rank)) {
        problems.push_back("validation_fraction: leaves no room for validation or fitting at n = " +
                           std::to_string(c.n));
    }
    if (!problems.empty()) throw ConfigError(problems);
    return c;
}

json to_json(const EigenBenchConfig &c) {
    return {{"N", c.N},
            {"n", c.n},
            {"repeats", c.repeats},
            {"rank", c.rank},
            {"gamma_grid", {{"lo", c.gamma_grid.lo}, {"hi", c.gamma_grid.hi}, {"count", c.gamma_grid.count}}},
            {"lengthscale", c.lengthscale},
            {"test_size", c.test_size},
            {"validation_fraction", c.validation_fraction},
            {"x0", c.x0},
            {"burn_in", c.burn_in},
            {"seed", c.seed}};
}

BoundConfig bound_config_from_json(const json &j) {
    BoundConfig c;
    std::vector<std::string> problems;
    FieldReader r(j, "", problems);
    r.string("system", c.system, {"logistic", "lorenz63"});
    r.integer<int>("N", c.N, [](int v) { return v >= 2 && v <= 200; }, "must lie in [2, 200]");
    r.index_list("n_grid", c.n_grid);
    r.integer<Eigen::Index>("rank", c.rank, [](Eigen::Index v) { return v >= 1; }, "must be >= 1");
    r.integer<int>("repeats", c.repeats, [](int v) { return v >= 1; }, "must be >= 1");
    r.integer<Eigen::Index>("test_size", c.test_size, [](Eigen::Index v) { return v >= 1; },
                            "must be >= 1");
    r.real("lengthscale", c.lengthscale, [](double v) { return v > 0.0; }, "must be > 0");
    r.real("lorenz_dt", c.lorenz_dt, [](double v) { return v > 0.0; }, "must be > 0");
    if (const json *m = r.object("match")) {
        FieldReader mr(*m, "match.", problems);
        mr.real("gamma_lo", c.match.gamma_lo, [](double v) { return v > 0.0; }, "must be > 0");
        mr.real("gamma_hi", c.match.gamma_hi, [](double v) { return v > 0.0; }, "must be > 0");
        mr.real("tol", c.match.tol, [](double v) { return v > 0.0 && v < 1.0; },
                "must lie in (0, 1)");
        mr.integer<int>("monotonicity_points", c.match.monotonicity_points,
                        [](int v) { return v >= 2; }, "must be >= 2");
        mr.finish();
        if (c.match.gamma_hi <= c.match.gamma_lo) mr.fail("gamma_hi", "must exceed match.gamma_lo");
    }
    r.real("x0", c.x0, [](double v) { return v >= 0.0 && v < 1.0; }, "must lie in [0, 1)");
    r.integer<Eigen::Index>("burn_in", c.burn_in, [](Eigen::Index v) { return v >= 0; },
                            "must be >= 0");
    r.integer<std::uint64_t>("seed", c.seed);
    r.integer<int>("threads", c.threads, [](int v) { return v >= 0; }, "must be >= 0");
    r.finish();
    if (c.n_grid.size() < 4) r.fail("n_grid", "needs at least 4 values");
    for (size_t i = 0; i < c.n_grid.size(); ++i) {
        if (c.n_grid[i] <= c.rank) {
            r.fail("n_grid", "every n must exceed the rank");
            break;
        }
        if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) {
            r.fail("n_grid", "must be strictly ascending");
            break;
        }
    }
    if (!problems.empty()) throw ConfigError(problems);
    return c;
}

json to_json(const BoundConfig &c) {
    return {{"system", c.system},
            {"N", c.N},
            {"n_grid", c.n_grid},
            {"rank", c.rank},
            {"repeats", c.repeats},
            {"test_size", c.test_size},
            {"lengthscale", c.lengthscale},
            {"lorenz_dt", c.lorenz_dt},
            {"match",
             {{"gamma_lo", c.match.gamma_lo},
              {"gamma_hi", c.match.gamma_hi},
              {"tol", c.match.tol},
              {"monotonicity_points", c.match.monotonicity_points}}},
            {"x0", c.x0},
            {"burn_in", c.burn_in},
            {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// held-out risk

HoldoutRisk::HoldoutRisk(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                         const MatrixRef &Y, const MatrixRef &X_out, const MatrixRef &Y_out,
                         const GramSpectrum *spectrum)
    : gram_(&gram), n_(gram.n) {
    if (X.rows() != n_ || Y.rows() != n_) {
        throw std::invalid_argument("HoldoutRisk: training data does not match the Gram matrices");
    }
    if (X_out.rows() == 0 || X_out.rows() != Y_out.rows() || X_out.cols() != X.cols() ||
        Y_out.cols() != X.cols()) {
        throw std::invalid_argument("HoldoutRisk: held-out pairs do not match the training data");
    }
    kx_ = kernel_matrix(kernel, X, X_out);
    ky_ = kernel_matrix(kernel, Y, Y_out);
    kyy_.resize(Y_out.rows());
    for (Eigen::Index j = 0; j < Y_out.rows(); ++j) {
        kyy_(j) = kernel(Y_out.row(j).transpose(), Y_out.row(j).transpose());
    }
    if (!spectrum) return;
    const Matrix &Q = spectrum->gx.vectors;
    lam_ = spectrum->gx.values;
    s_ = spectrum->gy_projected;
    b_ = Q.transpose() * kx_;
    qt_ky_ = Q.transpose() * ky_;
    const Matrix R = kx_ - Q * b_;
    const Matrix gy_r = gram.gy * R;
    qt_gy_r_ = Q.transpose() * gy_r;
    r_gy_r_ = R.cwiseProduct(gy_r).colwise().sum().transpose();
    r_ky_ = R.cwiseProduct(ky_).colwise().sum().transpose();
    krr_ready_ = true;
}

double HoldoutRisk::operator()(const FittedEstimator &est) const {
    if (est.n() != n_) throw std::invalid_argument("HoldoutRisk: estimator sample size mismatch");
    const double inv_n = 1.0 / static_cast<double>(n_);
    Vector cross, quad;
    if (est.identity_left()) {
        const Matrix P = est.V * kx_;
        cross = P.cwiseProduct(ky_).colwise().sum().transpose();
        quad = P.cwiseProduct(gram_->gy * P).colwise().sum().transpose();
    } else {
        const Matrix C = est.U.transpose() * kx_;
        const Matrix vtgyv = est.V.transpose() * (gram_->gy * est.V);
        cross = C.cwiseProduct(est.V.transpose() * ky_).colwise().sum().transpose();
        quad = C.cwiseProduct(vtgyv * C).colwise().sum().transpose();
    }
    return (kyy_ - 2.0 * inv_n * cross + inv_n * quad).mean();
}

double HoldoutRisk::krr(double gamma) const {
    if (!krr_ready_) {
        throw std::logic_error("HoldoutRisk::krr needs a GramSpectrum");
    }
    if (!(gamma > 0.0)) throw std::invalid_argument("KRR requires gamma > 0");
    // V = Q D Q^T + (I - Q Q^T) / gamma, D = diag(1 / (lambda + gamma))
    const double inv_n = 1.0 / static_cast<double>(n_);
    const Vector d = (lam_.array() + gamma).inverse().matrix();
    const Matrix db = d.asDiagonal() * b_;
    const Vector cross = db.cwiseProduct(qt_ky_).colwise().sum().transpose() + r_ky_ / gamma;
    const Vector quad = db.cwiseProduct(s_ * db).colwise().sum().transpose() +
                        (2.0 / gamma) * db.cwiseProduct(qt_gy_r_).colwise().sum().transpose() +
                        r_gy_r_ / (gamma * gamma);
    return (kyy_ - 2.0 * inv_n * cross + inv_n * quad).mean();
}

// ---------------------------------------------------------------------------
// eigenvalue benchmark

std::vector<double> match_eigenvalues(const CVector &oracle, const CVector &estimated) {
    if (oracle.size() != estimated.size()) {
        throw std::invalid_argument("match_eigenvalues: sets differ in size");
    }
    std::vector<bool> used(static_cast<size_t>(estimated.size()), false);
    std::vector<double> err;
    for (Eigen::Index i = 0; i < oracle.size(); ++i) {
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < estimated.size(); ++j) {
            if (used[static_cast<size_t>(j)]) continue;
            const double d = std::abs(oracle(i) - estimated(j));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        used[static_cast<size_t>(best)] = true;
        err.push_back(best_d / std::abs(oracle(i)));
    }
    return err;
}

namespace {

struct RepeatOutcome {
    RepeatRecord krr, pcr, rrr;
};

void record_errors(RepeatRecord &rec, const CVector &oracle, const CVector &estimated) {
    if (estimated.size() < oracle.size()) {
        throw NumericalError("only " + std::to_string(estimated.size()) +
                             " nonzero eigenvalues available");
    }
    rec.eigenvalues = estimated;
    const auto err = match_eigenvalues(oracle, estimated.head(oracle.size()));
    rec.rel_err_lambda1 = err[0];
    rec.rel_err_lambda23 = 0.5 * (err[1] + err[2]);
}

template <class F>
void guarded(RepeatRecord &rec, F &&body) {
    try {
        body();
        rec.ok = true;
    } catch (const std::exception &e) {
        rec.ok = false;
        rec.error = e.what();
    }
}

RepeatOutcome run_eigen_repeat(const EigenBenchConfig &cfg, const CVector &oracle,
                               std::uint64_t seed) {
    RepeatOutcome out;
    out.krr.seed = out.pcr.seed = out.rrr.seed = seed;

    LogisticParams params;
    params.N = cfg.N;
    params.x0 = cfg.x0;
    params.burn_in = cfg.burn_in;
    const Trajectory traj = simulate_logistic(params, cfg.n + cfg.test_size, seed);
    const Matrix Xall = traj.inputs(), Yall = traj.outputs();
    const Eigen::Index n = cfg.n;
    const Eigen::Index n_val = static_cast<Eigen::Index>(std::floor(cfg.validation_fraction * n));
    const Eigen::Index n_fit = n - n_val;
    const KernelSpec kernel = KernelSpec::gaussian(cfg.lengthscale);
    const std::vector<double> grid = cfg.gamma_grid.values();

    double gamma_rrr = 0.0, gamma_krr = 0.0;
    {
        const Matrix Xf = Xall.topRows(n_fit), Yf = Yall.topRows(n_fit);
        const Matrix Xv = Xall.middleRows(n_fit, n_val), Yv = Yall.middleRows(n_fit, n_val);
        const GramCache gram = build_gram(kernel, Xf, Yf);
        const GramSpectrum spec = gram_spectrum(gram);
        const HoldoutRisk val(gram, kernel, Xf, Yf, Xv, Yv, &spec);
        double best_rrr = std::numeric_limits<double>::infinity();
        double best_krr = std::numeric_limits<double>::infinity();
        for (double g : grid) {
            try {
                const double risk = val(fit_rrr(gram, spec, kernel, Xf, Yf, cfg.rank, g));
                if (risk < best_rrr) {
                    best_rrr = risk;
                    gamma_rrr = g;
                }
            } catch (const NumericalError &) {
                // unusable gamma for this rank; skip
            }
            const double risk = val.krr(g);
            if (risk < best_krr) {
                best_krr = risk;
                gamma_krr = g;
            }
        }
    }

    const Matrix X = Xall.topRows(n), Y = Yall.topRows(n);
    const Matrix Xt = Xall.bottomRows(cfg.test_size), Yt = Yall.bottomRows(cfg.test_size);
    const GramCache gram = build_gram(kernel, X, Y);
    const GramSpectrum spec = gram_spectrum(gram);
    const HoldoutRisk test(gram, kernel, X, Y, Xt, Yt);

    guarded(out.pcr, [&] {
        const FittedEstimator est = fit_pcr(gram, spec, kernel, X, Y, cfg.rank);
        out.pcr.train_risk = empirical_risk(est, gram);
        out.pcr.test_risk = test(est);
        record_errors(out.pcr, oracle, leading(decompose(est, gram).eigenvalues, oracle.size()));
    });
    guarded(out.rrr, [&] {
        if (gamma_rrr == 0.0) throw NumericalError("no gamma on the grid gave a valid RRR fit");
        const FittedEstimator est = fit_rrr(gram, spec, kernel, X, Y, cfg.rank, gamma_rrr);
        out.rrr.gamma = gamma_rrr;
        out.rrr.train_risk = empirical_risk(est, gram);
        out.rrr.test_risk = test(est);
        record_errors(out.rrr, oracle, leading(decompose(est, gram).eigenvalues, oracle.size()));
    });
    guarded(out.krr, [&] {
        const FittedEstimator est = fit_krr(gram, kernel, X, Y, gamma_krr);
        out.krr.gamma = gamma_krr;
        out.krr.train_risk = empirical_risk(est, gram);
        out.krr.test_risk = test(est);
        record_errors(out.krr, oracle, leading_eigenvalues(est, gram, oracle.size()));
    });
    return out;
}

EstimatorBenchStats aggregate(std::vector<RepeatRecord> records) {
    EstimatorBenchStats s;
    std::vector<double> train, test, e1, e23, gamma;
    for (const auto &r : records) {
        if (!r.ok) {
            ++s.failed;
            continue;
        }
        train.push_back(r.train_risk);
        test.push_back(r.test_risk);
        e1.push_back(r.rel_err_lambda1);
        e23.push_back(r.rel_err_lambda23);
        gamma.push_back(r.gamma);
    }
    s.train_risk = summarize(train);
    s.test_risk = summarize(test);
    s.rel_err_lambda1 = summarize(e1);
    s.rel_err_lambda23 = summarize(e23);
    s.gamma = summarize(gamma);
    s.repeats = std::move(records);
    return s;
}

}  // namespace

EigenBenchReport eigenvalue_benchmark(const EigenBenchConfig &cfg) {
    eigen_bench_config_from_json(to_json(cfg));  // validation

    const LogisticOracle oracle = build_logistic_oracle(cfg.N);
    EigenBenchReport report;
    report.config = cfg;
    report.oracle_eigenvalues = leading(oracle.eigenvalues, 3);
    for (int i = 0; i < cfg.repeats; ++i) {
        report.seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    }

    std::vector<RepeatOutcome> outcomes(static_cast<size_t>(cfg.repeats));
    parallel_for(cfg.repeats, cfg.threads, [&](int i) {
        outcomes[static_cast<size_t>(i)] =
            run_eigen_repeat(cfg, report.oracle_eigenvalues, report.seeds[static_cast<size_t>(i)]);
    });

    std::vector<RepeatRecord> krr, pcr, rrr;
    for (const auto &o : outcomes) {
        krr.push_back(o.krr);
        pcr.push_back(o.pcr);
        rrr.push_back(o.rrr);
    }
    report.estimators["krr"] = aggregate(std::move(krr));
    report.estimators["pcr"] = aggregate(std::move(pcr));
    report.estimators["rrr"] = aggregate(std::move(rrr));
    return report;
}

json to_json(const EigenBenchReport &report) {
    const json cfg = to_json(report.config);
    json est = json::object();
    for (const auto &[name, s] : report.estimators) {
        json reps = json::array();
        for (const auto &r : s.repeats) {
            json rj = {{"seed", r.seed}, {"ok", r.ok}};
            if (r.ok) {
                rj["train_risk"] = r.train_risk;
                rj["test_risk"] = r.test_risk;
                rj["rel_err_lambda1"] = r.rel_err_lambda1;
                rj["rel_err_lambda23"] = r.rel_err_lambda23;
                rj["gamma"] = r.gamma;
                rj["eigenvalues"] = complex_to_json(r.eigenvalues);
            } else {
                rj["error"] = r.error;
            }
            reps.push_back(rj);
        }
        est[name] = {{"train_risk", stat_to_json(s.train_risk)},
                     {"test_risk", stat_to_json(s.test_risk)},
                     {"rel_err_lambda1", stat_to_json(s.rel_err_lambda1)},
                     {"rel_err_lambda23", stat_to_json(s.rel_err_lambda23)},
                     {"gamma", stat_to_json(s.gamma)},
                     {"failed", s.failed},
                     {"repeats", reps}};
    }
    return {{"kind", "eigs"},
            {"config", cfg},
            {"config_hash", config_hash(cfg)},
            {"oracle_eigenvalues", complex_to_json(report.oracle_eigenvalues)},
            {"seeds", report.seeds},
            {"estimators", est}};
}

std::string to_csv(const EigenBenchReport &report) {
    std::ostringstream os;
    os << "estimator,statistic,mean,sd,median,failed\n";
    for (const auto &[name, s] : report.estimators) {
        const std::pair<const char *, const Stat *> rows[] = {
            {"train_risk", &s.train_risk},
            {"test_risk", &s.test_risk},
            {"rel_err_lambda1", &s.rel_err_lambda1},
            {"rel_err_lambda23", &s.rel_err_lambda23},
            {"gamma", &s.gamma}};
        for (const auto &[stat, st] : rows) {
            os << name << ',' << stat << ',' << fmt17(st->mean) << ',' << fmt17(st->sd) << ','
               << fmt17(st->median) << ',' << s.failed << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// HS-norm matching and the Ivanov experiment

HsMatch match_hs_norm(const GramCache &gram, const KernelSpec &kernel, const MatrixRef &X,
                      const MatrixRef &Y, Eigen::Index r, double target,
                      const HsMatchOptions &opts) {
    return match_hs_norm(gram, gram_spectrum(gram), kernel, X, Y, r, target, opts);
}

HsMatch match_hs_norm(const GramCache &gram, const GramSpectrum &spectrum,
                      const KernelSpec &kernel, const MatrixRef &X, const MatrixRef &Y,
                      Eigen::Index r, double target, const HsMatchOptions &opts) {
    if (!(target > 0.0) || !std::isfinite(target)) {
        throw std::invalid_argument("match_hs_norm: target must be positive and finite");
    }
    if (!(opts.gamma_lo > 0.0) || !(opts.gamma_hi > opts.gamma_lo)) {
        throw std::invalid_argument("match_hs_norm: need 0 < gamma_lo < gamma_hi");
    }
    if (!(opts.tol > 0.0)) throw std::invalid_argument("match_hs_norm: tol must be > 0");

    auto at = [&](double log_gamma) {
        HsMatch m;
        m.gamma = std::exp(log_gamma);
        m.estimator = fit_rrr(gram, spectrum, kernel, X, Y, r, m.gamma);
        m.hs_norm = hs_norm(m.estimator, gram);
        return m;
    };
    double a = std::log(opts.gamma_lo), b = std::log(opts.gamma_hi);

    const int pts = std::max(2, opts.monotonicity_points);
    std::vector<double> profile;
    for (int i = 0; i < pts; ++i) {
        profile.push_back(at(a + (b - a) * i / (pts - 1)).hs_norm);
    }
    for (int i = 1; i < pts; ++i) {
        if (profile[i] > profile[i - 1] * (1.0 + 1e-9)) {
            std::ostringstream os;
            os << "match_hs_norm: HS norm is not decreasing in gamma on [" << opts.gamma_lo << ", "
               << opts.gamma_hi << "]; profile:";
            for (int k = 0; k < pts; ++k) {
                os << ' ' << std::exp(a + (b - a) * k / (pts - 1)) << "->" << profile[k];
            }
            throw NumericalError(os.str());
        }
    }
    const double hs_lo = profile.front(), hs_hi = profile.back();
    if (!(hs_hi <= target && target <= hs_lo)) {
        std::ostringstream os;
        os.precision(10);
        os << "match_hs_norm: target " << target << " outside the bracket: hs(gamma_lo = "
           << opts.gamma_lo << ") = " << hs_lo << ", hs(gamma_hi = " << opts.gamma_hi
           << ") = " << hs_hi;
        throw NumericalError(os.str());
    }

    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (a + b);
        HsMatch m = at(mid);
        if (std::abs(m.hs_norm - target) < opts.tol * target) return m;
        if (m.hs_norm > target) {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a < 1e-13 * std::max(1.0, std::abs(a))) break;
    }
    throw NumericalError("match_hs_norm: bisection stalled before reaching the tolerance");
}

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("loglog_slope: need at least two (x, y) pairs");
    }
    double mx = 0.0, my = 0.0;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::invalid_argument("loglog_slope: values must be positive");
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        mx += lx.back();
        my += ly.back();
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("loglog_slope: x values are all equal");
    return sxy / sxx;
}

namespace {

struct BoundSample {
    bool ok = false;
    double pcr_train = 0.0, pcr_test = 0.0, rrr_train = 0.0, rrr_test = 0.0;
    double hs_pcr = 0.0, hs_rrr = 0.0, gamma = 0.0;
};

Trajectory bound_trajectory(const BoundConfig &cfg, Eigen::Index pairs, std::uint64_t seed) {
    if (cfg.system == "lorenz63") {
        Lorenz63Params p;
        p.dt = cfg.lorenz_dt;
        return simulate_lorenz63(p, pairs, seed);
    }
    LogisticParams p;
    p.N = cfg.N;
    p.x0 = cfg.x0;
    p.burn_in = cfg.burn_in;
    return simulate_logistic(p, pairs, seed);
}

BoundSample run_bound_sample(const BoundConfig &cfg, Eigen::Index n, std::uint64_t seed) {
    BoundSample s;
    const Trajectory traj = bound_trajectory(cfg, n + cfg.test_size, seed);
    const Matrix Xall = traj.inputs(), Yall = traj.outputs();
    const Matrix X = Xall.topRows(n), Y = Yall.topRows(n);
    const Matrix Xt = Xall.bottomRows(cfg.test_size), Yt = Yall.bottomRows(cfg.test_size);
    const KernelSpec kernel = KernelSpec::gaussian(cfg.lengthscale);
    const GramCache gram = build_gram(kernel, X, Y);
    const GramSpectrum spec = gram_spectrum(gram);

    const FittedEstimator pcr = fit_pcr(gram, spec, kernel, X, Y, cfg.rank);
    s.hs_pcr = hs_norm(pcr, gram);
    const HsMatch m = match_hs_norm(gram, spec, kernel, X, Y, cfg.rank, s.hs_pcr, cfg.match);
    s.hs_rrr = m.hs_norm;
    s.gamma = m.gamma;

    const HoldoutRisk test(gram, kernel, X, Y, Xt, Yt);
    s.pcr_train = empirical_risk(pcr, gram);
    s.pcr_test = test(pcr);
    s.rrr_train = empirical_risk(m.estimator, gram);
    s.rrr_test = test(m.estimator);
    s.ok = true;
    return s;
}

}  // namespace

BoundReport ivanov_bound_experiment(const BoundConfig &cfg) {
    bound_config_from_json(to_json(cfg));  // validation

    const size_t cells = cfg.n_grid.size();
    const size_t reps = static_cast<size_t>(cfg.repeats);
    std::vector<BoundSample> samples(cells * reps);
    parallel_for(static_cast<int>(cells * reps), cfg.threads, [&](int task) {
        const size_t c = static_cast<size_t>(task) / reps, k = static_cast<size_t>(task) % reps;
        const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, c), k);
        try {
            samples[static_cast<size_t>(task)] = run_bound_sample(cfg, cfg.n_grid[c], seed);
        } catch (const std::runtime_error &) {
            samples[static_cast<size_t>(task)].ok = false;
        }
    });

    BoundReport report;
    report.config = cfg;
    std::vector<double> ns, pcr_dev, rrr_dev;
    for (size_t c = 0; c < cells; ++c) {
        BoundCell cell;
        cell.n = cfg.n_grid[c];
        for (size_t k = 0; k < reps; ++k) {
            const BoundSample &s = samples[c * reps + k];
            if (!s.ok) {
                ++cell.failed;
                continue;
            }
            ++cell.repeats_ok;
            cell.pcr_train += s.pcr_train;
            cell.pcr_test += s.pcr_test;
            cell.rrr_train += s.rrr_train;
            cell.rrr_test += s.rrr_test;
            cell.pcr_dev += std::abs(s.pcr_train - s.pcr_test);
            cell.rrr_dev += std::abs(s.rrr_train - s.rrr_test);
            cell.matched_hs_norm += s.hs_pcr;
            cell.matched_gamma += s.gamma;
            cell.max_hs_mismatch =
                std::max(cell.max_hs_mismatch, std::abs(s.hs_pcr - s.hs_rrr) / s.hs_pcr);
        }
        if (cell.repeats_ok > 0) {
            const double k = cell.repeats_ok;
            for (double *f : {&cell.pcr_train, &cell.pcr_test, &cell.rrr_train, &cell.rrr_test,
                              &cell.pcr_dev, &cell.rrr_dev, &cell.matched_hs_norm,
                              &cell.matched_gamma}) {
                *f /= k;
            }
            cell.rrr_not_worse = cell.rrr_train <= cell.pcr_train && cell.rrr_test <= cell.pcr_test;
            ns.push_back(static_cast<double>(cell.n));
            pcr_dev.push_back(cell.pcr_dev);
            rrr_dev.push_back(cell.rrr_dev);
        } else {
            cell.rrr_not_worse = false;
        }
        report.cells.push_back(cell);
    }
    if (ns.size() < 2) {
        throw NumericalError("ivanov_bound_experiment: fewer than two usable n-cells");
    }
    report.pcr_slope = loglog_slope(ns, pcr_dev);
    report.rrr_slope = loglog_slope(ns, rrr_dev);
    return report;
}

json to_json(const BoundReport &report) {
    const json cfg = to_json(report.config);
    json cells = json::array();
    for (const auto &c : report.cells) {
        cells.push_back({{"n", c.n},
                         {"repeats_ok", c.repeats_ok},
                         {"failed", c.failed},
                         {"pcr_train", c.pcr_train},
                         {"pcr_test", c.pcr_test},
                         {"rrr_train", c.rrr_train},
                         {"rrr_test", c.rrr_test},
                         {"pcr_dev", c.pcr_dev},
                         {"rrr_dev", c.rrr_dev},
                         {"matched_hs_norm", c.matched_hs_norm},
                         {"matched_gamma", c.matched_gamma},
                         {"max_hs_mismatch", c.max_hs_mismatch},
                         {"rrr_not_worse", c.rrr_not_worse}});
    }
    return {{"kind", "bound"},
            {"config", cfg},
            {"config_hash", config_hash(cfg)},
            {"cells", cells},
            {"pcr_slope", report.pcr_slope},
            {"rrr_slope", report.rrr_slope}};
}

std::string to_csv(const BoundReport &report) {
    std::ostringstream os;
    os << "n,repeats_ok,failed,pcr_train,pcr_test,rrr_train,rrr_test,pcr_dev,rrr_dev,"
          "matched_hs_norm,matched_gamma,max_hs_mismatch\n";
    for (const auto &c : report.cells) {
        os << c.n << ',' << c.repeats_ok << ',' << c.failed << ',' << fmt17(c.pcr_train) << ','
           << fmt17(c.pcr_test) << ',' << fmt17(c.rrr_train) << ',' << fmt17(c.rrr_test) << ','
           << fmt17(c.pcr_dev) << ',' << fmt17(c.rrr_dev) << ',' << fmt17(c.matched_hs_norm)
           << ',' << fmt17(c.matched_gamma) << ',' << fmt17(c.max_hs_mismatch) << '\n';
    }
    return os.str();
}

}  // namespace koopreg

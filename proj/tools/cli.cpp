#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "koopreg/datagen.hpp"
#include "koopreg/estimators.hpp"
#include "koopreg/experiments.hpp"
#include "koopreg/io.hpp"
#include "koopreg/spectral.hpp"

namespace koopreg::cli {

using nlohmann::json;

namespace {

/// Usage-level failure detected after CLI11 parsing (exit code 2).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

double to_double(const std::string &s, const std::string &what) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception &) {
        throw UsageError(what + ": cannot parse '" + s + "' as a number");
    }
}

Vector parse_vector(const std::string &s, const std::string &what) {
    const auto parts = split(s, ',');
    if (parts.empty()) throw UsageError(what + ": empty list");
    Vector v(static_cast<Eigen::Index>(parts.size()));
    for (size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(parts[i], what);
    return v;
}

// ---------------------------------------------------------------------------
// options shared across commands

struct KernelFlags {
    std::string family = "gaussian";
    double lengthscale = 1.0;
    double scale = 1.0;
    int degree = 2;
    double offset = 1.0;

    void add(CLI::App *app) {
        app->add_option("--kernel", family, "Kernel family")
            ->check(CLI::IsMember({"gaussian", "linear", "polynomial"}));
        app->add_option("--lengthscale", lengthscale, "Gaussian lengthscale");
        app->add_option("--scale", scale, "Linear/polynomial scale");
        app->add_option("--degree", degree, "Polynomial degree");
        app->add_option("--offset", offset, "Polynomial offset");
    }

    [[nodiscard]] KernelSpec spec() const {
        if (family == "linear") return KernelSpec::linear(scale);
        if (family == "polynomial") return KernelSpec::polynomial(degree, offset, scale);
        return KernelSpec::gaussian(lengthscale);
    }
};

/// "state", "cols:0,2" or "file:path.csv" (header line, one row per
/// trajectory state or per training output).
ObservableOnSample resolve_observable(const std::string &spec, const FittedEstimator &est) {
    if (spec == "state") return {est.Y};
    if (spec.rfind("cols:", 0) == 0) {
        std::vector<Eigen::Index> cols;
        for (const auto &c : split(spec.substr(5), ',')) {
            const double v = to_double(c, "--observable");
            if (v < 0 || v >= static_cast<double>(est.dim()) || v != std::floor(v)) {
                throw UsageError("--observable: column " + c + " out of range for dimension " +
                                 std::to_string(est.dim()));
            }
            cols.push_back(static_cast<Eigen::Index>(v));
        }
        if (cols.empty()) throw UsageError("--observable: empty column list");
        Matrix f(est.n(), static_cast<Eigen::Index>(cols.size()));
        for (size_t j = 0; j < cols.size(); ++j) f.col(static_cast<Eigen::Index>(j)) = est.Y.col(cols[j]);
        return {f};
    }
    if (spec.rfind("file:", 0) == 0) {
        const Matrix f = read_matrix_csv(spec.substr(5), true);
        if (f.rows() == est.n() + 1) return {f.bottomRows(est.n())};
        if (f.rows() == est.n()) return {f};
        throw UsageError("--observable: file has " + std::to_string(f.rows()) +
                         " rows, expected " + std::to_string(est.n()) + " or " +
                         std::to_string(est.n() + 1));
    }
    throw UsageError("--observable: expected 'state', 'cols:i,j,...' or 'file:path'");
}

std::vector<std::string> indexed_header(const std::string &prefix, Eigen::Index count) {
    std::vector<std::string> h;
    for (Eigen::Index i = 0; i < count; ++i) h.push_back(prefix + std::to_string(i));
    return h;
}

Vector parse_point(const std::string &s, const FittedEstimator &est) {
    const Vector x = parse_vector(s, "--x");
    if (x.size() != est.dim()) {
        throw UsageError("--x: point has dimension " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(est.dim()));
    }
    return x;
}

SpectralDecomposition decompose_with_hint(const FittedEstimator &est) {
    try {
        return decompose(est);
    } catch (const NumericalError &e) {
        throw NumericalError(std::string(e.what()) +
                             " (hint: refit with a lower rank or a larger gamma)");
    }
}

// ---------------------------------------------------------------------------
// resolved-config echo

json resolved_options(const CLI::App *sub) {
    json opts = json::object();
    for (const CLI::Option *opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "config") continue;
        if (opt->count() > 0) {
            opts[name] = opt->as<std::string>();
        } else {
            opts[name] = opt->get_default_str();
        }
    }
    return opts;
}

void write_echo(const std::string &output_path, const CLI::App *sub, const json &overrides = {}) {
    json opts = resolved_options(sub);
    if (overrides.is_object()) opts.update(overrides);
    const json echo = {{"command", sub->get_name()}, {"options", opts}};
    write_json_file(sidecar_path(output_path, ".config.json"), echo);
}

// ---------------------------------------------------------------------------
// commands

struct SimulateArgs {
    std::string system;
    Eigen::Index n = 1000;
    std::uint64_t seed = 0;
    std::string out;
    int N = 20;
    double x0 = 0.33;
    Eigen::Index burn_in = 100;
    double dt = 0.1;
    double burn_time = 100.0;
    double step = 1e-3;
    std::string eigs = "0.9,0.5";
};

int cmd_simulate(const SimulateArgs &a, const CLI::App *sub, std::ostream &out) {
    Trajectory traj;
    if (a.system == "logistic") {
        LogisticParams p;
        p.N = a.N;
        p.x0 = a.x0;
        p.burn_in = a.burn_in;
        traj = simulate_logistic(p, a.n, a.seed);
    } else if (a.system == "lorenz63") {
        Lorenz63Params p;
        p.dt = a.dt;
        p.burn_time = a.burn_time;
        p.step = a.step;
        traj = simulate_lorenz63(p, a.n, a.seed);
    } else {
        traj = simulate_ou(parse_vector(a.eigs, "--eigs"), a.n, a.seed);
    }
    const std::string path = a.out.empty() ? a.system + ".csv" : a.out;
    save_trajectory(path, traj);
    write_echo(path, sub, {{"out", path}});
    out << "wrote " << traj.states.rows() << " states of dimension " << traj.dim() << " to "
        << path << "\n";
    return kExitOk;
}

struct FitArgs {
    std::string trajectory;
    std::string estimator;
    KernelFlags kernel;
    double gamma = 1e-6;
    Eigen::Index rank = 3;
    std::string out = "model.json";
};

int cmd_fit(const FitArgs &a, const CLI::App *sub, std::ostream &out) {
    const Trajectory traj = load_trajectory(a.trajectory);
    const Matrix X = traj.inputs(), Y = traj.outputs();
    const KernelSpec kernel = a.kernel.spec();
    const GramCache gram = build_gram(kernel, X, Y);
    FittedEstimator est;
    switch (estimator_kind_from_string(a.estimator)) {
        case EstimatorKind::KRR: est = fit_krr(gram, kernel, X, Y, a.gamma); break;
        case EstimatorKind::PCR: est = fit_pcr(gram, kernel, X, Y, a.rank); break;
        case EstimatorKind::RRR: est = fit_rrr(gram, kernel, X, Y, a.rank, a.gamma); break;
    }
    save_model(a.out, est);
    write_echo(a.out, sub);
    out << "empirical_risk " << format_double(empirical_risk(est, gram)) << "\n";
    return kExitOk;
}

struct PredictArgs {
    std::string model;
    std::string x;
    std::string points;
    std::string observable = "state";
    std::string out = "predictions.csv";
};

int cmd_predict(const PredictArgs &a, const CLI::App *sub, std::ostream &out) {
    const FittedEstimator est = load_model(a.model);
    const ObservableOnSample obs = resolve_observable(a.observable, est);
    if (a.x.empty() == a.points.empty()) throw UsageError("predict: give exactly one of --x or --points");
    Matrix pts;
    if (!a.x.empty()) {
        pts = parse_point(a.x, est).transpose();
    } else {
        pts = read_matrix_csv(a.points, true);
        if (pts.cols() != est.dim()) throw UsageError("--points: wrong dimension");
    }
    const Matrix pred = predict_observable_batch(est, obs, pts);
    write_text_file(a.out, matrix_to_csv(pred, indexed_header("f", pred.cols())));
    write_echo(a.out, sub);
    out << "wrote " << pred.rows() << " predictions to " << a.out << "\n";
    return kExitOk;
}

struct EigsArgs {
    std::string model;
    std::string out = "eigs.csv";
    Eigen::Index count = 10;
    std::string eigfun_grid;
    std::string eigfun_points;
    std::string eigfun_out = "eigenfunctions.csv";
};

int cmd_eigs(const EigsArgs &a, const CLI::App *sub, std::ostream &out) {
    const FittedEstimator est = load_model(a.model);
    const bool want_eigfun = !a.eigfun_grid.empty() || !a.eigfun_points.empty();
    // KRR has rank n; its full decomposition is only attempted when
    // eigenfunctions are requested
    const bool dense = !est.identity_left() || want_eigfun;
    if (dense && est.identity_left() && est.n() > kMaxDenseSpectralRank) {
        throw UsageError("eigs: eigenfunctions need a dense decomposition; KRR on more than " +
                         std::to_string(kMaxDenseSpectralRank) + " samples only gives eigenvalues");
    }
    CVector values;
    SpectralDecomposition dec;
    if (dense) {
        dec = decompose_with_hint(est);
        values = dec.eigenvalues;
    } else {
        out << "note: KRR model, reporting the leading " << std::min(a.count, est.n())
            << " eigenvalues by Arnoldi\n";
        values = leading_eigenvalues(est, build_gram(est.kernel, est.X, est.Y),
                                     std::min(a.count, est.n()));
    }
    Matrix table(values.size(), 4);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        table.row(i) << static_cast<double>(i + 1), values(i).real(), values(i).imag(),
            std::abs(values(i));
    }
    write_text_file(a.out, matrix_to_csv(table, {"index", "re", "im", "modulus"}));

    if (want_eigfun) {
        Matrix pts;
        if (!a.eigfun_grid.empty()) {
            const Vector g = parse_vector(a.eigfun_grid, "--eigfun-grid");
            if (g.size() != 3 || g(2) < 2 || g(2) != std::floor(g(2)) || est.dim() != 1) {
                throw UsageError("--eigfun-grid: expected lo,hi,count with count >= 2 on a 1-D model");
            }
            pts = Vector::LinSpaced(static_cast<Eigen::Index>(g(2)), g(0), g(1));
        } else {
            pts = read_matrix_csv(a.eigfun_points, true);
            if (pts.cols() != est.dim()) throw UsageError("--eigfun-points: wrong dimension");
        }
        const CMatrix psi = eval_eigenfunctions_batch(dec, pts);
        Matrix ef(pts.rows(), pts.cols() + 2 * psi.cols());
        ef.leftCols(pts.cols()) = pts;
        std::vector<std::string> header = indexed_header("x", pts.cols());
        for (Eigen::Index c = 0; c < psi.cols(); ++c) {
            ef.col(pts.cols() + 2 * c) = psi.col(c).real();
            ef.col(pts.cols() + 2 * c + 1) = psi.col(c).imag();
            header.push_back("re_psi" + std::to_string(c + 1));
            header.push_back("im_psi" + std::to_string(c + 1));
        }
        write_text_file(a.eigfun_out, matrix_to_csv(ef, header));
    }
    write_echo(a.out, sub);
    out << "wrote " << values.size() << " eigenvalues to " << a.out;
    if (dense && dec.dropped > 0) out << " (" << dec.dropped << " dropped)";
    out << "\n";
    return kExitOk;
}

struct ForecastArgs {
    std::string model;
    std::string x;
    int t = 1;
    std::string observable = "state";
    std::string out = "forecast.csv";
};

int cmd_forecast(const ForecastArgs &a, const CLI::App *sub, std::ostream &out) {
    const FittedEstimator est = load_model(a.model);
    if (a.x.empty()) throw UsageError("forecast: --x is required");
    if (a.t < 1) throw UsageError("forecast: --t must be >= 1");
    const Vector x = parse_point(a.x, est);
    const ObservableOnSample obs = resolve_observable(a.observable, est);
    const SpectralDecomposition dec = decompose_with_hint(est);
    const ModeSet ms = modes(dec, obs);
    Matrix table(a.t, obs.values.cols() + 2);
    for (int t = 1; t <= a.t; ++t) {
        const Forecast f = forecast(dec, ms, x, t);
        table(t - 1, 0) = t;
        table.row(t - 1).segment(1, f.value.size()) = f.value.transpose();
        table(t - 1, table.cols() - 1) = f.imag_residual;
    }
    std::vector<std::string> header = {"t"};
    for (const auto &h : indexed_header("f", obs.values.cols())) header.push_back(h);
    header.push_back("imag_residual");
    write_text_file(a.out, matrix_to_csv(table, header));
    write_echo(a.out, sub);
    out << "wrote " << a.t << " forecast steps to " << a.out << "\n";
    return kExitOk;
}

struct ModesArgs {
    std::string model;
    std::string observable = "state";
    std::string out = "modes.csv";
};

int cmd_modes(const ModesArgs &a, const CLI::App *sub, std::ostream &out) {
    const FittedEstimator est = load_model(a.model);
    const ObservableOnSample obs = resolve_observable(a.observable, est);
    const SpectralDecomposition dec = decompose_with_hint(est);
    const ModeSet ms = modes(dec, obs);
    const Eigen::Index p = ms.gammas.cols();
    Matrix table(dec.rank(), 3 + 2 * p);
    std::vector<std::string> header = {"index", "re_lambda", "im_lambda"};
    for (Eigen::Index j = 0; j < p; ++j) {
        header.push_back("re_f" + std::to_string(j));
        header.push_back("im_f" + std::to_string(j));
    }
    for (Eigen::Index i = 0; i < dec.rank(); ++i) {
        table(i, 0) = static_cast<double>(i + 1);
        table(i, 1) = dec.eigenvalues(i).real();
        table(i, 2) = dec.eigenvalues(i).imag();
        for (Eigen::Index j = 0; j < p; ++j) {
            table(i, 3 + 2 * j) = ms.gammas(i, j).real();
            table(i, 4 + 2 * j) = ms.gammas(i, j).imag();
        }
    }
    write_text_file(a.out, matrix_to_csv(table, header));
    write_echo(a.out, sub);
    out << "wrote " << dec.rank() << " modes to " << a.out << "\n";
    return kExitOk;
}

struct BenchArgs {
    std::string kind;
    std::string config;
    std::string out_dir = ".";
    int threads = 0;
    std::string seed;
};

std::string fixed(double v, int width, const char *fmt = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    std::string s = buf;
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<size_t>(width) - s.size(), ' ');
    return s;
}

int cmd_bench(const BenchArgs &a, std::ostream &out) {
    json cfg_json = json::object();
    if (!a.config.empty()) {
        try {
            cfg_json = read_json_file(a.config);
        } catch (const IoError &e) {
            throw UsageError(e.what());
        }
    }
    if (!a.seed.empty()) {
        try {
            cfg_json["seed"] = std::stoull(a.seed);
        } catch (const std::exception &) {
            throw UsageError("--seed: expected a non-negative integer");
        }
    }
    cfg_json["threads"] = a.threads;

    const std::filesystem::path dir(a.out_dir);
    if (a.kind == "eigs") {
        const EigenBenchConfig cfg = eigen_bench_config_from_json(cfg_json);
        const EigenBenchReport report = eigenvalue_benchmark(cfg);
        const json rj = to_json(report);
        const std::string stem = (dir / ("bench_eigs_" + rj["config_hash"].get<std::string>())).string();
        write_json_file(stem + ".json", rj);
        write_text_file(stem + ".csv", to_csv(report));
        write_json_file(stem + ".config.json", to_json(cfg));
        out << "estimator  train_risk   test_risk  rel_err_l1  rel_err_l23(median)  failed\n";
        for (const auto &[name, s] : report.estimators) {
            out << name << "      " << fixed(s.train_risk.mean, 10)
                << "  " << fixed(s.test_risk.mean, 10) << "  " << fixed(s.rel_err_lambda1.mean, 10)
                << "  " << fixed(s.rel_err_lambda23.median, 19) << "  " << fixed(s.failed, 6, "%.0f")
                << "\n";
        }
        out << "report: " << stem << ".json\n";
    } else {
        const BoundConfig cfg = bound_config_from_json(cfg_json);
        const BoundReport report = ivanov_bound_experiment(cfg);
        const json rj = to_json(report);
        const std::string stem = (dir / ("bench_bound_" + rj["config_hash"].get<std::string>())).string();
        write_json_file(stem + ".json", rj);
        write_text_file(stem + ".csv", to_csv(report));
        write_json_file(stem + ".config.json", to_json(cfg));
        out << "       n   pcr_train   rrr_train    pcr_test    rrr_test     pcr_dev     rrr_dev  failed\n";
        for (const auto &c : report.cells) {
            out << fixed(static_cast<double>(c.n), 8, "%.0f") << fixed(c.pcr_train, 12)
                << fixed(c.rrr_train, 12) << fixed(c.pcr_test, 12) << fixed(c.rrr_test, 12)
                << fixed(c.pcr_dev, 12) << fixed(c.rrr_dev, 12) << fixed(c.failed, 8, "%.0f")
                << "\n";
        }
        out << "slope log(dev) vs log(n): pcr " << fixed(report.pcr_slope, 0) << ", rrr "
            << fixed(report.rrr_slope, 0) << "\n";
        out << "report: " << stem << ".json\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// config merging

std::string json_to_token(const json &v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + json_to_token(v[i]);
        return s;
    }
    return v.dump();
}

/// Config-file values become leading flags so explicit flags, parsed later
/// under the take-last policy, win.
std::vector<std::string> merge_config(const std::vector<std::string> &args, CLI::App &app) {
    if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
    CLI::App *sub = nullptr;
    try {
        sub = app.get_subcommand(args[0]);
    } catch (const CLI::OptionNotFound &) {
        return args;
    }
    if (sub->get_name() == "bench") return args;

    std::string path;
    for (size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    json cfg;
    try {
        cfg = read_json_file(path);
    } catch (const IoError &e) {
        throw UsageError(e.what());
    }
    if (!cfg.is_object()) throw UsageError(path + ": config must be a JSON object");
    std::vector<std::string> unknown;
    std::vector<std::string> tokens = {args[0]};
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        const CLI::Option *opt = sub->get_option_no_throw("--" + it.key());
        if (!opt || it.key() == "config" || it.key() == "help") {
            unknown.push_back(it.key());
            continue;
        }
        tokens.push_back("--" + it.key());
        tokens.push_back(json_to_token(it.value()));
    }
    if (!unknown.empty()) {
        std::string msg = path + ": unknown keys for '" + sub->get_name() + "':";
        for (const auto &k : unknown) msg += " " + k;
        throw UsageError(msg);
    }
    tokens.insert(tokens.end(), args.begin() + 1, args.end());
    return tokens;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Kernel Koopman operator regression: simulate, fit, analyse, benchmark", "koopreg"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    std::string config_path;

    SimulateArgs sim;
    CLI::App *simulate = app.add_subcommand("simulate", "Generate a trajectory CSV");
    simulate->add_option("system,--system", sim.system, "logistic, lorenz63 or ou")
        ->required()
        ->check(CLI::IsMember({"logistic", "lorenz63", "ou"}));
    simulate->add_option("--n", sim.n, "Number of transition pairs");
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--out", sim.out, "Output CSV (default <system>.csv)");
    simulate->add_option("--N", sim.N, "Logistic: trigonometric noise order (even)");
    simulate->add_option("--x0", sim.x0, "Logistic: initial state");
    simulate->add_option("--burn-in", sim.burn_in, "Logistic: discarded steps");
    simulate->add_option("--dt", sim.dt, "Lorenz63: sampling interval");
    simulate->add_option("--burn-time", sim.burn_time, "Lorenz63: discarded time");
    simulate->add_option("--step", sim.step, "Lorenz63: RK4 step");
    simulate->add_option("--eigs", sim.eigs, "OU: comma-separated eigenvalues in (0,1)");
    simulate->add_option("--config", config_path, "JSON file of option values");

    FitArgs fit;
    CLI::App *fitc = app.add_subcommand("fit", "Fit an estimator to a trajectory");
    fitc->add_option("trajectory,--trajectory", fit.trajectory, "Trajectory CSV")->required();
    fitc->add_option("--estimator", fit.estimator, "krr, pcr or rrr")
        ->required()
        ->check(CLI::IsMember({"krr", "pcr", "rrr"}));
    fit.kernel.add(fitc);
    fitc->add_option("--gamma", fit.gamma, "Tikhonov regularization (KRR, RRR)");
    fitc->add_option("--rank", fit.rank, "Rank (PCR, RRR)");
    fitc->add_option("--out", fit.out, "Model JSON");
    fitc->add_option("--config", config_path, "JSON file of option values");

    PredictArgs pred;
    CLI::App *predict = app.add_subcommand("predict", "One-step conditional expectation");
    predict->add_option("model,--model", pred.model, "Model JSON")->required();
    predict->add_option("--x", pred.x, "Comma-separated point");
    predict->add_option("--points", pred.points, "CSV of points (header line)");
    predict->add_option("--observable", pred.observable, "state, cols:i,j or file:path");
    predict->add_option("--out", pred.out, "Output CSV");
    predict->add_option("--config", config_path, "JSON file of option values");

    EigsArgs eig;
    CLI::App *eigs = app.add_subcommand("eigs", "Eigenvalues and eigenfunctions");
    eigs->add_option("model,--model", eig.model, "Model JSON")->required();
    eigs->add_option("--out", eig.out, "Eigenvalue CSV");
    eigs->add_option("--count", eig.count, "Eigenvalues to report for large KRR models");
    eigs->add_option("--eigfun-grid", eig.eigfun_grid, "lo,hi,count grid for 1-D models");
    eigs->add_option("--eigfun-points", eig.eigfun_points, "CSV of evaluation points");
    eigs->add_option("--eigfun-out", eig.eigfun_out, "Eigenfunction CSV");
    eigs->add_option("--config", config_path, "JSON file of option values");

    ForecastArgs fc;
    CLI::App *fore = app.add_subcommand("forecast", "Modal forecast t = 1..T steps ahead");
    fore->add_option("model,--model", fc.model, "Model JSON")->required();
    fore->add_option("--x", fc.x, "Comma-separated initial point");
    fore->add_option("--t", fc.t, "Horizon");
    fore->add_option("--observable", fc.observable, "state, cols:i,j or file:path");
    fore->add_option("--out", fc.out, "Output CSV");
    fore->add_option("--config", config_path, "JSON file of option values");

    ModesArgs md;
    CLI::App *modesc = app.add_subcommand("modes", "Dynamic modes of an observable");
    modesc->add_option("model,--model", md.model, "Model JSON")->required();
    modesc->add_option("--observable", md.observable, "state, cols:i,j or file:path");
    modesc->add_option("--out", md.out, "Output CSV");
    modesc->add_option("--config", config_path, "JSON file of option values");

    BenchArgs bench;
    CLI::App *benchc = app.add_subcommand("bench", "Run an experiment and write reports");
    benchc->add_option("kind,--kind", bench.kind, "eigs or bound")
        ->required()
        ->check(CLI::IsMember({"eigs", "bound"}));
    benchc->add_option("--config", bench.config, "Experiment config JSON");
    benchc->add_option("--out-dir", bench.out_dir, "Directory for report files");
    benchc->add_option("--threads", bench.threads, "Worker threads (0: all cores)");
    benchc->add_option("--seed", bench.seed, "Override the config's master seed");

    try {
        const std::vector<std::string> merged = merge_config(args, app);
        std::vector<const char *> argv = {"koopreg"};
        for (const auto &s : merged) argv.push_back(s.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError &e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitUsage;
        }

        if (simulate->parsed()) return cmd_simulate(sim, simulate, out);
        if (fitc->parsed()) return cmd_fit(fit, fitc, out);
        if (predict->parsed()) return cmd_predict(pred, predict, out);
        if (eigs->parsed()) return cmd_eigs(eig, eigs, out);
        if (fore->parsed()) return cmd_forecast(fc, fore, out);
        if (modesc->parsed()) return cmd_modes(md, modesc, out);
        if (benchc->parsed()) return cmd_bench(bench, out);
        return kExitUsage;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace koopreg::cli

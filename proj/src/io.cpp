#include "koopreg/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace koopreg {

using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string &path, const std::string &content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
}

json read_json_file(const std::string &path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw IoError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::string &path, const json &j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string sidecar_path(const std::string &csv_path, const std::string &suffix) {
    std::filesystem::path p(csv_path);
    p.replace_extension();
    return p.string() + suffix;
}

namespace {

std::vector<std::string> split_commas(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string &field, size_t line_no) {
    size_t b = 0, e = field.size();
    while (b < e && (field[b] == ' ' || field[b] == '\t')) ++b;
    while (e > b && (field[e - 1] == ' ' || field[e - 1] == '\t')) --e;
    double v = 0.0;
    const auto res = std::from_chars(field.data() + b, field.data() + e, v);
    if (b == e || res.ec != std::errc() || res.ptr != field.data() + e) {
        throw IoError("line " + std::to_string(line_no) + ": cannot parse '" + field +
                      "' as a number");
    }
    return v;
}

/// Parses numeric rows; returns rows and the column count.
std::vector<std::vector<double>> parse_rows(std::istream &in, size_t first_line_no,
                                            size_t expected_cols) {
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t line_no = first_line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_commas(line);
        if (expected_cols == 0) expected_cols = fields.size();
        if (fields.size() != expected_cols) {
            throw IoError("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(expected_cols) + " columns, found " +
                          std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto &f : fields) row.push_back(parse_double(f, line_no));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory &traj) {
    std::ostringstream os;
    os << 't';
    for (Eigen::Index j = 0; j < traj.dim(); ++j) os << ",x" << j;
    os << '\n';
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i) {
        os << format_double(static_cast<double>(i) * traj.dt);
        for (Eigen::Index j = 0; j < traj.dim(); ++j) os << ',' << format_double(traj.states(i, j));
        os << '\n';
    }
    return os.str();
}

Trajectory trajectory_from_csv(const std::string &text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw IoError("line 1: empty trajectory file");
    const auto cols = split_commas(header);
    if (cols.size() < 2 || cols[0] != "t") {
        throw IoError("line 1: expected header 't,x0,...'");
    }
    for (size_t j = 1; j < cols.size(); ++j) {
        if (cols[j] != "x" + std::to_string(j - 1)) {
            throw IoError("line 1: column " + std::to_string(j + 1) + " should be named x" +
                          std::to_string(j - 1));
        }
    }
    const auto rows = parse_rows(in, 1, cols.size());
    if (rows.size() < 3) throw IoError("trajectory needs at least 3 states (2 pairs)");
    Trajectory traj;
    traj.states.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(cols.size() - 1));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 1; j < cols.size(); ++j) {
            traj.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = rows[i][j];
        }
    }
    traj.dt = rows[1][0] - rows[0][0];
    if (!(traj.dt > 0.0)) throw IoError("line 3: time column must be increasing");
    traj.meta = json::object();
    return traj;
}

void save_trajectory(const std::string &csv_path, const Trajectory &traj) {
    write_text_file(csv_path, trajectory_to_csv(traj));
    json meta = traj.meta.is_null() ? json::object() : traj.meta;
    meta["dt"] = traj.dt;
    meta["states"] = traj.states.rows();
    meta["dim"] = traj.dim();
    write_json_file(sidecar_path(csv_path), meta);
}

Trajectory load_trajectory(const std::string &csv_path) {
    std::string text = read_text_file(csv_path);
    Trajectory traj;
    try {
        traj = trajectory_from_csv(text);
    } catch (const IoError &e) {
        throw IoError(csv_path + ": " + e.what());
    }
    const std::string meta = sidecar_path(csv_path);
    if (std::filesystem::exists(meta)) traj.meta = read_json_file(meta);
    return traj;
}

Matrix read_matrix_csv(const std::string &path, bool has_header) {
    std::istringstream in(read_text_file(path));
    size_t first = 0;
    if (has_header) {
        std::string header;
        std::getline(in, header);
        first = 1;
    }
    std::vector<std::vector<double>> rows;
    try {
        rows = parse_rows(in, first, 0);
    } catch (const IoError &e) {
        throw IoError(path + ": " + e.what());
    }
    if (rows.empty()) throw IoError(path + ": no data rows");
    Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < rows[i].size(); ++j) {
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return M;
}

std::string matrix_to_csv(const MatrixRef &M, const std::vector<std::string> &header) {
    std::ostringstream os;
    for (size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
    if (!header.empty()) os << '\n';
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? "," : "") << format_double(M(i, j));
        os << '\n';
    }
    return os.str();
}

json matrix_to_json(const MatrixRef &M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json &j, const std::string &what) {
    if (!j.is_array()) throw IoError(what + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Matrix(0, 0);
    if (!j[0].is_array()) throw IoError(what + ": expected an array of rows");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json &row = j[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw IoError(what + ": row " + std::to_string(i) + " has the wrong length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json &v = row[static_cast<size_t>(c)];
            if (!v.is_number()) throw IoError(what + ": non-numeric entry in row " + std::to_string(i));
            M(i, c) = v.get<double>();
        }
    }
    return M;
}

json model_to_json(const FittedEstimator &est) {
    json j;
    j["version"] = kModelVersion;
    j["kind"] = to_string(est.kind);
    j["kernel"] = est.kernel;
    j["gamma"] = est.gamma;
    j["rank"] = est.rank;
    j["X"] = matrix_to_json(est.X);
    j["Y"] = matrix_to_json(est.Y);
    if (est.identity_left()) {
        j["U"] = "identity";
    } else {
        j["U"] = matrix_to_json(est.U);
    }
    j["V"] = matrix_to_json(est.V);
    j["sigma_sq"] = std::vector<double>(est.sigma_sq.data(), est.sigma_sq.data() + est.sigma_sq.size());
    return j;
}

FittedEstimator model_from_json(const json &j) {
    try {
        if (!j.is_object()) throw IoError("model: expected a JSON object");
        for (const char *key : {"version", "kind", "kernel", "gamma", "rank", "X", "Y", "U", "V"}) {
            if (!j.contains(key)) throw IoError(std::string("model: missing field '") + key + "'");
        }
        if (j.at("version").get<int>() != kModelVersion) {
            throw IoError("model: unsupported version " + j.at("version").dump());
        }
        FittedEstimator est;
        est.kind = estimator_kind_from_string(j.at("kind").get<std::string>());
        est.kernel = j.at("kernel").get<KernelSpec>();
        est.gamma = j.at("gamma").get<double>();
        est.rank = j.at("rank").get<Eigen::Index>();
        est.X = matrix_from_json(j.at("X"), "model.X");
        est.Y = matrix_from_json(j.at("Y"), "model.Y");
        est.V = matrix_from_json(j.at("V"), "model.V");
        if (est.identity_left()) {
            if (j.at("U") != "identity") throw IoError("model: KRR expects U = \"identity\"");
        } else {
            est.U = matrix_from_json(j.at("U"), "model.U");
        }
        if (j.contains("sigma_sq")) {
            const auto s = j.at("sigma_sq").get<std::vector<double>>();
            est.sigma_sq = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
        }
        const Eigen::Index n = est.X.rows();
        const Eigen::Index r = est.identity_left() ? n : est.U.cols();
        if (n < 2 || est.Y.rows() != n || est.Y.cols() != est.X.cols() || est.V.rows() != n ||
            est.V.cols() != r || (!est.identity_left() && est.U.rows() != n)) {
            throw IoError("model: inconsistent matrix shapes");
        }
        return est;
    } catch (const json::exception &e) {
        throw IoError(std::string("model: ") + e.what());
    }
}

void save_model(const std::string &path, const FittedEstimator &est) {
    write_text_file(path, model_to_json(est).dump() + "\n");
}

FittedEstimator load_model(const std::string &path) {
    try {
        return model_from_json(read_json_file(path));
    } catch (const IoError &e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace koopreg

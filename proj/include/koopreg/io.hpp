#pragma once

#include <string>

#include <json.hpp>

#include "koopreg/datagen.hpp"
#include "koopreg/estimators.hpp"

namespace koopreg {

/// File could not be read, written or parsed. Parse errors carry the
/// 1-based line number in the message.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip representation is not required; 17 significant
/// digits always reproduce the double exactly.
std::string format_double(double x);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);
nlohmann::json read_json_file(const std::string &path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::string &path, const nlohmann::json &j);

/// "traj.csv" -> "traj.meta.json".
std::string sidecar_path(const std::string &csv_path, const std::string &suffix = ".meta.json");

/// Header `t,x0,...,x{d-1}`, one row per state, t = i * dt.
std::string trajectory_to_csv(const Trajectory &traj);
Trajectory trajectory_from_csv(const std::string &text);
/// Writes the CSV and the meta sidecar.
void save_trajectory(const std::string &csv_path, const Trajectory &traj);
/// Reads the CSV and, when present, the meta sidecar.
Trajectory load_trajectory(const std::string &csv_path);

/// Numeric CSV with a header line (skipped) or none. Every row must have the
/// same number of columns.
Matrix read_matrix_csv(const std::string &path, bool has_header);
std::string matrix_to_csv(const MatrixRef &M, const std::vector<std::string> &header);

nlohmann::json matrix_to_json(const MatrixRef &M);
Matrix matrix_from_json(const nlohmann::json &j, const std::string &what);

/// {version, kind, kernel, gamma, rank, X, Y, U, V, sigma_sq}; U is the
/// string "identity" for KRR.
nlohmann::json model_to_json(const FittedEstimator &est);
FittedEstimator model_from_json(const nlohmann::json &j);
void save_model(const std::string &path, const FittedEstimator &est);
FittedEstimator load_model(const std::string &path);

inline constexpr int kModelVersion = 1;

}  // namespace koopreg

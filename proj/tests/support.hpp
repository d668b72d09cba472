#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "koopreg/linalg.hpp"
#include "koopreg/rng.hpp"

namespace koopreg::testing {

inline Matrix random_matrix(CounterRng &rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix A(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) A(i, j) = rng.normal();
    return A;
}

inline Matrix random_symmetric(CounterRng &rng, Eigen::Index n) {
    const Matrix A = random_matrix(rng, n, n);
    return 0.5 * (A + A.transpose());
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Scratch directory for file-producing tests; wiped on first use.
inline std::filesystem::path scratch_dir(const std::string &name) {
    const char *env = std::getenv("KOOPREG_TEST_TMP");
    std::filesystem::path base = env ? env : std::filesystem::temp_directory_path() / "koopreg_tests";
    std::filesystem::path dir = base / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace koopreg::testing

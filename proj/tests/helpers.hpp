#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "spanel/rng.hpp"
#include "spanel/weights.hpp"

namespace testutil {

inline std::vector<std::string> labels(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("C" + std::to_string(i + 1));
    return out;
}

inline spanel::WeightMatrix weights_from_raw(const Eigen::MatrixXd& raw) {
    return spanel::WeightMatrix(labels(static_cast<int>(raw.rows())), raw);
}

// random symmetric proximity base with positive row sums
inline spanel::WeightMatrix random_weights(int n, spanel::Rng& rng, double density = 0.5) {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform() < density) raw(i, j) = raw(j, i) = rng.uniform(0.1, 2.0);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (raw.row(i).sum() == 0.0) {
            const int j = i == 0 ? 1 : 0;
            raw(i, j) = raw(j, i) = rng.uniform(0.1, 2.0);
        }
    }
    return weights_from_raw(raw);
}

// explicit double-sum oracle for Moran's I: every (i, j) term spelled out
inline double moran_oracle(std::span<const double> z, const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(z.size());
    double z_bar = 0.0;
    for (double v : z) z_bar += v;
    z_bar /= n;
    double w_total = 0.0, cross = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        ss += (z[i] - z_bar) * (z[i] - z_bar);
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            w_total += w(i, j);
            cross += w(i, j) * (z[i] - z_bar) * (z[j] - z_bar);
        }
    }
    return (cross / w_total) / (ss / n);
}

// explicit double-sum oracle for Geary's C
inline double geary_oracle(std::span<const double> z, const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(z.size());
    double z_bar = 0.0;
    for (double v : z) z_bar += v;
    z_bar /= n;
    double w_total = 0.0, diff = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        ss += (z[i] - z_bar) * (z[i] - z_bar);
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            w_total += w(i, j);
            diff += w(i, j) * (z[i] - z[j]) * (z[i] - z[j]);
        }
    }
    return (n - 1.0) * diff / (2.0 * w_total * ss);
}

// scratch directory for file-based tests, unique per name
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("spanel_tests_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil

#pragma once

#include "sarvb/rng.hpp"
#include "sarvb/types.hpp"

#include <filesystem>
#include <string>

namespace test {

inline sarvb::Matrix normal_matrix(sarvb::Index rows, sarvb::Index cols, sarvb::Rng& rng, double sd = 1.0) {
    sarvb::Matrix m(rows, cols);
    for (sarvb::Index c = 0; c < cols; ++c)
        for (sarvb::Index r = 0; r < rows; ++r) m(r, c) = sd * rng.normal();
    return m;
}

inline sarvb::PanelDataset make_panel(const sarvb::Matrix& y, const sarvb::Matrix& x, sarvb::Index k) {
    sarvb::PanelDataset p;
    p.n_units = y.cols();
    p.n_periods = y.rows();
    p.k_regressors = k;
    p.y = y;
    p.x = x;
    for (sarvb::Index i = 0; i < p.n_units; ++i) p.unit_labels.push_back("u" + std::to_string(i + 1));
    for (sarvb::Index t = 0; t < p.n_periods; ++t) p.time_labels.push_back(std::to_string(2000 + t));
    return p;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("sarvb_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double rmse(const sarvb::Matrix& a, const sarvb::Matrix& b) {
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace test

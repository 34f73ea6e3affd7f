#pragma once

#include "ringcal/state.hpp"
#include "ringcal/types.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

namespace testing_util {

/// Perceived state with the predecessor `gap` meters ahead bumper to bumper.
inline ringcal::PerceivedState follow_state(double self_pos, double v_self, double gap, double v_pred,
                                            double half_lengths, double circumference = 0.0) {
    ringcal::PerceivedState s;
    s.self_pos = self_pos;
    s.self_vel = v_self;
    double p = self_pos + gap + half_lengths;
    if (circumference > 0.0) p = std::fmod(p, circumference);
    s.pred = ringcal::NeighborState{p, v_pred};
    return s;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ringcal_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Random symmetric positive definite 3x3 matrix.
inline ringcal::Mat3 random_spd(std::mt19937_64& rng, double floor = 0.01) {
    std::normal_distribution<double> n(0.0, 1.0);
    ringcal::Mat3 b;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b(i, j) = n(rng);
    return 0.2 * b * b.transpose() + floor * ringcal::Mat3::Identity();
}

}  // namespace testing_util

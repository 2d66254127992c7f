// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/lens.hpp"

#include <cmath>
#include <stdexcept>

namespace dfsplat {

LensModel::LensModel(double focal_length_m, double f_number, double focus_distance_m,
                     double pixel_pitch_m)
    : focal_length_m_(focal_length_m),
      f_number_(f_number),
      focus_distance_m_(focus_distance_m),
      pixel_pitch_m_(pixel_pitch_m) {
    if (!(focal_length_m > 0.0))
        throw std::domain_error("LensModel: focal length must be positive");
    if (!(f_number > 0.0))
        throw std::domain_error("LensModel: f-number must be positive");
    if (!(pixel_pitch_m > 0.0))
        throw std::domain_error("LensModel: pixel pitch must be positive");
    if (!(focus_distance_m > focal_length_m))
        throw std::domain_error("LensModel: focus distance must exceed focal length");
}

double LensModel::far_limit_sigma_px() const {
    return focal_length_m_ * focal_length_m_ /
           (2.0 * pixel_pitch_m_ * f_number_ * (focus_distance_m_ - focal_length_m_));
}

LensModel LensModel::with_focus(double focus_distance_m) const {
    return LensModel(focal_length_m_, f_number_, focus_distance_m, pixel_pitch_m_);
}

double coc_radius(const LensModel& lens, double depth_m) {
    if (!(depth_m > 0.0))
        throw std::domain_error("coc_radius: depth must be positive");
    const double fd = lens.focus_distance_m();
    return std::abs(depth_m - fd) / depth_m * lens.far_limit_sigma_px();
}

CocInverse invert_coc(const LensModel& lens, double sigma_px) {
    if (sigma_px < 0.0)
        throw std::domain_error("invert_coc: sigma must be non-negative");
    const double fd = lens.focus_distance_m();
    const double k = sigma_px / lens.far_limit_sigma_px();
    CocInverse out{fd / (1.0 + k), std::nullopt};
    if (k < 1.0)
        out.far_m = fd / (1.0 - k);
    return out;
}

std::vector<std::pair<double, double>> coc_curve(const LensModel& lens,
                                                 double depth_min_m, double depth_max_m,
                                                 int n_samples) {
    if (!(depth_min_m > 0.0) || !(depth_min_m < depth_max_m))
        throw std::domain_error("coc_curve: need 0 < depth_min < depth_max");
    if (n_samples < 2)
        throw std::domain_error("coc_curve: need at least 2 samples");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(n_samples);
    const double step = (depth_max_m - depth_min_m) / (n_samples - 1);
    for (int i = 0; i < n_samples; ++i) {
        const double d = (i == n_samples - 1) ? depth_max_m : depth_min_m + step * i;
        curve.emplace_back(d, coc_radius(lens, d));
    }
    return curve;
}

} // namespace dfsplat

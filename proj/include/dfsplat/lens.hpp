// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace dfsplat {

/// Thin-lens camera optics. All lengths in SI meters; the only place meters
/// turn into pixels is coc_radius, which divides by twice the pixel pitch.
class LensModel {
public:
    LensModel(double focal_length_m, double f_number, double focus_distance_m,
              double pixel_pitch_m);

    double focal_length_m() const { return focal_length_m_; }
    double f_number() const { return f_number_; }
    double focus_distance_m() const { return focus_distance_m_; }
    double pixel_pitch_m() const { return pixel_pitch_m_; }

    /// Aperture diameter A = f / N.
    double aperture_m() const { return focal_length_m_ / f_number_; }

    /// CoC radius in pixels as depth goes to infinity:
    /// sigma_inf = f^2 / (2 p N (F_d - f)).
    double far_limit_sigma_px() const;

    /// Same lens refocused at a different distance.
    LensModel with_focus(double focus_distance_m) const;

private:
    double focal_length_m_;
    double f_number_;
    double focus_distance_m_;
    double pixel_pitch_m_;
};

/// CoC radius in pixels at object depth d:
/// sigma = (|d - F_d| / d) * f^2 / (N (F_d - f)) * 1 / (2p).
/// Zero exactly at d = F_d. Throws std::domain_error for depth <= 0.
double coc_radius(const LensModel& lens, double depth_m);

struct CocInverse {
    double near_m;                 // branch with d < F_d; always exists
    std::optional<double> far_m;   // branch with d > F_d; absent when k >= 1
};

/// Algebraic inverse of coc_radius. With k = sigma / sigma_inf the branches
/// are near = F_d / (1 + k) and far = F_d / (1 - k); the far branch only
/// exists for k < 1. sigma = 0 returns F_d on both branches.
/// Throws std::domain_error for negative sigma.
CocInverse invert_coc(const LensModel& lens, double sigma_px);

/// Uniformly sampled (depth, sigma) curve on [depth_min, depth_max],
/// endpoints included. n_samples >= 2.
std::vector<std::pair<double, double>> coc_curve(const LensModel& lens,
                                                 double depth_min_m,
                                                 double depth_max_m,
                                                 int n_samples);

} // namespace dfsplat

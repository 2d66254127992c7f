// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/image.hpp"

#include <vector>

namespace dfsplat {

/// Square convolution kernel centered on (0,0). Offsets run in
/// [-radius, radius] on both axes.
class Kernel2D {
public:
    Kernel2D() = default;
    explicit Kernel2D(int window);

    int window() const { return window_; }
    int radius() const { return window_ / 2; }

    double& at(int u, int v) {
        return weights_[static_cast<std::size_t>(v + radius()) * window_ + (u + radius())];
    }
    double at(int u, int v) const {
        return weights_[static_cast<std::size_t>(v + radius()) * window_ + (u + radius())];
    }

    double sum() const;

private:
    int window_ = 0;
    std::vector<double> weights_;
};

/// Isotropic Gaussian PSF sampled on the integer grid,
/// G(u,v) = 1/(2 pi sigma^2) exp(-(u^2+v^2)/(2 sigma^2)),
/// then renormalized to sum exactly 1 to compensate window truncation.
/// sigma_px > 0, window odd and >= 3.
Kernel2D gaussian_kernel(double sigma_px, int window);

/// Standard deviation of the composition of two Gaussian blurs:
/// sqrt(sigma0^2 + sigma_add^2).
double compose_blur(double sigma0_px, double sigma_add_px);

/// Blur radius below which the PSF layer treats a pixel as sharp
/// (the sigma * 1_{sigma >= 1} thresholding rule).
inline constexpr double kSigmaThreshold = 1.0;

/// Spatially varying defocus blur. Per output pixel, gathers
/// sum_{u,v} K_{sigma(x,y)}(u,v) * image(x-u, y-v) with replicate-edge
/// padding. Pixels with sigma(x,y) < 1 are copied unchanged. Rows may be
/// processed by several workers; the result is bit-identical to serial.
Image render_defocus(const Image& image, const DefocusMap& defocus, int window = 7,
                     int num_threads = 1);

/// Uniform Gaussian blur with no sigma thresholding (sigma = 0 copies the
/// input). Used where the exact blur level matters, e.g. reblur matching.
Image blur_uniform(const Image& image, double sigma_px, int window = 7);

} // namespace dfsplat

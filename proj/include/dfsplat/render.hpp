// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/gaussians.hpp"
#include "dfsplat/image.hpp"

namespace dfsplat {

/// Alpha ceiling applied to every splat contribution.
inline constexpr double kAlphaClamp = 0.99;
/// Compositing stops once accumulated transmittance falls below this.
inline constexpr double kTransmittanceMin = 1e-4;

struct RenderOptions {
    bool enable_dof = true;
    /// Mahalanobis cutoff radius: a splat contributes only within this
    /// many standard deviations of its center.
    double cutoff_t = 3.0;
    /// Worker count for tile-parallel rasterization. Any value yields
    /// bit-identical output; pixels are compositing-order independent.
    int num_threads = 1;
    int tile_px = 16;
};

struct RenderResult {
    Image color;   // 3-channel, [0,1]
    DepthMap depth; // alpha-blended depth, 0 where nothing was hit
};

/// Rasterizes the scene into the view: projects every Gaussian, optionally
/// convolves each with its CoC blur kernel, sorts front-to-back by center
/// depth (ties by scene index) and alpha-composites color and depth per
/// pixel. Throws std::domain_error on an empty scene.
RenderResult render(const GaussianScene& scene, const CameraView& view,
                    const RenderOptions& options = {});

} // namespace dfsplat

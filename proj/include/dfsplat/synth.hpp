// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/image.hpp"
#include "dfsplat/lens.hpp"

#include <cstdint>
#include <vector>

namespace dfsplat {

/// One focal-stack capture: a defocused image, the lens it was taken with,
/// and (for synthetic stacks) the ground-truth map of raw thin-lens CoC values.
struct FocalStackEntry {
    Image image;
    LensModel lens;
    DefocusMap gt_defocus; // empty when unknown
};

/// Ordered captures of one scene at strictly increasing focus distances.
struct FocalStack {
    std::vector<FocalStackEntry> entries;
    DepthMap gt_depth; // empty when unknown
    Image aif;         // empty when unknown

    int width() const { return entries.empty() ? 0 : entries.front().image.width(); }
    int height() const { return entries.empty() ? 0 : entries.front().image.height(); }

    /// Enforces equal dimensions and strictly increasing focus distances.
    void validate() const;
};

enum class SceneStyle {
    FrontoPlanes, // stacked fronto-parallel planes at discrete depths
    SlantedPlane, // depth linear along x across the configured range
    Spheres,      // textured spheres over a far background
};

struct SynthOptions {
    SceneStyle style = SceneStyle::SlantedPlane;
    double depth_min_m = 1.0;
    double depth_max_m = 6.0;
    int num_planes = 4; // FrontoPlanes / Spheres object count
};

struct SynthScene {
    Image aif;
    DepthMap depth;
};

/// Deterministic textured test scene; identical (width, height, seed, options)
/// produce bit-identical outputs. Dimensions must be >= 16.
SynthScene synth_procedural(int width, int height, std::uint32_t seed,
                            const SynthOptions& options = {});

/// Builds a focal stack from an all-in-focus image and depth map: one entry
/// per focus distance, each rendered through the PSF layer with per-pixel
/// sigma from coc_radius. sigma0_px composes a baseline capture blur into the
/// rendered sigma (the optics' focused-plane blur floor); the stored
/// ground-truth defocus maps remain the raw unthresholded CoC values.
FocalStack synthesize_stack(const Image& aif, const DepthMap& depth,
                            const LensModel& lens_base,
                            const std::vector<double>& focus_distances_m,
                            int window = 7, double sigma0_px = 0.0);

} // namespace dfsplat

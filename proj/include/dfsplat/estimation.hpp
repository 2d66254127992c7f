// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/gaussians.hpp"
#include "dfsplat/image.hpp"
#include "dfsplat/lens.hpp"
#include "dfsplat/losses.hpp"
#include "dfsplat/render.hpp"
#include "dfsplat/synth.hpp"

#include <cstdint>
#include <vector>

namespace dfsplat {

/// Candidate depths for reblur-matching search, plus the per-candidate
/// per-view CoC table filled in against a concrete set of lenses.
struct DepthGrid {
    std::vector<double> depths_m;                // strictly increasing
    std::vector<std::vector<double>> sigma_px;   // [candidate][view], raw thin-lens CoC

    /// n log-spaced candidates over [depth_min, depth_max], endpoints
    /// included. CoC sensitivity is roughly reciprocal in depth, so log
    /// spacing keeps per-cell blur steps comparable.
    static DepthGrid log_spaced(double depth_min_m, double depth_max_m, int n);

    /// Fills sigma_px with coc_radius(lens, depth) for every pair.
    void tabulate(const std::vector<LensModel>& lenses);
};

struct EstimateOptions {
    int patch_px = 8;
    int window = 7;
    /// Patches whose luminance standard deviation stays below this in every
    /// view carry no blur evidence and are flagged low-confidence.
    double texture_min_std = 0.01;
    /// A discrepancy curve whose spread is below this is considered flat,
    /// which also flags the patch low-confidence.
    double flat_curve_eps = 1e-6;
};

struct EstimateResult {
    DepthMap depth;                    // per pixel, bilinear upsample of the patch grid
    std::vector<DefocusMap> defocus;   // per view, coc_radius(lens_j, depth(x))
    int patches_x = 0;
    int patches_y = 0;
    std::vector<double> patch_depth_m;      // [patches_y * patches_x], after filling
    std::vector<int> patch_candidate;       // argmin grid index per patch
    std::vector<std::uint8_t> patch_confident; // 1 where the patch carried evidence
};

/// Depth search by reblur matching: for every candidate depth the stack
/// images are blurred up to the candidate's largest per-view model CoC
/// (composition rule sigma_e = sqrt(sigma_ref^2 - sigma_j^2)) and the
/// candidate minimizing the mean pairwise L1 discrepancy per patch wins.
/// Model CoC values follow the generation-side thresholding, sigma * 1_{sigma>=1}.
/// Low-confidence patches inherit the nearest confident patch's depth.
/// Throws std::domain_error with fewer than 2 views.
EstimateResult estimate_depth_from_stack(const FocalStack& stack, const DepthGrid& grid,
                                         const EstimateOptions& options = {});

/// Per-pixel algebraic CoC inversion: both invert_coc branches are computed
/// and the one nearer the prior wins; the near branch is used when the far
/// branch does not exist or the prior pixel is invalid.
DepthMap invert_defocus_to_depth(const DefocusMap& defocus, const LensModel& lens,
                                 const DepthMap& prior);

/// Which parameter groups a fit adjusts.
struct ParamMask {
    bool position = true;
    bool scale = true;
    bool rotation = true;
    bool opacity = true;
    bool color = true;
    bool focus = false; // per-view lens focus distance
};

/// Descent step and central-difference probe size of one parameter group.
struct GroupConfig {
    double step;
    double h;
};

struct FitConfig {
    int iterations = 100;
    GroupConfig position{0.1, 1e-3};
    GroupConfig scale{0.1, 1e-3};
    GroupConfig rotation{0.1, 1e-3};
    GroupConfig opacity{0.1, 1e-3};
    GroupConfig color{0.1, 1e-3};
    GroupConfig focus{0.5, 1e-3};
    LossWeights weights;
    ParamMask optimize;
    int defocus_patch_px = 16;
    int max_halvings = 5;
    RenderOptions render; // DoF stays on so blur gradients reach the lens
};

/// One training view: camera (with its own lens focus) plus the target image.
struct FitView {
    CameraView view;
    Image target;
};

/// Loss components of one evaluation point.
struct TraceRow {
    double total;
    double defocus;
    double blur;
    double recon;
};

struct FitResult {
    GaussianScene scene;           // fitted primitives; poses untouched
    std::vector<CameraView> views; // per-view lenses reflect fitted focus
    std::vector<TraceRow> trace;   // initial row plus one per iteration
};

/// The fit objective at one point: DoF renders of every view feed
/// recon_loss against the targets and blur_loss directly; the defocus term
/// pairs consecutive views' defocus maps derived from rendered depth through
/// the thin-lens CoC model. Terms with zero weight are skipped.
TraceRow evaluate_fit_losses(const GaussianScene& scene,
                             const std::vector<FitView>& views, const FitConfig& cfg);

/// Joint scene/lens fitting by gradient-sign descent with per-parameter
/// adaptive steps; gradients come from central finite differences over the
/// unmasked parameter groups. Quaternions are
/// renormalized and opacity/color clamped after every step. Backtracking
/// halves the step on a loss increase (at most max_halvings times) and
/// reverts the iteration when no decrease is found, so the returned trace is
/// non-increasing. Throws std::runtime_error on a non-finite loss.
FitResult fit_scene(const GaussianScene& scene, const std::vector<FitView>& views,
                    const FitConfig& cfg);

struct RefineOptions {
    double lambda_data = 1.0;
    double lambda_smooth = 0.1;
    int sweeps = 30;
};

/// Variational depth refinement: the analytic defocus depth (branch picked
/// by the splat-depth prior) or the supplied ground truth is the data
/// target, and per-pixel coordinate descent minimizes
/// lambda_data * mean|D - T| + lambda_smooth * smoothness_loss(D, guide)
/// by weighted-median updates. Returns the refined depth map.
DepthMap refine_depth(const DepthMap& depth_splat, const DefocusMap& defocus,
                      const LensModel& lens, const Image& guide,
                      const DepthMap* gt = nullptr, const RefineOptions& options = {});

} // namespace dfsplat

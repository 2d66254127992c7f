// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/image.hpp"

namespace dfsplat {

/// Weights of the joint objective and its sub-terms. The total-loss
/// weighting is deployment-specific; these defaults are declared
/// configuration, not constants of the method.
struct LossWeights {
    double mu_defocus = 1.0;
    double mu_blur = 0.01;
    double mu_recon = 1.0;
    double alpha_ssim = 0.2;
    double beta_blur = 0.01;
};

/// Mean over non-overlapping patch_px x patch_px patches of the negative
/// cosine similarity between co-located patches. Range [-1, 1]; a pair with
/// a zero-norm member contributes 0. patch_px must divide both dimensions.
double defocus_loss(const DefocusMap& d1, const DefocusMap& d2, int patch_px = 16);

/// Sharpness objective: -beta * log(sum (laplacian)^2 / (M - mu^2) + eps)
/// with M the pixel count and mu the mean value; the 4-neighbor Laplacian is
/// evaluated with replicate borders. 3-channel input is reduced to luminance.
double blur_loss(const Image& image, double beta = 0.01, double eps = 1e-8);

/// Mean structural similarity, 11x11 Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2 on the [0,1] range, averaged over the valid
/// (fully covered) window positions and over channels.
double ssim(const Image& a, const Image& b);

/// alpha * (1 - SSIM)/2 + (1 - alpha) * mean L1. Zero iff the images match.
double recon_loss(const Image& rendered, const Image& target, double alpha_ssim = 0.2);

/// mu1 * L_defocus + mu2 * L_blur + mu3 * L_recon.
double total_loss(double l_defocus, double l_blur, double l_recon, const LossWeights& w);

/// Mean |(D_splat + D_res) - D_gt| over pixels where the ground truth is
/// valid. Throws when no pixel is valid.
double residual_loss(const DepthMap& depth_splat, const DepthMap& depth_residual,
                     const DepthMap& depth_gt);

/// Edge-aware smoothness: mean over forward differences of
/// |dD| * exp(-|dI|), guide gradients taken on luminance.
double smoothness_loss(const DepthMap& depth, const Image& guide);

struct DepthMetrics {
    double rmse;
    double absrel;
    double delta1;
    double delta2;
    double delta3;
};

/// Standard depth-benchmark metrics over the intersection of the valid
/// masks (> 0 in both maps). delta_k thresholds are 1.25^k.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt);

} // namespace dfsplat

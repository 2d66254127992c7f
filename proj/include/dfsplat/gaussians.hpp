// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/lens.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <optional>
#include <vector>

namespace dfsplat {

/// Anisotropic 3D Gaussian primitive with degree-0 (view-independent) color.
struct Gaussian3D {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    double opacity = 1.0;
    Eigen::Vector3d color = Eigen::Vector3d::Ones();

    /// Sigma = R diag(s^2) R^T; symmetric positive definite for s > 0.
    Eigen::Matrix3d covariance() const;

    /// Throws std::domain_error on invariant violations (unit quaternion,
    /// positive scales, opacity and color in [0,1]).
    void validate() const;
};

struct CameraIntrinsics {
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
};

/// World-to-camera rigid transform: x_cam = R * x_world + t.
struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct CameraView {
    CameraIntrinsics intrinsics;
    Pose pose;
    LensModel lens{0.05, 2.0, 2.0, 1e-5};
};

/// Scene file contents: shared camera and lens, one pose per view, and the
/// Gaussian primitives.
struct GaussianScene {
    CameraIntrinsics camera;
    LensModel lens{0.05, 2.0, 2.0, 1e-5};
    std::vector<Pose> poses;
    std::vector<Gaussian3D> gaussians;

    CameraView view(std::size_t pose_index) const;
    CameraView view(std::size_t pose_index, const LensModel& lens_override) const;
};

/// Screen-space footprint of one projected Gaussian.
struct Splat2D {
    Eigen::Vector2d mean_px = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov_px2 = Eigen::Matrix2d::Identity();
    double depth_m = 0.0;
    double coc_sigma_px = 0.0;
    double opacity = 1.0;
    Eigen::Vector3d color = Eigen::Vector3d::Ones();
};

/// Camera-space z below which a Gaussian is culled rather than projected.
inline constexpr double kNearPlane = 1e-4;

/// Projects one Gaussian into screen space with the affine approximation of
/// perspective projection: cov2d = J R Sigma R^T J^T with J evaluated at the
/// camera-space center. Returns nullopt when the center is at or behind the
/// near plane. coc_sigma is the thin-lens CoC radius at the center depth.
std::optional<Splat2D> project(const Gaussian3D& g, const CameraView& view);

/// Depth-of-field convolution in screen space: adds a * I to the covariance
/// with a = sigma^2 / (2 ln 4) and rescales opacity by
/// sqrt(det cov / det (cov + aI)) so the splat's total mass is unchanged.
/// No-op when the CoC radius is below the 1-pixel threshold.
Splat2D blur_splat(const Splat2D& splat);

} // namespace dfsplat

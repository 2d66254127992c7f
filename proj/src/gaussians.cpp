// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/gaussians.hpp"

#include "dfsplat/psf.hpp"

#include <cmath>
#include <stdexcept>

namespace dfsplat {

Eigen::Matrix3d Gaussian3D::covariance() const {
    const Eigen::Matrix3d r = rotation.toRotationMatrix();
    return r * scale.cwiseProduct(scale).asDiagonal() * r.transpose();
}

void Gaussian3D::validate() const {
    if (std::abs(rotation.norm() - 1.0) > 1e-9)
        throw std::domain_error("Gaussian3D: quaternion must be unit length");
    if (!(scale.minCoeff() > 0.0))
        throw std::domain_error("Gaussian3D: scale components must be positive");
    if (opacity < 0.0 || opacity > 1.0)
        throw std::domain_error("Gaussian3D: opacity must be in [0,1]");
    if (color.minCoeff() < 0.0 || color.maxCoeff() > 1.0)
        throw std::domain_error("Gaussian3D: color must be in [0,1]");
}

CameraView GaussianScene::view(std::size_t pose_index) const {
    return view(pose_index, lens);
}

CameraView GaussianScene::view(std::size_t pose_index, const LensModel& lens_override) const {
    if (pose_index >= poses.size())
        throw std::domain_error("GaussianScene: pose index out of range");
    return CameraView{camera, poses[pose_index], lens_override};
}

std::optional<Splat2D> project(const Gaussian3D& g, const CameraView& view) {
    const Eigen::Vector3d t = view.pose.rotation * g.mean + view.pose.translation;
    if (t.z() <= kNearPlane)
        return std::nullopt;

    const double z = t.z();
    const double fx = view.intrinsics.fx;
    const double fy = view.intrinsics.fy;

    Splat2D s;
    s.mean_px = {fx * t.x() / z + view.intrinsics.cx,
                 fy * t.y() / z + view.intrinsics.cy};

    Eigen::Matrix<double, 2, 3> jac;
    jac << fx / z, 0.0, -fx * t.x() / (z * z),
           0.0, fy / z, -fy * t.y() / (z * z);
    const Eigen::Matrix<double, 2, 3> jw = jac * view.pose.rotation;
    s.cov_px2 = jw * g.covariance() * jw.transpose();
    s.depth_m = z;
    s.coc_sigma_px = coc_radius(view.lens, z);
    s.opacity = g.opacity;
    s.color = g.color;
    return s;
}

Splat2D blur_splat(const Splat2D& splat) {
    if (splat.coc_sigma_px < kSigmaThreshold)
        return splat;
    Splat2D out = splat;
    const double a = splat.coc_sigma_px * splat.coc_sigma_px / (2.0 * std::log(4.0));
    out.cov_px2 = splat.cov_px2 + a * Eigen::Matrix2d::Identity();
    out.opacity = splat.opacity *
                  std::sqrt(splat.cov_px2.determinant() / out.cov_px2.determinant());
    return out;
}

} // namespace dfsplat

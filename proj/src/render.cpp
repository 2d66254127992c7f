// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

namespace dfsplat {

namespace {

struct PreparedSplat {
    Eigen::Vector2d mean;
    Eigen::Matrix2d inv_cov;
    double depth;
    double alpha_base; // opacity, folded clamp happens per pixel
    Eigen::Vector3d color;
    int x0, x1, y0, y1; // inclusive cutoff bounding box
};

void composite_tile(const std::vector<PreparedSplat>& splats,
                    const std::vector<int>& tile_list, double cutoff_sq, Image& color,
                    DepthMap& depth, int px0, int px1, int py0, int py1) {
    for (int y = py0; y < py1; ++y) {
        for (int x = px0; x < px1; ++x) {
            double transmittance = 1.0;
            double r = 0.0, g = 0.0, b = 0.0, d = 0.0;
            for (int idx : tile_list) {
                const PreparedSplat& s = splats[idx];
                if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1)
                    continue;
                const Eigen::Vector2d delta(x - s.mean.x(), y - s.mean.y());
                const double maha_sq = delta.dot(s.inv_cov * delta);
                if (maha_sq > cutoff_sq)
                    continue;
                const double alpha =
                    std::min(s.alpha_base * std::exp(-0.5 * maha_sq), kAlphaClamp);
                const double w = transmittance * alpha;
                r += w * s.color.x();
                g += w * s.color.y();
                b += w * s.color.z();
                d += w * s.depth;
                transmittance *= 1.0 - alpha;
                if (transmittance < kTransmittanceMin)
                    break;
            }
            color.at(x, y, 0) = static_cast<float>(r);
            color.at(x, y, 1) = static_cast<float>(g);
            color.at(x, y, 2) = static_cast<float>(b);
            depth.at(x, y) = static_cast<float>(d);
        }
    }
}

} // namespace

RenderResult render(const GaussianScene& scene, const CameraView& view,
                    const RenderOptions& options) {
    if (scene.gaussians.empty())
        throw std::domain_error("render: empty scene");
    const int w = view.intrinsics.width;
    const int h = view.intrinsics.height;
    if (w <= 0 || h <= 0)
        throw std::domain_error("render: camera has no pixels");

    struct Projected {
        Splat2D splat;
        int index;
    };
    std::vector<Projected> visible;
    visible.reserve(scene.gaussians.size());
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        auto s = project(scene.gaussians[i], view);
        if (!s)
            continue;
        if (options.enable_dof)
            *s = blur_splat(*s);
        visible.push_back({*s, static_cast<int>(i)});
    }
    std::sort(visible.begin(), visible.end(), [](const Projected& a, const Projected& b) {
        if (a.splat.depth_m != b.splat.depth_m)
            return a.splat.depth_m < b.splat.depth_m;
        return a.index < b.index;
    });

    const double cutoff_sq = options.cutoff_t * options.cutoff_t;
    std::vector<PreparedSplat> prepared;
    prepared.reserve(visible.size());
    for (const Projected& p : visible) {
        const Eigen::Matrix2d& c = p.splat.cov_px2;
        const double det = c.determinant();
        if (!(det > 0.0) || !std::isfinite(det))
            continue;
        PreparedSplat ps;
        ps.mean = p.splat.mean_px;
        ps.inv_cov << c(1, 1) / det, -c(0, 1) / det, -c(1, 0) / det, c(0, 0) / det;
        ps.depth = p.splat.depth_m;
        ps.alpha_base = p.splat.opacity;
        ps.color = p.splat.color;
        const double rx = options.cutoff_t * std::sqrt(c(0, 0));
        const double ry = options.cutoff_t * std::sqrt(c(1, 1));
        ps.x0 = std::max(0, static_cast<int>(std::floor(ps.mean.x() - rx)));
        ps.x1 = std::min(w - 1, static_cast<int>(std::ceil(ps.mean.x() + rx)));
        ps.y0 = std::max(0, static_cast<int>(std::floor(ps.mean.y() - ry)));
        ps.y1 = std::min(h - 1, static_cast<int>(std::ceil(ps.mean.y() + ry)));
        if (ps.x0 > ps.x1 || ps.y0 > ps.y1)
            continue;
        prepared.push_back(ps);
    }

    RenderResult out{Image(w, h, 3), DepthMap(w, h)};

    const int tile = std::max(1, options.tile_px);
    const int tiles_x = (w + tile - 1) / tile;
    const int tiles_y = (h + tile - 1) / tile;
    const int n_tiles = tiles_x * tiles_y;

    // Per-tile splat lists keep the global depth order.
    std::vector<std::vector<int>> bins(n_tiles);
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        const PreparedSplat& ps = prepared[i];
        for (int ty = ps.y0 / tile; ty <= ps.y1 / tile; ++ty)
            for (int tx = ps.x0 / tile; tx <= ps.x1 / tile; ++tx)
                bins[ty * tiles_x + tx].push_back(static_cast<int>(i));
    }

    auto run_tiles = [&](int t_begin, int t_end) {
        for (int t = t_begin; t < t_end; ++t) {
            const int tx = t % tiles_x;
            const int ty = t / tiles_x;
            composite_tile(prepared, bins[t], cutoff_sq, out.color, out.depth,
                           tx * tile, std::min(w, (tx + 1) * tile), ty * tile,
                           std::min(h, (ty + 1) * tile));
        }
    };

    const int workers = std::clamp(options.num_threads, 1, n_tiles);
    if (workers == 1) {
        run_tiles(0, n_tiles);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i)
            pool.emplace_back(run_tiles, n_tiles * i / workers, n_tiles * (i + 1) / workers);
        for (auto& th : pool)
            th.join();
    }
    return out;
}

} // namespace dfsplat

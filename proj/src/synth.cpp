// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/synth.hpp"

#include "dfsplat/psf.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dfsplat {

void FocalStack::validate() const {
    if (entries.empty())
        throw std::domain_error("FocalStack: no entries");
    for (const auto& e : entries) {
        if (e.image.width() != width() || e.image.height() != height())
            throw std::domain_error("FocalStack: entry dimensions differ");
    }
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (!(entries[i].lens.focus_distance_m() > entries[i - 1].lens.focus_distance_m()))
            throw std::domain_error("FocalStack: focus distances must be strictly increasing");
    }
}

namespace {

double rand_unit(std::mt19937& rng) {
    // 24-bit mantissa draw; avoids distribution objects for bit-stable output.
    return (rng() >> 8) * (1.0 / 16777216.0);
}

double rand_range(std::mt19937& rng, double lo, double hi) {
    return lo + (hi - lo) * rand_unit(rng);
}

// Bilinearly interpolated lattice noise in [0,1].
FloatMap value_noise(int w, int h, int cells, std::mt19937& rng) {
    const int nx = cells + 1;
    const int ny = cells + 1;
    std::vector<float> lattice(static_cast<std::size_t>(nx) * ny);
    for (auto& v : lattice)
        v = static_cast<float>(rand_unit(rng));

    FloatMap out(w, h);
    for (int y = 0; y < h; ++y) {
        const double fy = static_cast<double>(y) / h * cells;
        const int iy = std::min(static_cast<int>(fy), cells - 1);
        const double ty = fy - iy;
        for (int x = 0; x < w; ++x) {
            const double fx = static_cast<double>(x) / w * cells;
            const int ix = std::min(static_cast<int>(fx), cells - 1);
            const double tx = fx - ix;
            const double v00 = lattice[static_cast<std::size_t>(iy) * nx + ix];
            const double v10 = lattice[static_cast<std::size_t>(iy) * nx + ix + 1];
            const double v01 = lattice[static_cast<std::size_t>(iy + 1) * nx + ix];
            const double v11 = lattice[static_cast<std::size_t>(iy + 1) * nx + ix + 1];
            const double v = (v00 * (1 - tx) + v10 * tx) * (1 - ty) +
                             (v01 * (1 - tx) + v11 * tx) * ty;
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

// Multi-octave noise per channel, remapped for strong local contrast so the
// reblur-matching search has texture to work with.
Image textured_base(int w, int h, std::mt19937& rng) {
    Image img(w, h, 3);
    const int octaves[] = {4, 8, 16, 32};
    const double weights[] = {0.35, 0.3, 0.2, 0.15};
    for (int c = 0; c < 3; ++c) {
        FloatMap acc(w, h, 0.0f);
        for (int o = 0; o < 4; ++o) {
            FloatMap n = value_noise(w, h, octaves[o], rng);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    acc.at(x, y) += static_cast<float>(weights[o]) * n.at(x, y);
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = 0.5 + 1.6 * (acc.at(x, y) - 0.5);
                img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
    }
    return img;
}

void apply_tint(Image& img, int x, int y, const double tint[3]) {
    for (int c = 0; c < 3; ++c) {
        const double v = tint[c] * (0.35 + 0.75 * img.at(x, y, c));
        img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
}

} // namespace

SynthScene synth_procedural(int width, int height, std::uint32_t seed,
                            const SynthOptions& options) {
    if (width < 16 || height < 16)
        throw std::domain_error("synth_procedural: dimensions must be >= 16");
    if (!(options.depth_min_m > 0.0) || !(options.depth_min_m < options.depth_max_m))
        throw std::domain_error("synth_procedural: need 0 < depth_min < depth_max");
    if (options.num_planes < 2)
        throw std::domain_error("synth_procedural: need at least 2 planes");

    std::mt19937 rng(seed);
    SynthScene scene;
    scene.aif = textured_base(width, height, rng);
    scene.depth = DepthMap(width, height);

    const double dmin = options.depth_min_m;
    const double dmax = options.depth_max_m;
    const int k = options.num_planes;

    switch (options.style) {
    case SceneStyle::SlantedPlane: {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                scene.depth.at(x, y) = static_cast<float>(
                    dmin + (dmax - dmin) * static_cast<double>(x) / (width - 1));
        break;
    }
    case SceneStyle::FrontoPlanes: {
        std::vector<double> depths(k);
        for (int i = 0; i < k; ++i)
            depths[i] = dmin + (dmax - dmin) * i / (k - 1);
        // Farthest plane is the background.
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                scene.depth.at(x, y) = static_cast<float>(depths[k - 1]);
        // One rectangle per remaining depth, far to near, horizontally
        // disjoint so every plane stays visible.
        for (int i = k - 2; i >= 0; --i) {
            const double slot = static_cast<double>(width) / (k - 1);
            const double cx = slot * (i + 0.5) + rand_range(rng, -0.08, 0.08) * slot;
            const double cy = height * rand_range(rng, 0.35, 0.65);
            const double hx = slot * rand_range(rng, 0.3, 0.42);
            const double hy = height * rand_range(rng, 0.18, 0.35);
            double tint[3] = {rand_range(rng, 0.4, 1.0), rand_range(rng, 0.4, 1.0),
                              rand_range(rng, 0.4, 1.0)};
            const int x0 = std::max(0, static_cast<int>(cx - hx));
            const int x1 = std::min(width - 1, static_cast<int>(cx + hx));
            const int y0 = std::max(0, static_cast<int>(cy - hy));
            const int y1 = std::min(height - 1, static_cast<int>(cy + hy));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    scene.depth.at(x, y) = static_cast<float>(depths[i]);
                    apply_tint(scene.aif, x, y, tint);
                }
        }
        break;
    }
    case SceneStyle::Spheres: {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                scene.depth.at(x, y) = static_cast<float>(dmax);
        struct Ball {
            double cx, cy, r, depth, tint[3];
        };
        std::vector<Ball> balls(k);
        const double range = dmax - dmin;
        for (int i = 0; i < k; ++i) {
            Ball& b = balls[i];
            const double slot = static_cast<double>(width) / k;
            b.cx = slot * (i + 0.5) + rand_range(rng, -0.1, 0.1) * slot;
            b.cy = height * rand_range(rng, 0.3, 0.7);
            b.r = std::min(width, height) * rand_range(rng, 0.12, 0.2);
            b.depth = dmin + range * (0.1 + 0.7 * rand_unit(rng));
            for (double& t : b.tint)
                t = rand_range(rng, 0.4, 1.0);
        }
        std::sort(balls.begin(), balls.end(),
                  [](const Ball& a, const Ball& b) { return a.depth > b.depth; });
        for (const Ball& b : balls) {
            const double bulge = 0.06 * range;
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const double dx = x - b.cx;
                    const double dy = y - b.cy;
                    const double rho2 = dx * dx + dy * dy;
                    if (rho2 > b.r * b.r)
                        continue;
                    const double z = b.depth - bulge * std::sqrt(1.0 - rho2 / (b.r * b.r));
                    scene.depth.at(x, y) =
                        static_cast<float>(std::clamp(z, dmin, dmax));
                    apply_tint(scene.aif, x, y, b.tint);
                }
        }
        break;
    }
    }
    return scene;
}

FocalStack synthesize_stack(const Image& aif, const DepthMap& depth,
                            const LensModel& lens_base,
                            const std::vector<double>& focus_distances_m, int window,
                            double sigma0_px) {
    if (aif.width() != depth.width() || aif.height() != depth.height())
        throw std::domain_error("synthesize_stack: image and depth dimensions differ");
    if (focus_distances_m.empty())
        throw std::domain_error("synthesize_stack: no focus distances");
    for (std::size_t i = 0; i < focus_distances_m.size(); ++i) {
        if (!(focus_distances_m[i] > lens_base.focal_length_m()))
            throw std::domain_error("synthesize_stack: focus distance must exceed focal length");
        if (i > 0 && !(focus_distances_m[i] > focus_distances_m[i - 1]))
            throw std::domain_error("synthesize_stack: focus distances must be strictly increasing");
    }

    FocalStack stack;
    stack.aif = aif;
    stack.gt_depth = depth;
    for (double fd : focus_distances_m) {
        const LensModel lens = lens_base.with_focus(fd);
        DefocusMap gt(depth.width(), depth.height());
        DefocusMap to_render(depth.width(), depth.height());
        for (int y = 0; y < depth.height(); ++y)
            for (int x = 0; x < depth.width(); ++x) {
                const float d = depth.at(x, y);
                const double sigma = d > 0.0f ? coc_radius(lens, d) : 0.0;
                gt.at(x, y) = static_cast<float>(sigma);
                to_render.at(x, y) =
                    static_cast<float>(sigma0_px > 0.0 ? compose_blur(sigma0_px, sigma) : sigma);
            }
        FocalStackEntry entry{render_defocus(aif, to_render, window), lens, std::move(gt)};
        stack.entries.push_back(std::move(entry));
    }
    stack.validate();
    return stack;
}

} // namespace dfsplat

// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one test per release criterion, each printing a single
// [ACCEPTANCE] PASS/FAIL line with its runtime. These are closed-loop,
// property-based checks; the unit suites cover the fine-grained cases.

#include "dfsplat/estimation.hpp"
#include "dfsplat/lens.hpp"
#include "dfsplat/losses.hpp"
#include "dfsplat/psf.hpp"
#include "dfsplat/render.hpp"
#include "dfsplat/scene_io.hpp"
#include "dfsplat/synth.hpp"

#include "oracle_helpers.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

using namespace dfsplat;

namespace {

// Prints the verdict line when the criterion's scope closes, after checking
// the runtime budget.
class Criterion {
public:
    Criterion(const char* label, double budget_s)
        : label_(label), budget_s_(budget_s), start_(std::chrono::steady_clock::now()) {}

    ~Criterion() {
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (budget_s_ > 0.0)
            EXPECT_LE(sec, budget_s_) << label_ << " exceeded its runtime budget";
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        const bool ok = info->result() == nullptr || !info->result()->Failed();
        std::printf("[ACCEPTANCE] %s: %s (%.2f s)\n", label_, ok ? "PASS" : "FAIL", sec);
        std::fflush(stdout);
    }

private:
    const char* label_;
    double budget_s_;
    std::chrono::steady_clock::time_point start_;
};

LensModel acceptance_lens() {
    return LensModel(0.05, 2.0, 2.0, 1e-5); // 50 mm f/2 at 2 m, 10 um pixels
}

} // namespace

TEST(Acceptance, C1LensClosedForm) {
    Criterion c("C1 thin-lens CoC closed form and inversion", 1.0);
    const LensModel lens = acceptance_lens();

    EXPECT_EQ(coc_radius(lens, 2.0), 0.0);

    const double f = 0.05;
    const double sigma_inf = f * f / (2.0 * 1e-5 * 2.0 * (2.0 - f));
    EXPECT_NEAR(coc_radius(lens, 1e6), sigma_inf, 1e-3 * sigma_inf);
    EXPECT_DOUBLE_EQ(lens.far_limit_sigma_px(), sigma_inf);

    for (int i = 1; i < 1000; ++i) { // blur shrinks approaching focus from the near side
        const double d0 = 0.02 + (2.0 - 0.02) * (i - 1) / 1000.0;
        const double d1 = 0.02 + (2.0 - 0.02) * i / 1000.0;
        EXPECT_GT(coc_radius(lens, d0), coc_radius(lens, d1));
    }
    for (int i = 1; i < 1000; ++i) { // and grows past it
        const double d0 = 2.0 + 998.0 * (i - 1) / 1000.0;
        const double d1 = 2.0 + 998.0 * i / 1000.0;
        EXPECT_LT(coc_radius(lens, d0), coc_radius(lens, d1));
    }

    for (const double d : {0.3, 0.9, 1.5, 1.99}) {
        const CocInverse inv = invert_coc(lens, coc_radius(lens, d));
        EXPECT_NEAR(inv.near_m, d, 1e-9 * d);
    }
    for (const double d : {2.01, 3.0, 8.0, 100.0}) {
        const CocInverse inv = invert_coc(lens, coc_radius(lens, d));
        ASSERT_TRUE(inv.far_m.has_value()) << "far branch missing at depth " << d;
        EXPECT_NEAR(*inv.far_m, d, 1e-9 * d);
    }
}

TEST(Acceptance, C2CurveShape) {
    Criterion c("C2 CoC curve has a single zero at the focus distance", 1.0);
    // 77 samples on [0.5, 10] give a binary-exact step of 0.125, so one
    // sample lands exactly on the 2 m focus distance.
    const auto curve = coc_curve(acceptance_lens(), 0.5, 10.0, 77);
    ASSERT_EQ(curve.size(), 77u);
    int zeros = 0;
    double zero_depth = -1.0;
    for (const auto& [d, s] : curve) {
        EXPECT_GE(s, 0.0);
        if (s == 0.0) {
            ++zeros;
            zero_depth = d;
        }
    }
    EXPECT_EQ(zeros, 1);
    EXPECT_EQ(zero_depth, 2.0);
}

TEST(Acceptance, C3PsfLayer) {
    Criterion c("C3 PSF layer preservation, impulse, threshold, semigroup", 10.0);

    // Constant images pass through any blur field unchanged.
    const Image flat(24, 20, 3, 0.37f);
    DefocusMap field(24, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x)
            field.at(x, y) = 3.0f * x / 23.0f;
    const Image blurred = render_defocus(flat, field, 7);
    for (const float v : blurred.data())
        EXPECT_NEAR(v, 0.37f, 1e-6);

    // An impulse reproduces the kernel.
    Image impulse(15, 15, 1);
    impulse.at(7, 7) = 1.0f;
    const Image response = render_defocus(impulse, DefocusMap(15, 15, 2.0f), 7);
    const Kernel2D k = gaussian_kernel(2.0, 7);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
            EXPECT_NEAR(response.at(7 + dx, 7 + dy), k.at(dx, dy), 1e-7);

    // Sub-pixel blur radii are thresholded to the identity.
    const Image wave = oracle::wave_image(64, 64, 3);
    EXPECT_EQ(render_defocus(wave, DefocusMap(64, 64, 0.99f), 7).data(), wave.data());

    // Composing two blurs approximates one at sqrt(s1^2 + s2^2).
    const Image tex = oracle::semigroup_texture(64, 64, 3);
    for (const auto& [s1, s2] : std::vector<std::pair<double, double>>{
             {1.0, 1.0}, {1.7, 1.7}, {2.5, 1.0}, {1.3, 2.2}, {2.5, 2.5}}) {
        const Image twice = blur_uniform(blur_uniform(tex, s1, 7), s2, 7);
        const Image once = blur_uniform(tex, compose_blur(s1, s2), 7);
        double linf = 0.0;
        for (std::size_t i = 0; i < twice.data().size(); ++i)
            linf = std::max(linf, std::abs(static_cast<double>(twice.data()[i]) -
                                           once.data()[i]));
        EXPECT_LE(linf, 0.02) << "sigma pair " << s1 << ", " << s2;
    }
}

TEST(Acceptance, C4RendererOracleEquivalence) {
    Criterion c("C4 tiled splatting matches the naive reference", 30.0);
    GaussianScene scene{{64, 64, 70.0, 70.0, 31.5, 31.5},
                        LensModel(0.05, 2.0, 2.0, 5e-5),
                        {Pose{}},
                        oracle::random_gaussians(32, 77)};

    for (const bool dof : {false, true}) {
        RenderOptions opts;
        opts.enable_dof = dof;
        opts.cutoff_t = 6.0; // generous ellipse so truncation stays under the bound
        const RenderResult tiled = render(scene, scene.view(0), opts);
        const oracle::NaivePlanes naive = oracle::naive_render(scene, scene.view(0), dof);
        double linf = 0.0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * 64 + x;
                linf = std::max(linf, std::abs(tiled.color.at(x, y, 0) - naive.r[i]));
                linf = std::max(linf, std::abs(tiled.color.at(x, y, 1) - naive.g[i]));
                linf = std::max(linf, std::abs(tiled.color.at(x, y, 2) - naive.b[i]));
                linf = std::max(linf, std::abs(tiled.depth.at(x, y) - naive.depth[i]));
            }
        EXPECT_LE(linf, 1e-3) << "dof=" << dof;

        // Worker count and tile size must not change a single bit.
        for (const int threads : {2, 3, 8})
            for (const int tile : {16, 7, 64}) {
                RenderOptions v = opts;
                v.num_threads = threads;
                v.tile_px = tile;
                const RenderResult r = render(scene, scene.view(0), v);
                EXPECT_EQ(r.color.data(), tiled.color.data())
                    << threads << " threads, tile " << tile;
                EXPECT_EQ(r.depth.data(), tiled.depth.data())
                    << threads << " threads, tile " << tile;
            }
    }
}

TEST(Acceptance, C5DofConsistency) {
    Criterion c("C5 DoF identity at focus and splat mass invariance", 10.0);

    GaussianScene scene{{33, 33, 40.0, 40.0, 16.0, 16.0},
                        LensModel(0.05, 2.0, 2.0, 5e-5),
                        {Pose{}},
                        {}};
    for (int i = 0; i < 5; ++i) {
        Gaussian3D g;
        g.mean = Eigen::Vector3d(0.08 * (i - 2), -0.05 * (i - 2), 2.0); // exactly in focus
        g.scale = Eigen::Vector3d(0.05, 0.08, 0.06);
        g.opacity = 0.5 + 0.08 * i;
        g.color = Eigen::Vector3d(0.2 * i / 4.0 + 0.1, 0.5, 0.9 - 0.1 * i);
        scene.gaussians.push_back(g);
    }
    RenderOptions with_dof, without_dof;
    with_dof.enable_dof = true;
    without_dof.enable_dof = false;
    const RenderResult a = render(scene, scene.view(0), with_dof);
    const RenderResult b = render(scene, scene.view(0), without_dof);
    EXPECT_EQ(a.color.data(), b.color.data());
    EXPECT_EQ(a.depth.data(), b.depth.data());

    Splat2D s;
    s.cov_px2 << 2.0, 0.3, 0.3, 1.2;
    s.opacity = 0.8;
    for (const double sigma : {1.0, 2.5, 6.0}) {
        s.coc_sigma_px = sigma;
        const Splat2D blurred = blur_splat(s);
        const double mass0 = s.opacity * std::sqrt(s.cov_px2.determinant());
        const double mass1 = blurred.opacity * std::sqrt(blurred.cov_px2.determinant());
        EXPECT_NEAR(mass1 / mass0, 1.0, 1e-9) << "sigma " << sigma;
    }
}

TEST(Acceptance, C6ClosedLoopDepthFromStack) {
    Criterion c("C6 slanted-plane depth recovery from a 5-view stack", 120.0);

    const RunConfig cfg = protocol_config(Protocol::Nyuv2Style);
    SynthOptions so; // slanted plane over [1, 6] m
    const SynthScene scene = synth_procedural(64, 64, 11, so);
    const FocalStack stack =
        synthesize_stack(scene.aif, scene.depth, cfg.lens, cfg.focus_distances_m);
    const DepthGrid grid = DepthGrid::log_spaced(cfg.depth_min_m, cfg.depth_max_m, 64);
    const EstimateResult est = estimate_depth_from_stack(stack, grid);

    const auto nearest_cell = [&](double depth) {
        int best = 0;
        double best_err = std::abs(std::log(grid.depths_m[0] / depth));
        for (std::size_t i = 1; i < grid.depths_m.size(); ++i) {
            const double err = std::abs(std::log(grid.depths_m[i] / depth));
            if (err < best_err) {
                best_err = err;
                best = static_cast<int>(i);
            }
        }
        return best;
    };

    const int patch = 8;
    int textured = 0, within_one_cell = 0;
    for (int pj = 0; pj < est.patches_y; ++pj)
        for (int pi = 0; pi < est.patches_x; ++pi) {
            const int p = pj * est.patches_x + pi;
            if (!est.patch_confident[p])
                continue;
            ++textured;
            double gt_sum = 0.0;
            for (int y = pj * patch; y < (pj + 1) * patch; ++y)
                for (int x = pi * patch; x < (pi + 1) * patch; ++x)
                    gt_sum += scene.depth.at(x, y);
            const double gt_mean = gt_sum / (patch * patch);
            if (std::abs(nearest_cell(est.patch_depth_m[p]) - nearest_cell(gt_mean)) <= 1)
                ++within_one_cell;
        }
    ASSERT_GT(textured, 0);
    EXPECT_GE(within_one_cell, (textured * 9 + 9) / 10)
        << within_one_cell << " of " << textured << " textured patches in tolerance";

    // AbsRel over pixels in confident patches only.
    DepthMap gt_textured(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const int p = (y / patch) * est.patches_x + (x / patch);
            if (est.patch_confident[p])
                gt_textured.at(x, y) = scene.depth.at(x, y);
        }
    const DepthMetrics m = depth_metrics(est.depth, gt_textured);
    EXPECT_LE(m.absrel, 0.05);
}

TEST(Acceptance, C7ClosedLoopJointFit) {
    Criterion c("C7 joint fit recovers perturbed positions and focus", 300.0);

    // Part one: 1% position perturbation, three views, reconstruction only.
    GaussianScene scene{{48, 48, 55.0, 55.0, 23.5, 23.5},
                        LensModel(0.05, 2.0, 2.0, 5e-5),
                        {Pose{}},
                        oracle::random_gaussians(5, 5, 1.4, 2.8)};
    Pose right, up;
    right.translation = Eigen::Vector3d(0.06, 0.0, 0.0);
    up.translation = Eigen::Vector3d(0.0, -0.05, 0.0);
    scene.poses.push_back(right);
    scene.poses.push_back(up);

    FitConfig cfg;
    cfg.iterations = 200;
    cfg.weights.mu_defocus = 0.0;
    cfg.weights.mu_blur = 0.0;
    cfg.weights.mu_recon = 1.0;
    cfg.optimize = ParamMask{true, false, false, false, false, false};

    std::vector<FitView> views;
    for (std::size_t v = 0; v < scene.poses.size(); ++v)
        views.push_back({scene.view(v), render(scene, scene.view(v), cfg.render).color});

    GaussianScene start = scene;
    for (Gaussian3D& g : start.gaussians)
        g.mean *= 1.01;

    const FitResult fit = fit_scene(start, views, cfg);
    ASSERT_EQ(fit.trace.size(), 201u);
    for (std::size_t i = 1; i < fit.trace.size(); ++i)
        EXPECT_LE(fit.trace[i].total, fit.trace[i - 1].total + 1e-15);
    EXPECT_LE(fit.trace.back().recon, 0.1 * fit.trace.front().recon)
        << "initial " << fit.trace.front().recon << " final " << fit.trace.back().recon;

    // Part two: recover each view's focus distance alone.
    GaussianScene focus_scene{{48, 48, 55.0, 55.0, 23.5, 23.5},
                              LensModel(0.05, 2.0, 2.0, 5e-5),
                              {Pose{}},
                              oracle::random_gaussians(5, 19, 1.2, 3.2)};
    const std::vector<double> true_focus{1.6, 2.4};
    FitConfig fcfg;
    fcfg.iterations = 60;
    fcfg.weights.mu_defocus = 0.0;
    fcfg.weights.mu_blur = 0.0;
    fcfg.weights.mu_recon = 1.0;
    fcfg.optimize = ParamMask{false, false, false, false, false, true};

    std::vector<FitView> focus_views;
    for (const double fd : true_focus) {
        const CameraView view = focus_scene.view(0, focus_scene.lens.with_focus(fd));
        focus_views.push_back({focus_scene.view(0, focus_scene.lens.with_focus(2.0)),
                               render(focus_scene, view, fcfg.render).color});
    }
    const FitResult focus_fit = fit_scene(focus_scene, focus_views, fcfg);
    ASSERT_EQ(focus_fit.views.size(), true_focus.size());
    for (std::size_t v = 0; v < true_focus.size(); ++v)
        EXPECT_NEAR(focus_fit.views[v].lens.focus_distance_m(), true_focus[v],
                    0.05 * true_focus[v])
            << "view " << v;
}

TEST(Acceptance, C8LossAndMetricIdentities) {
    Criterion c("C8 loss and metric arithmetic identities", 1.0);

    DefocusMap d(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            d.at(x, y) = 0.5f + 0.1f * x + 0.05f * y;
    EXPECT_NEAR(defocus_loss(d, d, 16), -1.0, 1e-12);

    const Image img = oracle::wave_image(32, 24, 3);
    EXPECT_EQ(recon_loss(img, img, 0.2), 0.0);

    DepthMap gt(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            gt.at(x, y) = 1.0f + 0.3f * x + 0.2f * y;
    const DepthMetrics self = depth_metrics(gt, gt);
    EXPECT_EQ(self.rmse, 0.0);
    EXPECT_EQ(self.absrel, 0.0);
    EXPECT_EQ(self.delta1, 1.0);
    EXPECT_EQ(self.delta2, 1.0);
    EXPECT_EQ(self.delta3, 1.0);

    DepthMap scaled(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            scaled.at(x, y) = static_cast<float>(1.3 * gt.at(x, y));
    const DepthMetrics m13 = depth_metrics(scaled, gt);
    EXPECT_EQ(m13.delta1, 0.0); // 1.3 > 1.25
    EXPECT_EQ(m13.delta2, 1.0); // 1.3 < 1.5625
    EXPECT_EQ(m13.delta3, 1.0);
    EXPECT_NEAR(m13.absrel, 0.3, 1e-6);

    DepthMap pred4(2, 2), gt4(2, 2);
    pred4.at(0, 0) = 1.0f;
    pred4.at(1, 0) = 2.0f;
    pred4.at(0, 1) = 3.0f;
    pred4.at(1, 1) = 6.0f;
    gt4.at(0, 0) = 1.0f;
    gt4.at(1, 0) = 2.0f;
    gt4.at(0, 1) = 4.0f;
    gt4.at(1, 1) = 4.0f;
    EXPECT_DOUBLE_EQ(depth_metrics(pred4, gt4).rmse, std::sqrt(1.25));
}

TEST(Acceptance, C9RefinementImprovesDepth) {
    Criterion c("C9 refinement improves a biased splat depth", 60.0);

    const LensModel lens(0.025, 8.0, 2.0, 1e-5);
    SynthOptions so;
    so.depth_min_m = 1.2;
    so.depth_max_m = 3.2;
    const SynthScene scene = synth_procedural(64, 64, 23, so);

    DepthMap splat(64, 64);
    DefocusMap sigma(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            splat.at(x, y) = 1.05f * scene.depth.at(x, y);
            sigma.at(x, y) = static_cast<float>(coc_radius(lens, scene.depth.at(x, y)));
        }

    const DepthMap refined = refine_depth(splat, sigma, lens, scene.aif);
    const double before = depth_metrics(splat, scene.depth).absrel;
    const double after = depth_metrics(refined, scene.depth).absrel;
    EXPECT_LT(after, before) << "absrel " << before << " -> " << after;
}

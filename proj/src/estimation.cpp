// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/estimation.hpp"

#include "dfsplat/psf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dfsplat {

DepthGrid DepthGrid::log_spaced(double depth_min_m, double depth_max_m, int n) {
    if (!(depth_min_m > 0.0) || !(depth_max_m > depth_min_m))
        throw std::domain_error("DepthGrid: need 0 < depth_min < depth_max");
    if (n < 2)
        throw std::domain_error("DepthGrid: need at least 2 candidates");
    DepthGrid grid;
    grid.depths_m.resize(n);
    const double l0 = std::log(depth_min_m);
    const double l1 = std::log(depth_max_m);
    for (int i = 0; i < n; ++i)
        grid.depths_m[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
    grid.depths_m.front() = depth_min_m;
    grid.depths_m.back() = depth_max_m;
    return grid;
}

void DepthGrid::tabulate(const std::vector<LensModel>& lenses) {
    sigma_px.assign(depths_m.size(), std::vector<double>(lenses.size()));
    for (std::size_t c = 0; c < depths_m.size(); ++c)
        for (std::size_t v = 0; v < lenses.size(); ++v)
            sigma_px[c][v] = coc_radius(lenses[v], depths_m[c]);
}

namespace {

double thresholded(double sigma_px) {
    return sigma_px < kSigmaThreshold ? 0.0 : sigma_px;
}

Image to_single_channel(const FloatMap& m) {
    Image out(m.width(), m.height(), 1);
    out.data() = m.data();
    return out;
}

} // namespace

EstimateResult estimate_depth_from_stack(const FocalStack& stack, const DepthGrid& grid,
                                         const EstimateOptions& options) {
    stack.validate();
    const int views = static_cast<int>(stack.entries.size());
    if (views < 2)
        throw std::domain_error("estimate_depth_from_stack: need at least 2 views");
    if (options.patch_px < 2)
        throw std::domain_error("estimate_depth_from_stack: patch must be >= 2 px");
    const int candidates = static_cast<int>(grid.depths_m.size());
    if (candidates < 2)
        throw std::domain_error("estimate_depth_from_stack: need at least 2 candidates");

    std::vector<LensModel> lenses;
    lenses.reserve(views);
    for (const FocalStackEntry& e : stack.entries)
        lenses.push_back(e.lens);
    DepthGrid g = grid;
    if (g.sigma_px.size() != g.depths_m.size() ||
        (candidates > 0 && g.sigma_px.front().size() != static_cast<std::size_t>(views)))
        g.tabulate(lenses);

    const int w = stack.width();
    const int h = stack.height();
    const int patch = options.patch_px;
    const int px = (w + patch - 1) / patch;
    const int py = (h + patch - 1) / patch;
    const int patches = px * py;
    auto patch_of = [&](int x, int y) { return (y / patch) * px + (x / patch); };

    std::vector<Image> lum(views);
    for (int v = 0; v < views; ++v)
        lum[v] = to_single_channel(stack.entries[v].image.luminance());

    // Texture evidence: per-patch luminance std of the raw stack, best view.
    std::vector<double> patch_std(patches, 0.0);
    {
        std::vector<double> sum(patches), sq(patches);
        std::vector<int> cnt(patches);
        for (int v = 0; v < views; ++v) {
            std::fill(sum.begin(), sum.end(), 0.0);
            std::fill(sq.begin(), sq.end(), 0.0);
            std::fill(cnt.begin(), cnt.end(), 0);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const int p = patch_of(x, y);
                    const double s = lum[v].at(x, y);
                    sum[p] += s;
                    sq[p] += s * s;
                    ++cnt[p];
                }
            for (int p = 0; p < patches; ++p) {
                const double mean = sum[p] / cnt[p];
                const double var = std::max(0.0, sq[p] / cnt[p] - mean * mean);
                patch_std[p] = std::max(patch_std[p], std::sqrt(var));
            }
        }
    }

    // Per candidate: equalize every view to the largest model blur of that
    // candidate, then score cross-view agreement per patch.
    std::vector<double> score(static_cast<std::size_t>(patches) * candidates);
    std::vector<int> patch_px_count(patches, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            ++patch_px_count[patch_of(x, y)];
    const int pairs = views * (views - 1) / 2;

    std::vector<Image> eq(views);
    std::vector<double> acc(patches);
    for (int c = 0; c < candidates; ++c) {
        double sigma_ref = 0.0;
        for (int v = 0; v < views; ++v)
            sigma_ref = std::max(sigma_ref, thresholded(g.sigma_px[c][v]));
        for (int v = 0; v < views; ++v) {
            const double m = thresholded(g.sigma_px[c][v]);
            const double extra = std::sqrt(std::max(0.0, sigma_ref * sigma_ref - m * m));
            eq[v] = blur_uniform(lum[v], extra, options.window);
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int i = 0; i < views; ++i)
            for (int j = i + 1; j < views; ++j) {
                const auto& a = eq[i].data();
                const auto& b = eq[j].data();
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        const std::size_t k = static_cast<std::size_t>(y) * w + x;
                        acc[patch_of(x, y)] += std::abs(static_cast<double>(a[k]) - b[k]);
                    }
            }
        for (int p = 0; p < patches; ++p)
            score[static_cast<std::size_t>(p) * candidates + c] =
                acc[p] / (static_cast<double>(pairs) * patch_px_count[p]);
    }

    EstimateResult result;
    result.patches_x = px;
    result.patches_y = py;
    result.patch_candidate.resize(patches);
    result.patch_confident.resize(patches);
    result.patch_depth_m.resize(patches);
    for (int p = 0; p < patches; ++p) {
        const double* row = &score[static_cast<std::size_t>(p) * candidates];
        int best = 0;
        double lo = row[0], hi = row[0];
        for (int c = 1; c < candidates; ++c) {
            if (row[c] < lo) {
                lo = row[c];
                best = c;
            }
            hi = std::max(hi, row[c]);
        }
        result.patch_candidate[p] = best;
        const bool textured = patch_std[p] >= options.texture_min_std;
        const bool informative = (hi - lo) >= options.flat_curve_eps;
        result.patch_confident[p] = textured && informative ? 1 : 0;
    }

    // Low-confidence patches borrow the nearest confident patch's answer.
    std::vector<int> filled = result.patch_candidate;
    for (int p = 0; p < patches; ++p) {
        if (result.patch_confident[p])
            continue;
        const int pi = p % px, pj = p / px;
        long best_d = std::numeric_limits<long>::max();
        int best_q = -1;
        for (int q = 0; q < patches; ++q) {
            if (!result.patch_confident[q])
                continue;
            const long di = q % px - pi, dj = q / px - pj;
            const long d = di * di + dj * dj;
            if (d < best_d) {
                best_d = d;
                best_q = q;
            }
        }
        if (best_q >= 0)
            filled[p] = result.patch_candidate[best_q];
    }
    for (int p = 0; p < patches; ++p)
        result.patch_depth_m[p] = g.depths_m[filled[p]];

    // Bilinear upsample of the patch grid to pixel resolution.
    result.depth = DepthMap(w, h);
    for (int y = 0; y < h; ++y) {
        double v = (y + 0.5) / patch - 0.5;
        v = std::clamp(v, 0.0, static_cast<double>(py - 1));
        const int j0 = static_cast<int>(v);
        const int j1 = std::min(j0 + 1, py - 1);
        const double tv = v - j0;
        for (int x = 0; x < w; ++x) {
            double u = (x + 0.5) / patch - 0.5;
            u = std::clamp(u, 0.0, static_cast<double>(px - 1));
            const int i0 = static_cast<int>(u);
            const int i1 = std::min(i0 + 1, px - 1);
            const double tu = u - i0;
            const double d00 = result.patch_depth_m[j0 * px + i0];
            const double d10 = result.patch_depth_m[j0 * px + i1];
            const double d01 = result.patch_depth_m[j1 * px + i0];
            const double d11 = result.patch_depth_m[j1 * px + i1];
            const double top = d00 + (d10 - d00) * tu;
            const double bot = d01 + (d11 - d01) * tu;
            result.depth.at(x, y) = static_cast<float>(top + (bot - top) * tv);
        }
    }

    result.defocus.reserve(views);
    for (int v = 0; v < views; ++v) {
        DefocusMap d(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                d.at(x, y) = static_cast<float>(coc_radius(lenses[v], result.depth.at(x, y)));
        result.defocus.push_back(std::move(d));
    }
    return result;
}

DepthMap invert_defocus_to_depth(const DefocusMap& defocus, const LensModel& lens,
                                 const DepthMap& prior) {
    if (!defocus.same_size(prior))
        throw std::domain_error("invert_defocus_to_depth: dimensions differ");
    DepthMap out(defocus.width(), defocus.height());
    for (int y = 0; y < defocus.height(); ++y)
        for (int x = 0; x < defocus.width(); ++x) {
            const CocInverse inv = invert_coc(lens, defocus.at(x, y));
            double d = inv.near_m;
            if (inv.far_m && prior.valid_at(x, y)) {
                const double p = prior.at(x, y);
                if (std::abs(*inv.far_m - p) < std::abs(inv.near_m - p))
                    d = *inv.far_m;
            }
            out.at(x, y) = static_cast<float>(d);
        }
    return out;
}

namespace {

DefocusMap defocus_from_depth(const DepthMap& depth, const LensModel& lens) {
    DefocusMap out(depth.width(), depth.height());
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x) {
            const float d = depth.at(x, y);
            out.at(x, y) = d > 0.0f ? static_cast<float>(coc_radius(lens, d)) : 0.0f;
        }
    return out;
}

} // namespace

TraceRow evaluate_fit_losses(const GaussianScene& scene, const std::vector<FitView>& views,
                             const FitConfig& cfg) {
    if (views.empty())
        throw std::domain_error("evaluate_fit_losses: no views");
    const LossWeights& w = cfg.weights;
    const bool want_defocus = w.mu_defocus != 0.0 && views.size() >= 2;
    const bool want_blur = w.mu_blur != 0.0;
    const bool want_recon = w.mu_recon != 0.0;

    TraceRow row{0.0, 0.0, 0.0, 0.0};
    std::vector<DefocusMap> maps;
    if (want_defocus)
        maps.reserve(views.size());
    for (const FitView& fv : views) {
        const RenderResult r = render(scene, fv.view, cfg.render);
        if (want_recon)
            row.recon += recon_loss(r.color, fv.target, w.alpha_ssim);
        if (want_blur)
            row.blur += blur_loss(r.color, w.beta_blur);
        if (want_defocus)
            maps.push_back(defocus_from_depth(r.depth, fv.view.lens));
    }
    row.recon /= static_cast<double>(views.size());
    row.blur /= static_cast<double>(views.size());
    if (want_defocus) {
        for (std::size_t i = 0; i + 1 < maps.size(); ++i)
            row.defocus += defocus_loss(maps[i], maps[i + 1], cfg.defocus_patch_px);
        row.defocus /= static_cast<double>(maps.size() - 1);
    }
    row.total = total_loss(row.defocus, row.blur, row.recon, w);
    return row;
}

namespace {

enum class Group { Position, Scale, Rotation, Opacity, Color, Focus };

struct ParamRef {
    Group group;
    int entity;
    int comp;
};

struct FitState {
    GaussianScene scene;
    std::vector<FitView> views;
};

double quat_comp(const Eigen::Quaterniond& q, int comp) {
    switch (comp) {
    case 0: return q.w();
    case 1: return q.x();
    case 2: return q.y();
    default: return q.z();
    }
}

void set_quat_comp(Eigen::Quaterniond& q, int comp, double v) {
    switch (comp) {
    case 0: q.w() = v; break;
    case 1: q.x() = v; break;
    case 2: q.y() = v; break;
    default: q.z() = v; break;
    }
}

double get_param(const FitState& s, const ParamRef& r) {
    switch (r.group) {
    case Group::Position: return s.scene.gaussians[r.entity].mean[r.comp];
    case Group::Scale: return s.scene.gaussians[r.entity].scale[r.comp];
    case Group::Rotation: return quat_comp(s.scene.gaussians[r.entity].rotation, r.comp);
    case Group::Opacity: return s.scene.gaussians[r.entity].opacity;
    case Group::Color: return s.scene.gaussians[r.entity].color[r.comp];
    case Group::Focus: return s.views[r.entity].view.lens.focus_distance_m();
    }
    return 0.0;
}

// Writes one scalar back, applying the group's validity clamp. Rotation
// components are written raw; callers renormalize the quaternion after.
void set_param(FitState& s, const ParamRef& r, double v) {
    switch (r.group) {
    case Group::Position:
        s.scene.gaussians[r.entity].mean[r.comp] = v;
        break;
    case Group::Scale:
        s.scene.gaussians[r.entity].scale[r.comp] = std::max(1e-9, v);
        break;
    case Group::Rotation:
        set_quat_comp(s.scene.gaussians[r.entity].rotation, r.comp, v);
        break;
    case Group::Opacity:
        s.scene.gaussians[r.entity].opacity = std::clamp(v, 0.0, 1.0);
        break;
    case Group::Color:
        s.scene.gaussians[r.entity].color[r.comp] = std::clamp(v, 0.0, 1.0);
        break;
    case Group::Focus: {
        const LensModel& lens = s.views[r.entity].view.lens;
        const double lo = lens.focal_length_m() * (1.0 + 1e-6);
        s.views[r.entity].view.lens = lens.with_focus(std::max(lo, v));
        break;
    }
    }
}

void normalize_rotation(FitState& s, int entity) {
    Eigen::Quaterniond& q = s.scene.gaussians[entity].rotation;
    q.normalize();
}

double group_step(const FitConfig& cfg, Group g) {
    switch (g) {
    case Group::Position: return cfg.position.step;
    case Group::Scale: return cfg.scale.step;
    case Group::Rotation: return cfg.rotation.step;
    case Group::Opacity: return cfg.opacity.step;
    case Group::Color: return cfg.color.step;
    case Group::Focus: return cfg.focus.step;
    }
    return 0.0;
}

double group_h(const FitConfig& cfg, Group g) {
    switch (g) {
    case Group::Position: return cfg.position.h;
    case Group::Scale: return cfg.scale.h;
    case Group::Rotation: return cfg.rotation.h;
    case Group::Opacity: return cfg.opacity.h;
    case Group::Color: return cfg.color.h;
    case Group::Focus: return cfg.focus.h;
    }
    return 0.0;
}

void check_group(const GroupConfig& g, const char* name) {
    if (!(g.step > 0.0) || !(g.h > 0.0))
        throw std::domain_error(std::string("fit_scene: non-positive step or h for ") + name);
}

} // namespace

FitResult fit_scene(const GaussianScene& scene, const std::vector<FitView>& views,
                    const FitConfig& cfg) {
    if (scene.gaussians.empty())
        throw std::domain_error("fit_scene: empty scene");
    if (views.empty())
        throw std::domain_error("fit_scene: no views");
    if (cfg.iterations < 1)
        throw std::domain_error("fit_scene: iterations must be >= 1");
    check_group(cfg.position, "position");
    check_group(cfg.scale, "scale");
    check_group(cfg.rotation, "rotation");
    check_group(cfg.opacity, "opacity");
    check_group(cfg.color, "color");
    check_group(cfg.focus, "focus");

    std::vector<ParamRef> refs;
    const int n = static_cast<int>(scene.gaussians.size());
    for (int i = 0; i < n; ++i) {
        if (cfg.optimize.position)
            for (int c = 0; c < 3; ++c)
                refs.push_back({Group::Position, i, c});
        if (cfg.optimize.scale)
            for (int c = 0; c < 3; ++c)
                refs.push_back({Group::Scale, i, c});
        if (cfg.optimize.rotation)
            for (int c = 0; c < 4; ++c)
                refs.push_back({Group::Rotation, i, c});
        if (cfg.optimize.opacity)
            refs.push_back({Group::Opacity, i, 0});
        if (cfg.optimize.color)
            for (int c = 0; c < 3; ++c)
                refs.push_back({Group::Color, i, c});
    }
    if (cfg.optimize.focus)
        for (int v = 0; v < static_cast<int>(views.size()); ++v)
            refs.push_back({Group::Focus, v, 0});
    if (refs.empty())
        throw std::domain_error("fit_scene: no parameter group selected");

    FitState cur{scene, views};
    auto eval = [&cfg](const FitState& s) {
        const TraceRow row = evaluate_fit_losses(s.scene, s.views, cfg);
        if (!std::isfinite(row.total))
            throw std::runtime_error("fit_scene: non-finite loss");
        return row;
    };

    TraceRow base = eval(cur);
    std::vector<TraceRow> trace;
    trace.reserve(cfg.iterations + 1);
    trace.push_back(base);

    std::vector<double> grad(refs.size());
    // Per-parameter step scales adapted from the gradient sign history
    // (resilient-descent style): a sign flip or a failed iteration halves a
    // scale, a clean success in a repeated direction grows it. This keeps
    // weakly observed parameters moving at their own pace instead of being
    // pinned by the stiffest direction.
    std::vector<double> scale(refs.size(), 1.0);
    std::vector<int> prev_sign(refs.size(), 0);
    constexpr double kScaleMin = 1e-8;
    constexpr double kScaleMax = 1e6;
    const auto sgn = [](double v) { return v > 0.0 ? 1 : v < 0.0 ? -1 : 0; };
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        for (std::size_t k = 0; k < refs.size(); ++k) {
            const ParamRef& r = refs[k];
            const double h = group_h(cfg, r.group);
            const double v0 = get_param(cur, r);
            FitState probe = cur;
            set_param(probe, r, v0 + h);
            if (r.group == Group::Rotation)
                normalize_rotation(probe, r.entity);
            const double lp = eval(probe).total;
            probe = cur;
            set_param(probe, r, v0 - h);
            if (r.group == Group::Rotation)
                normalize_rotation(probe, r.entity);
            const double lm = eval(probe).total;
            grad[k] = (lp - lm) / (2.0 * h);
        }

        bool accepted = false;
        for (int attempt = 0; attempt <= cfg.max_halvings && !accepted; ++attempt) {
            const double factor = std::ldexp(1.0, -attempt);
            FitState cand = cur;
            for (std::size_t k = 0; k < refs.size(); ++k) {
                const ParamRef& r = refs[k];
                const double v0 = get_param(cur, r);
                const double delta = scale[k] * group_step(cfg, r.group) * sgn(grad[k]);
                set_param(cand, r, v0 - factor * delta);
            }
            if (cfg.optimize.rotation)
                for (int i = 0; i < n; ++i)
                    normalize_rotation(cand, i);
            const TraceRow row = eval(cand);
            if (row.total <= base.total) {
                cur = std::move(cand);
                base = row;
                accepted = true;
                for (std::size_t k = 0; k < refs.size(); ++k) {
                    const int s = sgn(grad[k]);
                    if (s == 0)
                        continue;
                    if (prev_sign[k] != 0 && s != prev_sign[k])
                        scale[k] = std::max(kScaleMin, scale[k] * 0.5);
                    else if (attempt == 0 && s == prev_sign[k])
                        scale[k] = std::min(kScaleMax, scale[k] * 1.2);
                    if (attempt > 0)
                        scale[k] = std::max(kScaleMin, scale[k] * factor);
                    prev_sign[k] = s;
                }
            }
        }
        if (!accepted) // revert the iteration and retry smaller
            for (double& s : scale)
                s = std::max(kScaleMin, s * 0.5);
        trace.push_back(base);
    }

    FitResult result;
    result.scene = std::move(cur.scene);
    result.views.reserve(cur.views.size());
    for (const FitView& fv : cur.views)
        result.views.push_back(fv.view);
    result.trace = std::move(trace);
    return result;
}

DepthMap refine_depth(const DepthMap& depth_splat, const DefocusMap& defocus,
                      const LensModel& lens, const Image& guide, const DepthMap* gt,
                      const RefineOptions& options) {
    if (!depth_splat.same_size(defocus))
        throw std::domain_error("refine_depth: depth and defocus dimensions differ");
    if (depth_splat.width() != guide.width() || depth_splat.height() != guide.height())
        throw std::domain_error("refine_depth: guide dimensions differ");
    if (gt && !gt->same_size(depth_splat))
        throw std::domain_error("refine_depth: ground-truth dimensions differ");

    const int w = depth_splat.width();
    const int h = depth_splat.height();
    DepthMap target = invert_defocus_to_depth(defocus, lens, depth_splat);
    if (gt) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (gt->valid_at(x, y))
                    target.at(x, y) = gt->at(x, y);
    }

    // Objective weights, matching the means in the loss definitions: the
    // data term averages over pixels, the smoothness term over difference
    // pairs.
    const double n_terms = static_cast<double>(h) * (w - 1) + static_cast<double>(w) * (h - 1);
    const double data_w = options.lambda_data / (static_cast<double>(w) * h);
    const FloatMap lum = guide.luminance();
    FloatMap wx(std::max(w - 1, 0), h);
    FloatMap wy(w, std::max(h - 1, 0));
    if (n_terms > 0.0) {
        const double sw = options.lambda_smooth / n_terms;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 1 < w; ++x)
                wx.at(x, y) =
                    static_cast<float>(sw * std::exp(-std::abs(lum.at(x + 1, y) - lum.at(x, y))));
        for (int y = 0; y + 1 < h; ++y)
            for (int x = 0; x < w; ++x)
                wy.at(x, y) =
                    static_cast<float>(sw * std::exp(-std::abs(lum.at(x, y + 1) - lum.at(x, y))));
    }

    DepthMap depth(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            depth.at(x, y) = depth_splat.valid_at(x, y) ? depth_splat.at(x, y) : target.at(x, y);

    // Gauss-Seidel sweeps of exact per-pixel weighted-median updates.
    for (int sweep = 0; sweep < options.sweeps; ++sweep) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                std::array<std::pair<double, double>, 5> cand; // (value, weight)
                int m = 0;
                cand[m++] = {target.at(x, y), data_w};
                if (x > 0)
                    cand[m++] = {depth.at(x - 1, y), wx.at(x - 1, y)};
                if (x + 1 < w)
                    cand[m++] = {depth.at(x + 1, y), wx.at(x, y)};
                if (y > 0)
                    cand[m++] = {depth.at(x, y - 1), wy.at(x, y - 1)};
                if (y + 1 < h)
                    cand[m++] = {depth.at(x, y + 1), wy.at(x, y)};
                std::sort(cand.begin(), cand.begin() + m);
                double total = 0.0;
                for (int i = 0; i < m; ++i)
                    total += cand[i].second;
                double run = 0.0;
                double pick = cand[m - 1].first;
                for (int i = 0; i < m; ++i) {
                    run += cand[i].second;
                    if (run >= 0.5 * total) {
                        pick = cand[i].first;
                        break;
                    }
                }
                depth.at(x, y) = static_cast<float>(pick);
            }
        }
    }
    return depth;
}

} // namespace dfsplat

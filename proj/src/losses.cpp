// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dfsplat {

double defocus_loss(const DefocusMap& d1, const DefocusMap& d2, int patch_px) {
    if (!d1.same_size(d2))
        throw std::domain_error("defocus_loss: dimensions differ");
    if (patch_px <= 0 || d1.width() % patch_px != 0 || d1.height() % patch_px != 0)
        throw std::domain_error("defocus_loss: patch size must divide both dimensions");

    const int px = d1.width() / patch_px;
    const int py = d1.height() / patch_px;
    double acc = 0.0;
    for (int pj = 0; pj < py; ++pj) {
        for (int pi = 0; pi < px; ++pi) {
            double dot = 0.0, n1 = 0.0, n2 = 0.0;
            for (int y = pj * patch_px; y < (pj + 1) * patch_px; ++y)
                for (int x = pi * patch_px; x < (pi + 1) * patch_px; ++x) {
                    const double a = d1.at(x, y);
                    const double b = d2.at(x, y);
                    dot += a * b;
                    n1 += a * a;
                    n2 += b * b;
                }
            if (n1 > 0.0 && n2 > 0.0)
                acc += -dot / std::sqrt(n1 * n2);
        }
    }
    return acc / (px * py);
}

double blur_loss(const Image& image, double beta, double eps) {
    const FloatMap lum = image.luminance();
    const int w = lum.width();
    const int h = lum.height();
    double energy = 0.0;
    double mean = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = lum.at(x, y);
            const double left = lum.at(std::max(x - 1, 0), y);
            const double right = lum.at(std::min(x + 1, w - 1), y);
            const double up = lum.at(x, std::max(y - 1, 0));
            const double down = lum.at(x, std::min(y + 1, h - 1));
            const double lap = left + right + up + down - 4.0 * c;
            energy += lap * lap;
            mean += c;
        }
    }
    const double m = static_cast<double>(w) * h;
    mean /= m;
    const double denom = m - mean * mean;
    if (denom <= 0.0)
        throw std::domain_error("blur_loss: M - mu^2 must be positive");
    return -beta * std::log(energy / denom + eps);
}

namespace {

// 1-D half of the 11x11 Gaussian window; the 2-D window is its outer
// product, so both passes of the separable filter use these weights.
std::array<double, 11> ssim_window() {
    constexpr double kSigma = 1.5;
    std::array<double, 11> w;
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += w[i];
    }
    for (double& v : w)
        v /= sum;
    return w;
}

} // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_size(b))
        throw std::domain_error("ssim: dimensions differ");
    constexpr int kWin = 11;
    if (a.width() < kWin || a.height() < kWin)
        throw std::domain_error("ssim: image smaller than the 11x11 window");
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    static const std::array<double, 11> win = ssim_window();

    const int wv = a.width() - kWin + 1;  // valid positions per row
    const int hv = a.height() - kWin + 1; // valid rows
    // Five moment planes after the horizontal pass: a, b, a^2, b^2, ab.
    std::vector<double> rows(static_cast<std::size_t>(5) * wv * a.height());

    double acc = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = 0; y < a.height(); ++y) {
            double* r = rows.data() + static_cast<std::size_t>(5) * wv * y;
            for (int x = 0; x < wv; ++x) {
                double m1 = 0.0, m2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
                for (int u = 0; u < kWin; ++u) {
                    const double w = win[u];
                    const double pa = a.at(x + u, y, c);
                    const double pb = b.at(x + u, y, c);
                    m1 += w * pa;
                    m2 += w * pb;
                    s11 += w * pa * pa;
                    s22 += w * pb * pb;
                    s12 += w * pa * pb;
                }
                r[x] = m1;
                r[wv + x] = m2;
                r[2 * wv + x] = s11;
                r[3 * wv + x] = s22;
                r[4 * wv + x] = s12;
            }
        }
        for (int y = 0; y < hv; ++y) {
            for (int x = 0; x < wv; ++x) {
                double mu1 = 0.0, mu2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
                for (int v = 0; v < kWin; ++v) {
                    const double w = win[v];
                    const double* r = rows.data() + static_cast<std::size_t>(5) * wv * (y + v);
                    mu1 += w * r[x];
                    mu2 += w * r[wv + x];
                    s11 += w * r[2 * wv + x];
                    s22 += w * r[3 * wv + x];
                    s12 += w * r[4 * wv + x];
                }
                const double var1 = s11 - mu1 * mu1;
                const double var2 = s22 - mu2 * mu2;
                const double cov = s12 - mu1 * mu2;
                acc += (2.0 * mu1 * mu2 + kC1) * (2.0 * cov + kC2) /
                       ((mu1 * mu1 + mu2 * mu2 + kC1) * (var1 + var2 + kC2));
            }
        }
    }
    return acc / (static_cast<double>(wv) * hv * a.channels());
}

double recon_loss(const Image& rendered, const Image& target, double alpha_ssim) {
    if (!rendered.same_size(target))
        throw std::domain_error("recon_loss: dimensions differ");
    double l1 = 0.0;
    const auto& ra = rendered.data();
    const auto& ta = target.data();
    for (std::size_t i = 0; i < ra.size(); ++i)
        l1 += std::abs(static_cast<double>(ra[i]) - ta[i]);
    l1 /= static_cast<double>(ra.size());
    const double s = alpha_ssim > 0.0 ? ssim(rendered, target) : 0.0;
    return alpha_ssim * (1.0 - s) / 2.0 + (1.0 - alpha_ssim) * l1;
}

double total_loss(double l_defocus, double l_blur, double l_recon, const LossWeights& w) {
    return w.mu_defocus * l_defocus + w.mu_blur * l_blur + w.mu_recon * l_recon;
}

double residual_loss(const DepthMap& depth_splat, const DepthMap& depth_residual,
                     const DepthMap& depth_gt) {
    if (!depth_splat.same_size(depth_residual) || !depth_splat.same_size(depth_gt))
        throw std::domain_error("residual_loss: dimensions differ");
    double acc = 0.0;
    long count = 0;
    for (int y = 0; y < depth_gt.height(); ++y)
        for (int x = 0; x < depth_gt.width(); ++x) {
            if (!depth_gt.valid_at(x, y))
                continue;
            acc += std::abs(static_cast<double>(depth_splat.at(x, y)) +
                            depth_residual.at(x, y) - depth_gt.at(x, y));
            ++count;
        }
    if (count == 0)
        throw std::domain_error("residual_loss: no valid ground-truth pixels");
    return acc / count;
}

double smoothness_loss(const DepthMap& depth, const Image& guide) {
    if (depth.width() != guide.width() || depth.height() != guide.height())
        throw std::domain_error("smoothness_loss: dimensions differ");
    const FloatMap lum = guide.luminance();
    const int w = depth.width();
    const int h = depth.height();
    double acc = 0.0;
    long count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x) {
            const double dd = std::abs(static_cast<double>(depth.at(x + 1, y)) - depth.at(x, y));
            const double di = std::abs(static_cast<double>(lum.at(x + 1, y)) - lum.at(x, y));
            acc += dd * std::exp(-di);
            ++count;
        }
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dd = std::abs(static_cast<double>(depth.at(x, y + 1)) - depth.at(x, y));
            const double di = std::abs(static_cast<double>(lum.at(x, y + 1)) - lum.at(x, y));
            acc += dd * std::exp(-di);
            ++count;
        }
    return count > 0 ? acc / count : 0.0;
}

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
    if (!pred.same_size(gt))
        throw std::domain_error("depth_metrics: dimensions differ");
    double se = 0.0, absrel = 0.0;
    long d1 = 0, d2 = 0, d3 = 0, count = 0;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x) {
            if (!gt.valid_at(x, y) || !pred.valid_at(x, y))
                continue;
            const double p = pred.at(x, y);
            const double g = gt.at(x, y);
            se += (p - g) * (p - g);
            absrel += std::abs(p - g) / g;
            const double ratio = std::max(p / g, g / p);
            if (ratio < 1.25)
                ++d1;
            if (ratio < 1.25 * 1.25)
                ++d2;
            if (ratio < 1.25 * 1.25 * 1.25)
                ++d3;
            ++count;
        }
    if (count == 0)
        throw std::domain_error("depth_metrics: empty valid mask");
    const double n = static_cast<double>(count);
    return {std::sqrt(se / n), absrel / n, d1 / n, d2 / n, d3 / n};
}

} // namespace dfsplat

// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/psf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

namespace dfsplat {

Kernel2D::Kernel2D(int window) : window_(window) {
    weights_.assign(static_cast<std::size_t>(window) * window, 0.0);
}

double Kernel2D::sum() const {
    double s = 0.0;
    for (double w : weights_)
        s += w;
    return s;
}

Kernel2D gaussian_kernel(double sigma_px, int window) {
    if (!(sigma_px > 0.0))
        throw std::domain_error("gaussian_kernel: sigma must be positive");
    if (window < 3 || window % 2 == 0)
        throw std::domain_error("gaussian_kernel: window must be odd and >= 3");

    Kernel2D k(window);
    const int r = k.radius();
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma_px * sigma_px);
    const double norm = 1.0 / (2.0 * std::numbers::pi * sigma_px * sigma_px);
    double sum = 0.0;
    for (int v = -r; v <= r; ++v) {
        for (int u = -r; u <= r; ++u) {
            const double w = norm * std::exp(-(u * u + v * v) * inv_two_sigma2);
            k.at(u, v) = w;
            sum += w;
        }
    }
    for (int v = -r; v <= r; ++v)
        for (int u = -r; u <= r; ++u)
            k.at(u, v) /= sum;
    return k;
}

double compose_blur(double sigma0_px, double sigma_add_px) {
    if (sigma0_px < 0.0 || sigma_add_px < 0.0)
        throw std::domain_error("compose_blur: sigmas must be non-negative");
    return std::hypot(sigma0_px, sigma_add_px);
}

namespace {

// Gather with replicate-edge padding; the kernel is indexed by the output
// pixel, summation order is fixed so parallel row execution stays bit-exact.
void gather_pixel(const Image& in, Image& out, const Kernel2D& k, int x, int y) {
    const int w = in.width();
    const int h = in.height();
    const int c = in.channels();
    const int r = k.radius();
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int v = -r; v <= r; ++v) {
            const int sy = std::clamp(y - v, 0, h - 1);
            for (int u = -r; u <= r; ++u) {
                const int sx = std::clamp(x - u, 0, w - 1);
                acc += k.at(u, v) * in.at(sx, sy, ch);
            }
        }
        out.at(x, y, ch) = static_cast<float>(acc);
    }
}

} // namespace

namespace {

// Each worker owns its kernel cache; kernel construction is deterministic,
// so the per-pixel result does not depend on the row partition.
void render_defocus_rows(const Image& in, const DefocusMap& defocus, Image& out,
                         int window, int y_begin, int y_end) {
    std::unordered_map<float, Kernel2D> cache;
    for (int y = y_begin; y < y_end; ++y) {
        for (int x = 0; x < in.width(); ++x) {
            const float sigma = defocus.at(x, y);
            if (sigma < kSigmaThreshold) {
                for (int ch = 0; ch < in.channels(); ++ch)
                    out.at(x, y, ch) = in.at(x, y, ch);
                continue;
            }
            auto it = cache.find(sigma);
            if (it == cache.end())
                it = cache.emplace(sigma, gaussian_kernel(sigma, window)).first;
            gather_pixel(in, out, it->second, x, y);
        }
    }
}

} // namespace

Image render_defocus(const Image& image, const DefocusMap& defocus, int window,
                     int num_threads) {
    if (image.width() != defocus.width() || image.height() != defocus.height())
        throw std::domain_error("render_defocus: image and defocus dimensions differ");
    if (window < 3 || window % 2 == 0)
        throw std::domain_error("render_defocus: window must be odd and >= 3");

    Image out(image.width(), image.height(), image.channels());
    const int h = image.height();
    const int workers = std::clamp(num_threads, 1, h);
    if (workers == 1) {
        render_defocus_rows(image, defocus, out, window, 0, h);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        const int y0 = h * t / workers;
        const int y1 = h * (t + 1) / workers;
        pool.emplace_back(render_defocus_rows, std::cref(image), std::cref(defocus),
                          std::ref(out), window, y0, y1);
    }
    for (auto& th : pool)
        th.join();
    return out;
}

Image blur_uniform(const Image& image, double sigma_px, int window) {
    if (sigma_px < 0.0)
        throw std::domain_error("blur_uniform: sigma must be non-negative");
    if (sigma_px == 0.0)
        return image;
    const Kernel2D k = gaussian_kernel(sigma_px, window);
    Image out(image.width(), image.height(), image.channels());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            gather_pixel(image, out, k, x, y);
    return out;
}

} // namespace dfsplat

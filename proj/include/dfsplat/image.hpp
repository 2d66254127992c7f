// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace dfsplat {

/// Single-channel float raster, row-major. Shared plumbing for depth and
/// defocus maps and for luminance planes.
class FloatMap {
public:
    FloatMap() = default;
    FloatMap(int width, int height, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_size(const FloatMap& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Per-pixel CoC radius in pixels. Values are finite and >= 0.
class DefocusMap : public FloatMap {
public:
    DefocusMap() = default;
    DefocusMap(int width, int height, float fill = 0.0f) : FloatMap(width, height, fill) {}
    explicit DefocusMap(FloatMap m) : FloatMap(std::move(m)) {}
};

/// Per-pixel depth in meters. Valid pixels are strictly positive; 0 marks
/// an invalid sample.
class DepthMap : public FloatMap {
public:
    static constexpr float kInvalid = 0.0f;

    DepthMap() = default;
    DepthMap(int width, int height, float fill = kInvalid) : FloatMap(width, height, fill) {}
    explicit DepthMap(FloatMap m) : FloatMap(std::move(m)) {}

    bool valid_at(int x, int y) const { return at(x, y) > 0.0f; }
};

/// H x W x C interleaved float image, samples in [0,1]. C is 1 or 3.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    float& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    float at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_size(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               channels_ == other.channels_;
    }

    /// Rec.709 luma for 3-channel images; identity copy for single channel.
    FloatMap luminance() const;

    /// Clamps every sample into [0,1] in place.
    void clamp01();

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

using RasterImage = Image;

} // namespace dfsplat

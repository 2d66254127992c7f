// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace dfsplat {

FloatMap::FloatMap(int width, int height, float fill)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
        throw std::domain_error("FloatMap: dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0)
        throw std::domain_error("Image: dimensions must be positive");
    if (channels != 1 && channels != 3)
        throw std::domain_error("Image: channels must be 1 or 3");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

FloatMap Image::luminance() const {
    FloatMap out(width_, height_);
    if (channels_ == 1) {
        out.data() = data_;
        return out;
    }
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            out.at(x, y) = 0.2126f * at(x, y, 0) + 0.7152f * at(x, y, 1) +
                           0.0722f * at(x, y, 2);
    return out;
}

void Image::clamp01() {
    for (float& v : data_)
        v = std::clamp(v, 0.0f, 1.0f);
}

} // namespace dfsplat

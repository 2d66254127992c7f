// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/image.hpp"

#include <string>

namespace dfsplat {

/// Reads an 8- or 16-bit PNG into a float image in [0,1]. Palette images
/// are expanded to RGB, alpha is dropped, gray stays single-channel.
/// Throws IoError on filesystem or decode failures.
Image read_png(const std::string& path);

/// Writes a grayscale or RGB PNG at 8 or 16 bits per sample; samples are
/// clamped to [0,1] and quantized by rounding. Refuses to overwrite an
/// existing file unless overwrite is set.
void write_png(const std::string& path, const Image& image, int bit_depth = 16,
               bool overwrite = false);

} // namespace dfsplat

// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/png_io.hpp"

#include "dfsplat/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

namespace dfsplat {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Image read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file)
        throw IoError("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }

    // Buffers live outside the setjmp scope so longjmp skips no destructor.
    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, channels = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode " + path);
    }

    png_init_io(png, file.get());
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    if (bit_depth == 16)
        png_set_swap(png); // file is big-endian, host is little-endian
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": unsupported channel count after expansion");
    }

    const std::size_t row_bytes = png_get_rowbytes(png, info);
    pixels.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = pixels.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image out(static_cast<int>(width), static_cast<int>(height), channels);
    const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
    if (bit_depth == 16) {
        const auto* src = reinterpret_cast<const std::uint16_t*>(pixels.data());
        for (std::size_t i = 0; i < samples; ++i)
            out.data()[i] = static_cast<float>(src[i]) / 65535.0f;
    } else {
        for (std::size_t i = 0; i < samples; ++i)
            out.data()[i] = static_cast<float>(pixels[i]) / 255.0f;
    }
    return out;
}

void write_png(const std::string& path, const Image& image, int bit_depth, bool overwrite) {
    if (image.empty())
        throw IoError("write_png: refusing to write an empty image");
    if (bit_depth != 8 && bit_depth != 16)
        throw IoError("write_png: bit depth must be 8 or 16");
    if (!overwrite && std::filesystem::exists(path))
        throw IoError(path + " exists; pass overwrite to replace it");

    const int w = image.width();
    const int h = image.height();
    const int channels = image.channels();
    const std::size_t row_bytes =
        static_cast<std::size_t>(w) * channels * (bit_depth / 8);
    std::vector<png_byte> pixels(row_bytes * h);
    const double peak = bit_depth == 16 ? 65535.0 : 255.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < image.data().size(); ++i) {
        const double v = std::clamp(static_cast<double>(image.data()[i]), 0.0, 1.0);
        const auto q = static_cast<std::uint32_t>(std::lround(v * peak));
        if (bit_depth == 16) {
            pixels[k++] = static_cast<png_byte>(q >> 8); // PNG samples are big-endian
            pixels[k++] = static_cast<png_byte>(q & 0xff);
        } else {
            pixels[k++] = static_cast<png_byte>(q);
        }
    }

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file)
        throw IoError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }

    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = pixels.data() + row_bytes * y;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode " + path);
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, w, h, bit_depth,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace dfsplat

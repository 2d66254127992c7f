// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/pfm.hpp"

#include "dfsplat/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

static_assert(std::endian::native == std::endian::little,
              "PFM I/O assumes a little-endian host");
static_assert(sizeof(float) == 4, "PFM stores 32-bit floats");

namespace dfsplat {

namespace {

// PFM header tokens are separated by arbitrary whitespace; exactly one
// whitespace byte follows the scale before the payload.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF && (c == ' ' || c == '\t' || c == '\r' || c == '\n')) {
    }
    while (c != EOF && c != ' ' && c != '\t' && c != '\r' && c != '\n') {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

} // namespace

FloatMap read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);

    const std::string magic = next_token(in);
    if (magic == "PF")
        throw ParseError(path + ": 3-channel PFM is unsupported, expected single-channel Pf");
    if (magic != "Pf")
        throw ParseError(path + ": not a PFM file (magic '" + magic + "')");

    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        scale = std::stod(next_token(in));
    } catch (const std::exception&) {
        throw ParseError(path + ": malformed PFM header");
    }
    if (width <= 0 || height <= 0)
        throw ParseError(path + ": invalid PFM dimensions");
    if (scale >= 0.0)
        throw ParseError(path + ": big-endian PFM (non-negative scale) is unsupported");

    FloatMap map(width, height);
    for (int y = height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(&map.at(0, y)),
                static_cast<std::streamsize>(width) * sizeof(float));
        if (!in)
            throw ParseError(path + ": truncated PFM payload");
    }
    return map;
}

void write_pfm(const std::string& path, const FloatMap& map, bool overwrite) {
    if (map.empty())
        throw IoError("write_pfm: refusing to write an empty map");
    if (!overwrite && std::filesystem::exists(path))
        throw IoError(path + " exists; pass overwrite to replace it");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path);
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "Pf\n%d %d\n-1.0000\n", map.width(),
                                map.height());
    out.write(header, n);
    for (int y = map.height() - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(map.data().data() +
                                                static_cast<std::size_t>(y) * map.width()),
                  static_cast<std::streamsize>(map.width()) * sizeof(float));
    if (!out)
        throw IoError("short write to " + path);
}

} // namespace dfsplat

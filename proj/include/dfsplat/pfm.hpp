// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/image.hpp"

#include <string>

namespace dfsplat {

/// Reads a single-channel PFM file (magic `Pf`). Only little-endian data
/// (negative scale) is supported; rows are stored bottom-up in the file and
/// returned top-down. Throws IoError on filesystem problems and ParseError
/// on malformed or unsupported headers (including 3-channel `PF`).
FloatMap read_pfm(const std::string& path);

/// Writes a single-channel little-endian PFM file, header
/// `Pf\n<w> <h>\n-1.0000\n` followed by bottom-up float32 rows. Refuses to
/// overwrite an existing file unless overwrite is set.
void write_pfm(const std::string& path, const FloatMap& map, bool overwrite = false);

} // namespace dfsplat

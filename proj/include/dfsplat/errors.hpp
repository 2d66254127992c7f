// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dfsplat {

// Malformed file contents (scene files, manifests, PFM/PNG headers).
// Carries a 1-based line number when the format is line oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_(line) {}

    int line() const { return line_; }

private:
    int line_ = 0;
};

// Filesystem-level failures: missing files, refused overwrites, short reads.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dfsplat

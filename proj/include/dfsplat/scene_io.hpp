// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dfsplat/gaussians.hpp"
#include "dfsplat/lens.hpp"
#include "dfsplat/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dfsplat {

/// Line-oriented scene text format:
///   # comment
///   camera <width> <height> <fx> <fy> <cx> <cy>
///   lens <focal_length_m> <f_number> <focus_distance_m> <pixel_pitch_m>
///   pose <r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz>   (world-to-camera)
///   gaussian <px py pz sx sy sz qw qx qy qz opacity r g b>
/// Exactly one camera and one lens line, at least one pose and one gaussian.
/// Quaternions within 1e-3 of unit norm are renormalized; anything further
/// off is rejected with its line number, as is every other invariant breach.
GaussianScene load_scene(const std::string& path);

/// Writes the same grammar with full double precision so that
/// load_scene(save_scene(s)) reproduces s. Refuses to overwrite without
/// overwrite set.
void save_scene(const std::string& path, const GaussianScene& scene, bool overwrite = false);

/// One focal-stack capture in a manifest. Paths are resolved against the
/// manifest's directory at load time.
struct ManifestEntry {
    std::string image_path;
    std::string depth_path;   // optional, empty when absent
    std::string defocus_path; // optional ground-truth defocus map
    double focus_distance_m = 0.0;
    std::optional<double> focal_length_m; // per-entry lens overrides
    std::optional<double> f_number;
    std::optional<double> pixel_pitch_m;
};

/// Focal-stack manifest, text format:
///   dfstack 1
///   lens f=<m> N=<x> Fd=<m> p=<m>
///   aif <path>
///   depth <path>
///   entry image=<path> Fd=<m> [depth=<path>] [defocus=<path>] [f=] [N=] [p=]
/// Focus distances must be strictly increasing and every referenced file
/// must exist when the manifest is loaded.
struct Manifest {
    int version = 1;
    LensModel lens{0.05, 2.0, 2.0, 1e-5}; // base, overridden per entry
    std::string aif_path;                 // optional
    std::string depth_path;               // optional shared ground truth
    std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest, bool overwrite = false);

/// Loads the images (and any ground-truth maps) a manifest references into
/// a validated FocalStack; each entry's lens is the base lens with the
/// entry's focus distance and overrides applied.
FocalStack load_stack(const std::string& manifest_path);

/// Capture protocols binding depth range and focus distances.
enum class Protocol { Fod500Style, Nyuv2Style, Custom };

struct RunConfig {
    Protocol protocol = Protocol::Nyuv2Style;
    double depth_min_m = 0.5;
    double depth_max_m = 10.0;
    std::vector<double> focus_distances_m;
    LensModel lens{0.025, 8.0, 1.0, 1e-5};
    std::uint32_t seed = 0;
    std::string out_dir;
};

/// Preset constants per protocol: fod500-style uses max depth 3 m with
/// focus distances [0.3, 0.45, 0.75, 1.2, 1.8]; nyuv2-style uses max depth
/// 10 m with focus distances [1, 1.5, 2.5, 4, 6]. Custom starts from the
/// nyuv2-style numbers for the caller to override.
RunConfig protocol_config(Protocol protocol);

/// Accepts "fod500-style", "nyuv2-style" or "custom".
Protocol parse_protocol(const std::string& name);

/// Parses a compact lens spec of the form "f=0.05,N=2,Fd=2,p=1e-5"
/// (meters, dimensionless, meters, meters). All four keys are required.
LensModel parse_lens_spec(const std::string& spec);

} // namespace dfsplat

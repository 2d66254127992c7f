// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0

#include "dfsplat/scene_io.hpp"

#include "dfsplat/errors.hpp"
#include "dfsplat/pfm.hpp"
#include "dfsplat/png_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace dfsplat {

namespace {

std::vector<double> parse_numbers(const std::string& text, int line, std::size_t expected,
                                  const char* what) {
    std::istringstream in(text);
    std::vector<double> out;
    double v;
    while (in >> v)
        out.push_back(v);
    std::string rest;
    if (in.clear(), in >> rest)
        throw ParseError(std::string(what) + ": unexpected token '" + rest + "'", line);
    if (out.size() != expected)
        throw ParseError(std::string(what) + ": expected " + std::to_string(expected) +
                             " numbers, found " + std::to_string(out.size()),
                         line);
    return out;
}

double quat_norm(const Eigen::Quaterniond& q) {
    return std::sqrt(q.w() * q.w() + q.x() * q.x() + q.y() * q.y() + q.z() * q.z());
}

} // namespace

GaussianScene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);

    bool have_camera = false, have_lens = false;
    CameraIntrinsics camera;
    LensModel lens{0.05, 2.0, 2.0, 1e-5};
    std::vector<Pose> poses;
    std::vector<Gaussian3D> gaussians;

    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        std::string text = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::istringstream ls(text);
        std::string kind;
        if (!(ls >> kind))
            continue;
        std::string rest;
        std::getline(ls, rest);

        if (kind == "camera") {
            if (have_camera)
                throw ParseError("duplicate camera line", line);
            const auto v = parse_numbers(rest, line, 6, "camera");
            camera.width = static_cast<int>(v[0]);
            camera.height = static_cast<int>(v[1]);
            camera.fx = v[2];
            camera.fy = v[3];
            camera.cx = v[4];
            camera.cy = v[5];
            if (camera.width <= 0 || camera.height <= 0 || camera.fx <= 0.0 || camera.fy <= 0.0)
                throw ParseError("camera: dimensions and focal lengths must be positive", line);
            have_camera = true;
        } else if (kind == "lens") {
            if (have_lens)
                throw ParseError("duplicate lens line", line);
            const auto v = parse_numbers(rest, line, 4, "lens");
            try {
                lens = LensModel(v[0], v[1], v[2], v[3]);
            } catch (const std::exception& e) {
                throw ParseError(std::string("lens: ") + e.what(), line);
            }
            have_lens = true;
        } else if (kind == "pose") {
            const auto v = parse_numbers(rest, line, 12, "pose");
            Pose pose;
            pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
            pose.translation << v[3], v[7], v[11];
            const Eigen::Matrix3d err =
                pose.rotation.transpose() * pose.rotation - Eigen::Matrix3d::Identity();
            if (err.cwiseAbs().maxCoeff() > 1e-6 || pose.rotation.determinant() < 0.0)
                throw ParseError("pose: rotation is not a proper orthonormal matrix", line);
            poses.push_back(pose);
        } else if (kind == "gaussian") {
            const auto v = parse_numbers(rest, line, 14, "gaussian");
            Gaussian3D g;
            g.mean << v[0], v[1], v[2];
            g.scale << v[3], v[4], v[5];
            g.rotation = Eigen::Quaterniond(v[6], v[7], v[8], v[9]);
            g.opacity = v[10];
            g.color << v[11], v[12], v[13];
            const double norm = quat_norm(g.rotation);
            if (std::abs(norm - 1.0) > 1e-3)
                throw ParseError("gaussian: quaternion norm " + std::to_string(norm) +
                                     " is too far from 1",
                                 line);
            g.rotation.normalize();
            try {
                g.validate();
            } catch (const std::exception& e) {
                throw ParseError(std::string("gaussian: ") + e.what(), line);
            }
            gaussians.push_back(g);
        } else {
            throw ParseError("unknown directive '" + kind + "'", line);
        }
    }

    if (!have_camera)
        throw ParseError(path + ": missing camera line");
    if (!have_lens)
        throw ParseError(path + ": missing lens line");
    if (poses.empty())
        throw ParseError(path + ": no pose defined");
    if (gaussians.empty())
        throw ParseError(path + ": scene has no gaussians");

    GaussianScene scene{camera, lens, std::move(poses), std::move(gaussians)};
    return scene;
}

void save_scene(const std::string& path, const GaussianScene& scene, bool overwrite) {
    if (!overwrite && std::filesystem::exists(path))
        throw IoError(path + " exists; pass overwrite to replace it");
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path);

    char buf[512];
    std::snprintf(buf, sizeof(buf), "camera %d %d %.17g %.17g %.17g %.17g\n",
                  scene.camera.width, scene.camera.height, scene.camera.fx, scene.camera.fy,
                  scene.camera.cx, scene.camera.cy);
    out << buf;
    std::snprintf(buf, sizeof(buf), "lens %.17g %.17g %.17g %.17g\n",
                  scene.lens.focal_length_m(), scene.lens.f_number(),
                  scene.lens.focus_distance_m(), scene.lens.pixel_pitch_m());
    out << buf;
    for (const Pose& p : scene.poses) {
        out << "pose";
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                std::snprintf(buf, sizeof(buf), " %.17g", p.rotation(r, c));
                out << buf;
            }
            std::snprintf(buf, sizeof(buf), " %.17g", p.translation[r]);
            out << buf;
        }
        out << "\n";
    }
    for (const Gaussian3D& g : scene.gaussians) {
        std::snprintf(buf, sizeof(buf),
                      "gaussian %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                      "%.17g %.17g %.17g %.17g\n",
                      g.mean[0], g.mean[1], g.mean[2], g.scale[0], g.scale[1], g.scale[2],
                      g.rotation.w(), g.rotation.x(), g.rotation.y(), g.rotation.z(), g.opacity,
                      g.color[0], g.color[1], g.color[2]);
        out << buf;
    }
    if (!out)
        throw IoError("short write to " + path);
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& text, int line) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size())
            throw ParseError("expected key=value, found '" + tok + "'", line);
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key,
                    int line) {
    const auto it = kv.find(key);
    if (it == kv.end())
        throw ParseError("missing key '" + key + "'", line);
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad number for key '" + key + "': " + it->second, line);
    }
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
}

void require_exists(const std::string& path, int line) {
    if (!std::filesystem::exists(path))
        throw ParseError("referenced file does not exist: " + path, line);
}

} // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    Manifest m;
    bool have_version = false, have_lens = false;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        std::string text = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::istringstream ls(text);
        std::string kind;
        if (!(ls >> kind))
            continue;
        std::string rest;
        std::getline(ls, rest);

        if (!have_version) {
            if (kind != "dfstack")
                throw ParseError("manifest must start with a 'dfstack <version>' line", line);
            int version = 0;
            std::istringstream vs(rest);
            if (!(vs >> version) || version != 1)
                throw ParseError("unsupported manifest version in '" + raw + "'", line);
            m.version = version;
            have_version = true;
        } else if (kind == "lens") {
            const auto kv = parse_kv(rest, line);
            try {
                m.lens = LensModel(parse_double(kv, "f", line), parse_double(kv, "N", line),
                                   parse_double(kv, "Fd", line), parse_double(kv, "p", line));
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw ParseError(std::string("lens: ") + e.what(), line);
            }
            have_lens = true;
        } else if (kind == "aif") {
            std::istringstream ps(rest);
            std::string p;
            if (!(ps >> p))
                throw ParseError("aif: missing path", line);
            m.aif_path = resolve(base, p);
            require_exists(m.aif_path, line);
        } else if (kind == "depth") {
            std::istringstream ps(rest);
            std::string p;
            if (!(ps >> p))
                throw ParseError("depth: missing path", line);
            m.depth_path = resolve(base, p);
            require_exists(m.depth_path, line);
        } else if (kind == "entry") {
            const auto kv = parse_kv(rest, line);
            ManifestEntry e;
            const auto img = kv.find("image");
            if (img == kv.end())
                throw ParseError("entry: missing image=", line);
            e.image_path = resolve(base, img->second);
            require_exists(e.image_path, line);
            e.focus_distance_m = parse_double(kv, "Fd", line);
            if (kv.count("depth")) {
                e.depth_path = resolve(base, kv.at("depth"));
                require_exists(e.depth_path, line);
            }
            if (kv.count("defocus")) {
                e.defocus_path = resolve(base, kv.at("defocus"));
                require_exists(e.defocus_path, line);
            }
            if (kv.count("f"))
                e.focal_length_m = parse_double(kv, "f", line);
            if (kv.count("N"))
                e.f_number = parse_double(kv, "N", line);
            if (kv.count("p"))
                e.pixel_pitch_m = parse_double(kv, "p", line);
            if (!m.entries.empty() &&
                e.focus_distance_m <= m.entries.back().focus_distance_m)
                throw ParseError("entry: focus distances must be strictly increasing", line);
            m.entries.push_back(std::move(e));
        } else {
            throw ParseError("unknown directive '" + kind + "'", line);
        }
    }
    if (!have_version)
        throw ParseError(path + ": empty manifest");
    if (!have_lens)
        throw ParseError(path + ": missing lens line");
    if (m.entries.empty())
        throw ParseError(path + ": no entries");
    return m;
}

void save_manifest(const std::string& path, const Manifest& manifest, bool overwrite) {
    if (!overwrite && std::filesystem::exists(path))
        throw IoError(path + " exists; pass overwrite to replace it");
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path);
    char buf[256];
    out << "dfstack " << manifest.version << "\n";
    std::snprintf(buf, sizeof(buf), "lens f=%.17g N=%.17g Fd=%.17g p=%.17g\n",
                  manifest.lens.focal_length_m(), manifest.lens.f_number(),
                  manifest.lens.focus_distance_m(), manifest.lens.pixel_pitch_m());
    out << buf;
    if (!manifest.aif_path.empty())
        out << "aif " << manifest.aif_path << "\n";
    if (!manifest.depth_path.empty())
        out << "depth " << manifest.depth_path << "\n";
    for (const ManifestEntry& e : manifest.entries) {
        out << "entry image=" << e.image_path;
        std::snprintf(buf, sizeof(buf), " Fd=%.17g", e.focus_distance_m);
        out << buf;
        if (!e.depth_path.empty())
            out << " depth=" << e.depth_path;
        if (!e.defocus_path.empty())
            out << " defocus=" << e.defocus_path;
        if (e.focal_length_m) {
            std::snprintf(buf, sizeof(buf), " f=%.17g", *e.focal_length_m);
            out << buf;
        }
        if (e.f_number) {
            std::snprintf(buf, sizeof(buf), " N=%.17g", *e.f_number);
            out << buf;
        }
        if (e.pixel_pitch_m) {
            std::snprintf(buf, sizeof(buf), " p=%.17g", *e.pixel_pitch_m);
            out << buf;
        }
        out << "\n";
    }
    if (!out)
        throw IoError("short write to " + path);
}

FocalStack load_stack(const std::string& manifest_path) {
    const Manifest m = load_manifest(manifest_path);
    FocalStack stack;
    std::string shared_depth = m.depth_path;
    for (const ManifestEntry& e : m.entries) {
        const double f = e.focal_length_m.value_or(m.lens.focal_length_m());
        const double n = e.f_number.value_or(m.lens.f_number());
        const double p = e.pixel_pitch_m.value_or(m.lens.pixel_pitch_m());
        LensModel lens(f, n, e.focus_distance_m, p);
        FocalStackEntry entry{read_png(e.image_path), lens, DefocusMap()};
        if (!e.defocus_path.empty())
            entry.gt_defocus = DefocusMap(read_pfm(e.defocus_path));
        stack.entries.push_back(std::move(entry));
        if (shared_depth.empty() && !e.depth_path.empty())
            shared_depth = e.depth_path;
    }
    if (!shared_depth.empty())
        stack.gt_depth = DepthMap(read_pfm(shared_depth));
    if (!m.aif_path.empty())
        stack.aif = read_png(m.aif_path);
    stack.validate();
    return stack;
}

RunConfig protocol_config(Protocol protocol) {
    RunConfig cfg;
    cfg.protocol = protocol;
    switch (protocol) {
    case Protocol::Fod500Style:
        cfg.depth_min_m = 0.1;
        cfg.depth_max_m = 3.0;
        cfg.focus_distances_m = {0.3, 0.45, 0.75, 1.2, 1.8};
        cfg.lens = LensModel(0.012, 8.0, cfg.focus_distances_m.front(), 6e-6);
        break;
    case Protocol::Nyuv2Style:
    case Protocol::Custom:
        cfg.depth_min_m = 0.5;
        cfg.depth_max_m = 10.0;
        cfg.focus_distances_m = {1.0, 1.5, 2.5, 4.0, 6.0};
        cfg.lens = LensModel(0.025, 8.0, cfg.focus_distances_m.front(), 1e-5);
        break;
    }
    return cfg;
}

Protocol parse_protocol(const std::string& name) {
    if (name == "fod500-style")
        return Protocol::Fod500Style;
    if (name == "nyuv2-style")
        return Protocol::Nyuv2Style;
    if (name == "custom")
        return Protocol::Custom;
    throw std::domain_error("unknown protocol '" + name +
                            "' (expected fod500-style, nyuv2-style or custom)");
}

LensModel parse_lens_spec(const std::string& spec) {
    std::string text = spec;
    for (char& c : text)
        if (c == ',')
            c = ' ';
    const auto kv = parse_kv(text, 0);
    try {
        return LensModel(parse_double(kv, "f", 0), parse_double(kv, "N", 0),
                         parse_double(kv, "Fd", 0), parse_double(kv, "p", 0));
    } catch (const ParseError& e) {
        throw std::domain_error("bad lens spec '" + spec + "': " + e.what());
    } catch (const std::exception& e) {
        throw std::domain_error("bad lens spec '" + spec + "': " + e.what());
    }
}

} // namespace dfsplat

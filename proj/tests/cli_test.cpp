// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end coverage of the command-line tool through subprocess calls.

#include "dfsplat/estimation.hpp"
#include "dfsplat/pfm.hpp"
#include "dfsplat/png_io.hpp"
#include "dfsplat/scene_io.hpp"

#include "oracle_helpers.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using dfsplat::coc_curve;
using dfsplat::coc_radius;
using dfsplat::DefocusMap;
using dfsplat::DepthMap;
using dfsplat::depth_metrics;
using dfsplat::FloatMap;
using dfsplat::Gaussian3D;
using dfsplat::GaussianScene;
using dfsplat::Image;
using dfsplat::LensModel;
using dfsplat::load_scene;
using dfsplat::Pose;
using dfsplat::read_pfm;
using dfsplat::render;
using dfsplat::RenderResult;
using dfsplat::save_scene;
using dfsplat::write_pfm;
using dfsplat::write_png;

namespace {

constexpr const char* kCli = DFSPLAT_CLI_PATH;

struct TempDir {
    std::filesystem::path root;

    explicit TempDir(const std::string& tag) {
        root = std::filesystem::temp_directory_path() / ("dfsplat_cli_" + tag);
        std::filesystem::remove_all(root);
        std::filesystem::create_directories(root);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(root, ec);
    }
    std::string file(const std::string& name) const { return (root / name).string(); }
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CommandResult run_cli(const TempDir& td, const std::string& args,
                      const std::string& env_prefix = "") {
    const std::string out_file = td.file("_stdout.txt");
    const std::string err_file = td.file("_stderr.txt");
    std::string cmd;
    if (!env_prefix.empty())
        cmd += env_prefix + " ";
    cmd += std::string("\"") + kCli + "\" " + args + " >" + out_file + " 2>" + err_file;
    const int raw = std::system(cmd.c_str());
    CommandResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_text(out_file);
    r.err = read_text(err_file);
    return r;
}

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::set<std::string> dir_filenames(const std::filesystem::path& dir) {
    std::set<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        names.insert(entry.path().filename().string());
    return names;
}

GaussianScene small_scene(int poses = 1) {
    GaussianScene s;
    s.camera = {24, 24, 30.0, 30.0, 11.5, 11.5};
    s.lens = LensModel(0.05, 2.0, 2.0, 5e-5);
    s.poses.resize(poses);
    for (int i = 1; i < poses; ++i)
        s.poses[i].translation = Eigen::Vector3d(0.03 * i, -0.02 * i, 0.0);
    Gaussian3D a;
    a.mean = Eigen::Vector3d(-0.08, 0.05, 1.6);
    a.scale = Eigen::Vector3d(0.06, 0.09, 0.07);
    a.opacity = 0.85;
    a.color = Eigen::Vector3d(0.8, 0.3, 0.2);
    Gaussian3D b;
    b.mean = Eigen::Vector3d(0.1, -0.04, 2.4);
    b.scale = Eigen::Vector3d(0.1, 0.06, 0.08);
    b.opacity = 0.7;
    b.color = Eigen::Vector3d(0.2, 0.6, 0.9);
    s.gaussians = {a, b};
    return s;
}

} // namespace

TEST(Cli, HelpSucceedsAndUsageErrorsExitTwo) {
    TempDir td("usage");
    EXPECT_EQ(run_cli(td, "--help").exit_code, 0);
    EXPECT_EQ(run_cli(td, "synth --definitely-not-a-flag").exit_code, 2);
    EXPECT_EQ(run_cli(td, "").exit_code, 2);
    EXPECT_EQ(run_cli(td, "render").exit_code, 2); // missing required --scene
}

TEST(Cli, SynthIsByteDeterministicAcrossRuns) {
    TempDir td("synth_determinism");
    const std::string base =
        "synth --protocol nyuv2-style --style slanted-plane --width 32 --height 32 --seed 7";
    const CommandResult r1 = run_cli(td, base + " --out " + td.file("a"));
    ASSERT_EQ(r1.exit_code, 0) << r1.err;
    EXPECT_NE(r1.out.find("wrote 5 views"), std::string::npos) << r1.out;
    const CommandResult r2 = run_cli(td, base + " --out " + td.file("b"));
    ASSERT_EQ(r2.exit_code, 0) << r2.err;

    const auto names_a = dir_filenames(td.file("a"));
    const auto names_b = dir_filenames(td.file("b"));
    EXPECT_EQ(names_a, names_b);
    EXPECT_EQ(names_a.size(), 13u); // aif, gt depth, manifest, 5 views, 5 defocus maps
    for (const std::string& name : names_a)
        EXPECT_EQ(read_text(td.file("a/" + name)), read_text(td.file("b/" + name)))
            << name << " differs between identically seeded runs";
}

TEST(Cli, SynthHonorsTheOutDirEnvironmentVariable) {
    TempDir td("synth_env");
    const CommandResult r =
        run_cli(td, "synth --width 16 --height 16 --seed 1",
                "DFSPLAT_OUT_DIR=" + td.file("from_env"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(td.file("from_env/stack.txt")));

    // Without either --out or the variable the command must fail cleanly.
    const CommandResult bare =
        run_cli(td, "synth --width 16 --height 16", "DFSPLAT_OUT_DIR=");
    EXPECT_EQ(bare.exit_code, 1);
    EXPECT_NE(bare.err.find("output directory"), std::string::npos) << bare.err;
}

TEST(Cli, SynthRefusesToOverwriteWithoutForce) {
    TempDir td("synth_guard");
    const std::string base = "synth --width 16 --height 16 --seed 2 --out " + td.file("out");
    ASSERT_EQ(run_cli(td, base).exit_code, 0);
    const CommandResult again = run_cli(td, base);
    EXPECT_EQ(again.exit_code, 1);
    EXPECT_NE(again.err.find("exists"), std::string::npos) << again.err;
    EXPECT_EQ(run_cli(td, base + " --force").exit_code, 0);
}

TEST(Cli, RenderWritesPerViewColorAndDepth) {
    TempDir td("render");
    save_scene(td.file("scene.txt"), small_scene(2));

    const CommandResult all =
        run_cli(td, "render --scene " + td.file("scene.txt") + " --out " + td.file("out"));
    ASSERT_EQ(all.exit_code, 0) << all.err;
    EXPECT_NE(all.out.find("rendered 2 views"), std::string::npos);
    for (const char* name : {"color_00.png", "color_01.png", "depth_00.pfm", "depth_01.pfm"})
        EXPECT_TRUE(std::filesystem::exists(td.file(std::string("out/") + name))) << name;

    const CommandResult one = run_cli(td, "render --scene " + td.file("scene.txt") +
                                              " --view 1 --no-dof --out " + td.file("one"));
    ASSERT_EQ(one.exit_code, 0) << one.err;
    EXPECT_TRUE(std::filesystem::exists(td.file("one/color_01.png")));
    EXPECT_FALSE(std::filesystem::exists(td.file("one/color_00.png")));

    const CommandResult oob = run_cli(td, "render --scene " + td.file("scene.txt") +
                                              " --view 5 --out " + td.file("oob"));
    EXPECT_EQ(oob.exit_code, 1);
    EXPECT_NE(oob.err.find("out of range"), std::string::npos) << oob.err;
    EXPECT_NE(oob.err.find("2 poses"), std::string::npos) << oob.err;
}

TEST(Cli, PlotReproducesTheCurvePointwise) {
    TempDir td("plot");
    const CommandResult r = run_cli(td, "plot --lens f=0.05,N=2,Fd=2,p=1e-5 --min 0.5 "
                                        "--max 10 --n 21 --out " +
                                            td.file("curve.csv"));
    ASSERT_EQ(r.exit_code, 0) << r.err;

    const LensModel lens(0.05, 2.0, 2.0, 1e-5);
    const auto curve = coc_curve(lens, 0.5, 10.0, 21);
    std::istringstream csv(read_text(td.file("curve.csv")));
    std::string line;
    ASSERT_TRUE(std::getline(csv, line));
    EXPECT_EQ(line, "depth_m,sigma_px");
    for (const auto& [d, s] : curve) {
        ASSERT_TRUE(std::getline(csv, line));
        EXPECT_EQ(line, fmt9(d) + "," + fmt9(s));
    }
    EXPECT_FALSE(std::getline(csv, line)) << "trailing rows: " << line;
}

TEST(Cli, EvalEmitsMetricsAndRejectsSizeMismatch) {
    TempDir td("eval");
    FloatMap depth(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            depth.at(x, y) = 1.0f + 0.1f * x;
    write_pfm(td.file("pred.pfm"), depth);
    write_pfm(td.file("gt.pfm"), depth);

    const CommandResult ok =
        run_cli(td, "eval --pred " + td.file("pred.pfm") + " --gt " + td.file("gt.pfm"));
    ASSERT_EQ(ok.exit_code, 0) << ok.err;
    EXPECT_NE(ok.out.find("scene,rmse,absrel,delta1,delta2,delta3"), std::string::npos);
    EXPECT_NE(ok.out.find("scene,0,0,1,1,1"), std::string::npos) << ok.out;

    FloatMap smaller(8, 6, 1.0f);
    write_pfm(td.file("small.pfm"), smaller);
    const CommandResult bad =
        run_cli(td, "eval --pred " + td.file("pred.pfm") + " --gt " + td.file("small.pfm"));
    EXPECT_EQ(bad.exit_code, 1);
    EXPECT_NE(bad.err.find("8x8"), std::string::npos) << bad.err;
    EXPECT_NE(bad.err.find("8x6"), std::string::npos) << bad.err;
}

TEST(Cli, SynthEstimateEvalPipeline) {
    TempDir td("pipeline");
    ASSERT_EQ(run_cli(td, "synth --protocol nyuv2-style --style slanted-plane --width 32 "
                          "--height 32 --seed 3 --out " +
                              td.file("stack"))
                  .exit_code,
              0);

    const CommandResult est =
        run_cli(td, "estimate --stack-manifest " + td.file("stack/stack.txt") +
                        " --grid-min 0.5 --grid-max 10 --grid-n 24 --patch 8 --out-depth " +
                        td.file("est.pfm") + " --out-defocus-dir " + td.file("defocus"));
    ASSERT_EQ(est.exit_code, 0) << est.err;
    EXPECT_NE(est.out.find("4x4 patches"), std::string::npos) << est.out;
    EXPECT_TRUE(std::filesystem::exists(td.file("est.pfm")));
    for (int v = 0; v < 5; ++v) {
        char name[40];
        std::snprintf(name, sizeof(name), "defocus/est_defocus_%02d.pfm", v);
        EXPECT_TRUE(std::filesystem::exists(td.file(name))) << name;
    }

    const CommandResult ev =
        run_cli(td, "eval --pred " + td.file("est.pfm") + " --gt " +
                        td.file("stack/depth_gt.pfm") + " --label pipeline --out " +
                        td.file("metrics.csv"));
    ASSERT_EQ(ev.exit_code, 0) << ev.err;
    const std::string csv = read_text(td.file("metrics.csv"));
    EXPECT_NE(csv.find("scene,rmse,absrel,delta1,delta2,delta3"), std::string::npos);
    EXPECT_NE(csv.find("pipeline,"), std::string::npos);
}

TEST(Cli, InvertAppliesPriorBranchSelection) {
    TempDir td("invert");
    const LensModel lens(0.025, 8.0, 2.0, 1e-5);
    FloatMap sigma(6, 4);
    for (float& v : sigma.data())
        v = static_cast<float>(coc_radius(lens, 3.0)); // far side of focus
    write_pfm(td.file("sigma.pfm"), sigma);
    FloatMap prior(6, 4, 3.0f);
    write_pfm(td.file("prior.pfm"), prior);

    const std::string lens_arg = " --lens f=0.025,N=8,Fd=2,p=1e-5 ";
    ASSERT_EQ(run_cli(td, "invert --defocus " + td.file("sigma.pfm") + lens_arg +
                              "--prior " + td.file("prior.pfm") + " --out " +
                              td.file("with_prior.pfm"))
                  .exit_code,
              0);
    const FloatMap with_prior = read_pfm(td.file("with_prior.pfm"));
    for (float v : with_prior.data())
        EXPECT_NEAR(v, 3.0f, 1e-5);

    // Without a prior the ambiguity resolves to the near branch.
    ASSERT_EQ(run_cli(td, "invert --defocus " + td.file("sigma.pfm") + lens_arg + "--out " +
                              td.file("no_prior.pfm"))
                  .exit_code,
              0);
    const FloatMap no_prior = read_pfm(td.file("no_prior.pfm"));
    for (float v : no_prior.data())
        EXPECT_LT(v, 2.0f);
}

TEST(Cli, RefineImprovesABiasedDepthMap) {
    TempDir td("refine");
    const LensModel lens(0.025, 8.0, 2.0, 1e-5);
    DepthMap gt(32, 32);
    DepthMap splat(32, 32);
    DefocusMap sigma(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            gt.at(x, y) = static_cast<float>(1.2 + (3.0 - 1.2) * x / 31.0);
            splat.at(x, y) = 1.05f * gt.at(x, y);
            sigma.at(x, y) = static_cast<float>(coc_radius(lens, gt.at(x, y)));
        }
    write_pfm(td.file("splat.pfm"), splat);
    write_pfm(td.file("sigma.pfm"), sigma);
    write_png(td.file("guide.png"), oracle::wave_image(32, 32, 3), 8);

    const CommandResult r = run_cli(
        td, "refine --depth " + td.file("splat.pfm") + " --defocus " + td.file("sigma.pfm") +
                " --lens f=0.025,N=8,Fd=2,p=1e-5 --guide " + td.file("guide.png") +
                " --sweeps 10 --out " + td.file("refined.pfm"));
    ASSERT_EQ(r.exit_code, 0) << r.err;

    const DepthMap refined{read_pfm(td.file("refined.pfm"))};
    EXPECT_LT(depth_metrics(refined, gt).absrel, depth_metrics(splat, gt).absrel);
}

TEST(Cli, FitRunsEndToEndAndWritesTraceAndScene) {
    TempDir td("fit");
    const GaussianScene scene = small_scene(1);
    save_scene(td.file("scene.txt"), scene);
    const RenderResult target = render(scene, scene.view(0), {});
    write_png(td.file("target.png"), target.color, 16);
    std::ofstream manifest(td.file("views.txt"));
    manifest << "dfstack 1\n"
             << "lens f=0.05 N=2 Fd=2 p=5e-5\n"
             << "entry image=target.png Fd=2\n";
    manifest.close();

    const CommandResult r = run_cli(
        td, "fit --scene " + td.file("scene.txt") + " --views-manifest " + td.file("views.txt") +
                " --iters 2 --optimize pos --weights 0,0,1 --out-scene " + td.file("fitted.txt") +
                " --trace-csv " + td.file("trace.csv"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("loss "), std::string::npos) << r.out;

    const GaussianScene fitted = load_scene(td.file("fitted.txt"));
    EXPECT_EQ(fitted.gaussians.size(), scene.gaussians.size());

    std::istringstream csv(read_text(td.file("trace.csv")));
    std::string line;
    ASSERT_TRUE(std::getline(csv, line));
    EXPECT_EQ(line, "iter,total,defocus,blur,recon");
    std::vector<double> totals;
    while (std::getline(csv, line)) {
        std::istringstream row(line);
        std::string cell;
        ASSERT_TRUE(std::getline(row, cell, ',')); // iter
        ASSERT_TRUE(std::getline(row, cell, ',')); // total
        totals.push_back(std::stod(cell));
    }
    ASSERT_EQ(totals.size(), 3u); // initial row plus one per iteration
    for (std::size_t i = 1; i < totals.size(); ++i)
        EXPECT_LE(totals[i], totals[i - 1] + 1e-12);
}

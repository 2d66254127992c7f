// Copyright Contributors to the dfsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synth, render, estimate, fit, invert, refine,
// eval, plot. Exit codes: 0 success, 1 domain error, 2 usage error.

#include "dfsplat/errors.hpp"
#include "dfsplat/estimation.hpp"
#include "dfsplat/pfm.hpp"
#include "dfsplat/png_io.hpp"
#include "dfsplat/render.hpp"
#include "dfsplat/scene_io.hpp"
#include "dfsplat/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dfsplat;

namespace {

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string default_out_dir() {
    const char* env = std::getenv("DFSPLAT_OUT_DIR");
    return env ? env : "";
}

std::string index_name(const char* prefix, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%02zu.%s", prefix, i, ext);
    return buf;
}

void write_text(const std::string& path, const std::string& text, bool force) {
    if (!force && fs::exists(path))
        throw IoError(path + " exists; pass --force to replace it");
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path);
    out << text;
    if (!out)
        throw IoError("short write to " + path);
}

SceneStyle parse_style(const std::string& name) {
    if (name == "fronto-planes")
        return SceneStyle::FrontoPlanes;
    if (name == "slanted-plane")
        return SceneStyle::SlantedPlane;
    if (name == "spheres")
        return SceneStyle::Spheres;
    throw std::domain_error("unknown style '" + name +
                            "' (expected fronto-planes, slanted-plane or spheres)");
}

std::vector<double> parse_csv_doubles(const std::string& text, std::size_t expected,
                                      const char* what) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ','))
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw std::domain_error(std::string(what) + ": bad number '" + tok + "'");
        }
    if (out.size() != expected)
        throw std::domain_error(std::string(what) + ": expected " + std::to_string(expected) +
                                " comma-separated numbers");
    return out;
}

ParamMask parse_optimize(const std::string& text) {
    ParamMask mask{false, false, false, false, false, false};
    std::stringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok == "pos")
            mask.position = true;
        else if (tok == "scale")
            mask.scale = true;
        else if (tok == "rot")
            mask.rotation = true;
        else if (tok == "opacity")
            mask.opacity = true;
        else if (tok == "color")
            mask.color = true;
        else if (tok == "focus")
            mask.focus = true;
        else
            throw std::domain_error("--optimize: unknown group '" + tok +
                                    "' (expected pos,scale,rot,opacity,color,focus)");
    }
    return mask;
}

struct SynthArgs {
    std::string protocol = "nyuv2-style";
    std::string style = "slanted-plane";
    int width = 64, height = 64;
    std::uint32_t seed = 0;
    std::string out = default_out_dir();
    double depth_min = 0.0, depth_max = 0.0; // 0 keeps the protocol preset
    int planes = 4;
    double sigma0 = 0.0;
    int window = 7;
    bool force = false;
};

int run_synth(const SynthArgs& a) {
    if (a.out.empty())
        throw std::domain_error("no output directory (--out or DFSPLAT_OUT_DIR)");
    RunConfig cfg = protocol_config(parse_protocol(a.protocol));
    cfg.seed = a.seed;
    cfg.out_dir = a.out;
    if (a.depth_min > 0.0)
        cfg.depth_min_m = a.depth_min;
    if (a.depth_max > 0.0)
        cfg.depth_max_m = a.depth_max;

    SynthOptions opts;
    opts.style = parse_style(a.style);
    opts.depth_min_m = cfg.depth_min_m;
    opts.depth_max_m = cfg.depth_max_m;
    opts.num_planes = a.planes;
    const SynthScene scene = synth_procedural(a.width, a.height, cfg.seed, opts);
    const FocalStack stack =
        synthesize_stack(scene.aif, scene.depth, cfg.lens, cfg.focus_distances_m, a.window,
                         a.sigma0);

    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    write_png((dir / "aif.png").string(), scene.aif, 16, a.force);
    write_pfm((dir / "depth_gt.pfm").string(), scene.depth, a.force);

    Manifest manifest;
    manifest.lens = cfg.lens;
    manifest.aif_path = "aif.png";
    manifest.depth_path = "depth_gt.pfm";
    for (std::size_t i = 0; i < stack.entries.size(); ++i) {
        const std::string img = index_name("view", i, "png");
        const std::string dfc = index_name("defocus", i, "pfm");
        write_png((dir / img).string(), stack.entries[i].image, 16, a.force);
        write_pfm((dir / dfc).string(), stack.entries[i].gt_defocus, a.force);
        ManifestEntry e;
        e.image_path = img;
        e.defocus_path = dfc;
        e.focus_distance_m = stack.entries[i].lens.focus_distance_m();
        manifest.entries.push_back(e);
    }
    save_manifest((dir / "stack.txt").string(), manifest, a.force);
    std::cout << "wrote " << stack.entries.size() << " views to " << cfg.out_dir << "\n";
    return 0;
}

struct RenderArgs {
    std::string scene;
    std::string out = default_out_dir();
    int view = -1; // all
    bool no_dof = false;
    double cutoff = 3.0;
    int threads = 1;
    int tile = 16;
    bool force = false;
};

int run_render(const RenderArgs& a) {
    if (a.out.empty())
        throw std::domain_error("no output directory (--out or DFSPLAT_OUT_DIR)");
    const GaussianScene scene = load_scene(a.scene);
    RenderOptions opts;
    opts.enable_dof = !a.no_dof;
    opts.cutoff_t = a.cutoff;
    opts.num_threads = a.threads;
    opts.tile_px = a.tile;

    std::vector<std::size_t> indices;
    if (a.view >= 0) {
        if (static_cast<std::size_t>(a.view) >= scene.poses.size())
            throw std::domain_error("--view " + std::to_string(a.view) + " out of range, scene has " +
                                    std::to_string(scene.poses.size()) + " poses");
        indices.push_back(a.view);
    } else {
        for (std::size_t i = 0; i < scene.poses.size(); ++i)
            indices.push_back(i);
    }

    fs::create_directories(a.out);
    const fs::path dir(a.out);
    for (const std::size_t i : indices) {
        const RenderResult r = render(scene, scene.view(i), opts);
        write_png((dir / index_name("color", i, "png")).string(), r.color, 16, a.force);
        write_pfm((dir / index_name("depth", i, "pfm")).string(), r.depth, a.force);
    }
    std::cout << "rendered " << indices.size() << " views to " << a.out << "\n";
    return 0;
}

struct EstimateArgs {
    std::string manifest;
    double grid_min = 0.5, grid_max = 10.0;
    int grid_n = 64;
    int patch = 8;
    int window = 7;
    std::string out_depth;
    std::string out_defocus_dir;
    bool force = false;
};

int run_estimate(const EstimateArgs& a) {
    const FocalStack stack = load_stack(a.manifest);
    const DepthGrid grid = DepthGrid::log_spaced(a.grid_min, a.grid_max, a.grid_n);
    EstimateOptions opts;
    opts.patch_px = a.patch;
    opts.window = a.window;
    const EstimateResult result = estimate_depth_from_stack(stack, grid, opts);

    if (!a.out_depth.empty())
        write_pfm(a.out_depth, result.depth, a.force);
    if (!a.out_defocus_dir.empty()) {
        fs::create_directories(a.out_defocus_dir);
        const fs::path dir(a.out_defocus_dir);
        for (std::size_t v = 0; v < result.defocus.size(); ++v)
            write_pfm((dir / index_name("est_defocus", v, "pfm")).string(), result.defocus[v],
                      a.force);
    }
    int confident = 0;
    for (const auto c : result.patch_confident)
        confident += c;
    std::cout << "estimated " << result.patches_x << "x" << result.patches_y << " patches ("
              << confident << " confident) over " << grid.depths_m.size() << " candidates\n";
    return 0;
}

struct FitArgs {
    std::string scene;
    std::string views_manifest;
    int iters = 100;
    std::string optimize = "pos,scale,rot,opacity,color";
    std::string weights = "1,0.01,1";
    double alpha_ssim = 0.2;
    int patch = 16;
    int threads = 1;
    std::string out_scene;
    std::string trace_csv;
    bool force = false;
};

int run_fit(const FitArgs& a) {
    const GaussianScene scene = load_scene(a.scene);
    const FocalStack stack = load_stack(a.views_manifest);

    std::vector<FitView> views;
    for (std::size_t i = 0; i < stack.entries.size(); ++i) {
        std::size_t pose_index;
        if (scene.poses.size() == stack.entries.size())
            pose_index = i;
        else if (scene.poses.size() == 1)
            pose_index = 0;
        else
            throw std::domain_error("scene has " + std::to_string(scene.poses.size()) +
                                    " poses but the manifest has " +
                                    std::to_string(stack.entries.size()) + " entries");
        const FocalStackEntry& e = stack.entries[i];
        if (e.image.width() != scene.camera.width || e.image.height() != scene.camera.height)
            throw std::domain_error(
                "target " + std::to_string(i) + " is " + std::to_string(e.image.width()) + "x" +
                std::to_string(e.image.height()) + " but the camera is " +
                std::to_string(scene.camera.width) + "x" + std::to_string(scene.camera.height));
        views.push_back({scene.view(pose_index, e.lens), e.image});
    }

    FitConfig cfg;
    cfg.iterations = a.iters;
    cfg.optimize = parse_optimize(a.optimize);
    const auto mu = parse_csv_doubles(a.weights, 3, "--weights");
    cfg.weights.mu_defocus = mu[0];
    cfg.weights.mu_blur = mu[1];
    cfg.weights.mu_recon = mu[2];
    cfg.weights.alpha_ssim = a.alpha_ssim;
    cfg.defocus_patch_px = a.patch;
    cfg.render.num_threads = a.threads;

    const FitResult result = fit_scene(scene, views, cfg);

    if (!a.out_scene.empty())
        save_scene(a.out_scene, result.scene, a.force);
    if (!a.trace_csv.empty()) {
        std::string csv = "iter,total,defocus,blur,recon\n";
        for (std::size_t i = 0; i < result.trace.size(); ++i) {
            const TraceRow& r = result.trace[i];
            csv += std::to_string(i) + "," + fmt9(r.total) + "," + fmt9(r.defocus) + "," +
                   fmt9(r.blur) + "," + fmt9(r.recon) + "\n";
        }
        write_text(a.trace_csv, csv, a.force);
    }
    std::cout << "loss " << fmt9(result.trace.front().total) << " -> "
              << fmt9(result.trace.back().total) << " over " << a.iters << " iterations\n";
    if (cfg.optimize.focus)
        for (std::size_t v = 0; v < result.views.size(); ++v)
            std::cout << "view " << v << " focus_m " << fmt9(result.views[v].lens.focus_distance_m())
                      << "\n";
    return 0;
}

struct InvertArgs {
    std::string defocus;
    std::string lens;
    std::string prior;
    std::string out;
    bool force = false;
};

int run_invert(const InvertArgs& a) {
    const DefocusMap defocus{read_pfm(a.defocus)};
    const LensModel lens = parse_lens_spec(a.lens);
    DepthMap prior(defocus.width(), defocus.height());
    if (!a.prior.empty())
        prior = DepthMap(read_pfm(a.prior));
    const DepthMap depth = invert_defocus_to_depth(defocus, lens, prior);
    write_pfm(a.out, depth, a.force);
    std::cout << "inverted " << defocus.width() << "x" << defocus.height() << " defocus map\n";
    return 0;
}

struct RefineArgs {
    std::string depth;
    std::string defocus;
    std::string lens;
    std::string guide;
    std::string gt;
    double lambda_data = 1.0;
    double lambda_smooth = 0.1;
    int sweeps = 30;
    std::string out;
    bool force = false;
};

int run_refine(const RefineArgs& a) {
    const DepthMap depth{read_pfm(a.depth)};
    const DefocusMap defocus{read_pfm(a.defocus)};
    const LensModel lens = parse_lens_spec(a.lens);
    const Image guide = read_png(a.guide);
    DepthMap gt;
    if (!a.gt.empty())
        gt = DepthMap(read_pfm(a.gt));
    RefineOptions opts;
    opts.lambda_data = a.lambda_data;
    opts.lambda_smooth = a.lambda_smooth;
    opts.sweeps = a.sweeps;
    const DepthMap refined =
        refine_depth(depth, defocus, lens, guide, a.gt.empty() ? nullptr : &gt, opts);
    write_pfm(a.out, refined, a.force);
    std::cout << "refined " << depth.width() << "x" << depth.height() << " depth map\n";
    return 0;
}

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string label = "scene";
    std::string out;
    bool force = false;
};

int run_eval(const EvalArgs& a) {
    const DepthMap pred{read_pfm(a.pred)};
    const DepthMap gt{read_pfm(a.gt)};
    if (!pred.same_size(gt))
        throw std::domain_error("size mismatch: pred is " + std::to_string(pred.width()) + "x" +
                                std::to_string(pred.height()) + " but gt is " +
                                std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    const DepthMetrics m = depth_metrics(pred, gt);
    std::string csv = "scene,rmse,absrel,delta1,delta2,delta3\n";
    csv += a.label + "," + fmt9(m.rmse) + "," + fmt9(m.absrel) + "," + fmt9(m.delta1) + "," +
           fmt9(m.delta2) + "," + fmt9(m.delta3) + "\n";
    if (a.out.empty())
        std::cout << csv;
    else
        write_text(a.out, csv, a.force);
    return 0;
}

struct PlotArgs {
    std::string lens;
    double min = 0.5, max = 10.0;
    int n = 200;
    std::string out;
    bool force = false;
};

int run_plot(const PlotArgs& a) {
    const LensModel lens = parse_lens_spec(a.lens);
    const auto curve = coc_curve(lens, a.min, a.max, a.n);
    std::string csv = "depth_m,sigma_px\n";
    for (const auto& [d, s] : curve)
        csv += fmt9(d) + "," + fmt9(s) + "\n";
    if (a.out.empty())
        std::cout << csv;
    else
        write_text(a.out, csv, a.force);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physically-based defocus rendering and depth from defocus"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* s = app.add_subcommand("synth", "Generate a procedural scene and focal stack");
    s->add_option("--protocol", synth.protocol, "fod500-style | nyuv2-style | custom");
    s->add_option("--style", synth.style, "fronto-planes | slanted-plane | spheres");
    s->add_option("--width", synth.width);
    s->add_option("--height", synth.height);
    s->add_option("--seed", synth.seed, "RNG seed; fixes every random choice");
    s->add_option("--out", synth.out, "Output directory (or DFSPLAT_OUT_DIR)");
    s->add_option("--depth-min", synth.depth_min, "Override the protocol depth range");
    s->add_option("--depth-max", synth.depth_max);
    s->add_option("--planes", synth.planes, "Object count for fronto-planes/spheres");
    s->add_option("--sigma0", synth.sigma0, "Baseline capture blur in pixels");
    s->add_option("--window", synth.window, "PSF window size (odd)");
    s->add_flag("--force", synth.force, "Overwrite existing outputs");

    RenderArgs rnd;
    CLI::App* r = app.add_subcommand("render", "Rasterize a Gaussian scene");
    r->add_option("--scene", rnd.scene)->required();
    r->add_option("--out", rnd.out, "Output directory (or DFSPLAT_OUT_DIR)");
    r->add_option("--view", rnd.view, "Pose index; default renders all");
    r->add_flag("--no-dof", rnd.no_dof, "Disable depth-of-field blur");
    r->add_option("--cutoff", rnd.cutoff, "Mahalanobis cutoff radius");
    r->add_option("--threads", rnd.threads);
    r->add_option("--tile", rnd.tile, "Tile size in pixels");
    r->add_flag("--force", rnd.force, "Overwrite existing outputs");

    EstimateArgs est;
    CLI::App* e = app.add_subcommand("estimate", "Depth from a focal stack by reblur matching");
    e->add_option("--stack-manifest", est.manifest)->required();
    e->add_option("--grid-min", est.grid_min, "Smallest candidate depth (m)");
    e->add_option("--grid-max", est.grid_max, "Largest candidate depth (m)");
    e->add_option("--grid-n", est.grid_n, "Candidate count");
    e->add_option("--patch", est.patch, "Patch size in pixels");
    e->add_option("--window", est.window, "Reblur window size (odd)");
    e->add_option("--out-depth", est.out_depth, "Estimated depth PFM");
    e->add_option("--out-defocus-dir", est.out_defocus_dir, "Directory for per-view defocus PFMs");
    e->add_flag("--force", est.force, "Overwrite existing outputs");

    FitArgs fit;
    CLI::App* f = app.add_subcommand("fit", "Fit scene/lens parameters to target views");
    f->add_option("--scene", fit.scene, "Initial scene file")->required();
    f->add_option("--views-manifest", fit.views_manifest, "Stack manifest with target views")
        ->required();
    f->add_option("--iters", fit.iters);
    f->add_option("--optimize", fit.optimize, "Comma list: pos,scale,rot,opacity,color,focus");
    f->add_option("--weights", fit.weights, "mu1,mu2,mu3 of the total loss");
    f->add_option("--alpha-ssim", fit.alpha_ssim, "SSIM share of the reconstruction loss");
    f->add_option("--patch", fit.patch, "Defocus-loss patch size");
    f->add_option("--threads", fit.threads);
    f->add_option("--out-scene", fit.out_scene, "Fitted scene file");
    f->add_option("--trace-csv", fit.trace_csv, "Per-iteration loss CSV");
    f->add_flag("--force", fit.force, "Overwrite existing outputs");

    InvertArgs inv;
    CLI::App* i = app.add_subcommand("invert", "Analytic defocus-to-depth inversion");
    i->add_option("--defocus", inv.defocus, "Defocus map PFM")->required();
    i->add_option("--lens", inv.lens, "f=..,N=..,Fd=..,p=..")->required();
    i->add_option("--prior", inv.prior, "Branch-selection prior depth PFM");
    i->add_option("--out", inv.out, "Output depth PFM")->required();
    i->add_flag("--force", inv.force, "Overwrite existing outputs");

    RefineArgs ref;
    CLI::App* rf = app.add_subcommand("refine", "Refine a depth map against defocus evidence");
    rf->add_option("--depth", ref.depth, "Input depth PFM")->required();
    rf->add_option("--defocus", ref.defocus, "Defocus map PFM")->required();
    rf->add_option("--lens", ref.lens, "f=..,N=..,Fd=..,p=..")->required();
    rf->add_option("--guide", ref.guide, "Guide image PNG")->required();
    rf->add_option("--gt", ref.gt, "Optional ground-truth depth PFM");
    rf->add_option("--lambda-data", ref.lambda_data);
    rf->add_option("--lambda-smooth", ref.lambda_smooth);
    rf->add_option("--sweeps", ref.sweeps);
    rf->add_option("--out", ref.out, "Output depth PFM")->required();
    rf->add_flag("--force", ref.force, "Overwrite existing outputs");

    EvalArgs ev;
    CLI::App* ee = app.add_subcommand("eval", "Depth metrics of a prediction against ground truth");
    ee->add_option("--pred", ev.pred, "Predicted depth PFM")->required();
    ee->add_option("--gt", ev.gt, "Ground-truth depth PFM")->required();
    ee->add_option("--label", ev.label, "Scene name for the CSV");
    ee->add_option("--out", ev.out, "CSV path; stdout when omitted");
    ee->add_flag("--force", ev.force, "Overwrite existing outputs");

    PlotArgs plot;
    CLI::App* p = app.add_subcommand("plot", "CoC radius versus depth as CSV");
    p->add_option("--lens", plot.lens, "f=..,N=..,Fd=..,p=..")->required();
    p->add_option("--min", plot.min, "Smallest depth (m)");
    p->add_option("--max", plot.max, "Largest depth (m)");
    p->add_option("--n", plot.n, "Sample count");
    p->add_option("--out", plot.out, "CSV path; stdout when omitted");
    p->add_flag("--force", plot.force, "Overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*s)
            return run_synth(synth);
        if (*r)
            return run_render(rnd);
        if (*e)
            return run_estimate(est);
        if (*f)
            return run_fit(fit);
        if (*i)
            return run_invert(inv);
        if (*rf)
            return run_refine(ref);
        if (*ee)
            return run_eval(ev);
        if (*p)
            return run_plot(plot);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 2;
}

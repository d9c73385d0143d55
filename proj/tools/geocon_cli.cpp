// geocon: command-line front end for the geometric-consistency engine.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geocon/camera_geometry.hpp"
#include "geocon/config.hpp"
#include "geocon/consistency_masks.hpp"
#include "geocon/error.hpp"
#include "geocon/evaluation.hpp"
#include "geocon/image_sampling.hpp"
#include "geocon/io.hpp"
#include "geocon/objective.hpp"
#include "geocon/optimizer.hpp"
#include "geocon/synthetic_scenes.hpp"

namespace fs = std::filesystem;
using namespace geocon;

namespace {

struct GlobalOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

Intrinsics parse_intrinsics(const std::string& text) {
  KeyValues kv;
  kv.set("intrinsics", text);
  const auto k = kv.get_doubles("intrinsics", 4);
  Intrinsics out{k[0], k[1], k[2], k[3]};
  out.validate();
  return out;
}

RunConfig load_run_config(const GlobalOptions& g) {
  KeyValues kv = g.config.empty() ? KeyValues{} : KeyValues::load(g.config);
  for (const auto& o : g.overrides) kv.apply_override(o);
  if (g.seed) kv.set("seed", std::to_string(*g.seed));
  return parse_run_config(kv);
}

// Frames, intrinsics and initial state of a run. gt is set when the inputs
// come from the synthetic scene.
struct Problem {
  ImageBuffer frame_t;
  ImageBuffer frame_t1;
  Intrinsics k;
  SceneState init;
  std::optional<GroundTruth> gt;
};

Problem load_problem(const RunConfig& rc) {
  Problem p;
  SceneState base;
  if (rc.frame_t) {
    if (!rc.intrinsics) throw InvalidArgument("intrinsics are required with frame files");
    p.frame_t = read_image(*rc.frame_t);
    p.frame_t1 = read_image(*rc.frame_t1);
    p.k = *rc.intrinsics;
    const int w = p.frame_t.width(), h = p.frame_t.height();
    base.depth_t = DepthMap(w, h, 1.0);
    base.depth_t1 = DepthMap(w, h, 1.0);
    base.flow_fwd = FlowField(w, h);
    base.flow_bwd = FlowField(w, h);
  } else {
    const SceneSpec spec = resolve_scene(rc.scene, rc.scene_size, {});
    p.gt = render(spec);
    p.frame_t = p.gt->frame_t;
    p.frame_t1 = p.gt->frame_t1;
    p.k = rc.intrinsics.value_or(spec.intrinsics);
    base = ground_truth_state(*p.gt);
  }
  if (rc.depth_t) base.depth_t = read_pfm_depth(*rc.depth_t);
  if (rc.depth_t1) base.depth_t1 = read_pfm_depth(*rc.depth_t1);
  if (rc.pose) base.pose_params = read_pose(*rc.pose);
  if (rc.flow_fwd) base.flow_fwd = read_flo(*rc.flow_fwd);
  if (rc.flow_bwd) base.flow_bwd = read_flo(*rc.flow_bwd);
  p.init = perturb_state(base, rc.seed, rc.depth_noise, rc.flow_noise);
  p.init.validate();
  return p;
}

void print_report(const LossReport& r) {
  std::printf("photometric %.10g\nsmooth %.10g\nforward_backward %.10g\ncross %.10g\ntotal %.10g\n",
              r.photometric, r.smooth, r.forward_backward, r.cross, r.total);
}

ValidMask mask_or_all(const std::string& path, int w, int h) {
  if (path.empty()) return ValidMask(w, h, 1);
  ValidMask m = read_mask(path);
  if (m.width() != w || m.height() != h) throw InvalidArgument("mask size does not match");
  return m;
}

int cmd_synth_flow(const std::string& depth, const std::string& pose, const std::string& k,
                   const std::string& out, const std::string& valid_out) {
  const RigidFlow rf =
      rigid_flow(read_pfm_depth(depth), parse_intrinsics(k), pose_from_params(read_pose(pose)));
  write_flo(out, rf.flow);
  if (!valid_out.empty()) write_mask(valid_out, rf.in_front);
  return 0;
}

int cmd_warp(const std::string& image, const std::string& flow, const std::string& out,
             const std::string& valid_out) {
  const SampledImage s = inverse_warp(read_image(image), read_flo(flow));
  write_image(out, s.values);
  if (!valid_out.empty()) write_mask(valid_out, s.in_bounds);
  return 0;
}

int cmd_mask(const std::string& fwd, const std::string& bwd, const FBCheckParams& params,
             const std::string& out) {
  const ValidMask m = fb_check(read_flo(fwd), read_flo(bwd), params);
  write_mask(out, m);
  std::size_t valid = 0;
  for (auto b : m.values()) valid += b != 0;
  std::printf("valid %zu of %zu\n", valid, m.size());
  return 0;
}

int cmd_loss(const GlobalOptions& g) {
  const RunConfig rc = load_run_config(g);
  const Problem p = load_problem(rc);
  print_report(total_loss(p.frame_t, p.frame_t1, p.k, p.init, rc.optimizer.objective));
  return 0;
}

int cmd_refine(const GlobalOptions& g, int progress_every) {
  const RunConfig rc = load_run_config(g);
  const Problem p = load_problem(rc);
  ProgressCallback progress;
  if (progress_every > 0) {
    progress = [&](int it, const LossReport& r) {
      if (it % progress_every == 0) std::fprintf(stderr, "iter %d total %.6g\n", it, r.total);
    };
  }
  const RefineResult r = refine(p.frame_t, p.frame_t1, p.k, p.init, rc.optimizer, progress);
  fs::create_directories(rc.out_dir);
  write_trace_csv(rc.out_dir / "trace.csv", r.trace);
  write_pfm(rc.out_dir / "depth_t.pfm", r.state.depth_t);
  write_pfm(rc.out_dir / "depth_t1.pfm", r.state.depth_t1);
  write_pose(rc.out_dir / "pose.txt", r.state.pose_params);
  write_flo(rc.out_dir / "flow_fwd.flo", r.state.flow_fwd);
  write_flo(rc.out_dir / "flow_bwd.flo", r.state.flow_bwd);

  std::printf("iterations %zu\n", r.trace.size());
  if (!r.trace.empty()) {
    std::printf("initial_total %.10g\nfinal_total %.10g\n", r.trace.front().total,
                r.trace.back().total);
  }
  if (p.gt) {
    const ValidMask all(p.gt->depth_t.width(), p.gt->depth_t.height(), 1);
    const DepthMetrics d = depth_metrics(r.state.depth_t, p.gt->depth_t, all);
    const FlowField rigid =
        rigid_flow(r.state.depth_t, p.k, pose_from_params(r.state.pose_params)).flow;
    const ValidMask visible = p.gt->static_visible();
    std::printf("depth_abs_rel %.10g\n", d.abs_rel);
    std::printf("rigid_flow_epe %.10g\n", epe(rigid, p.gt->flow_fwd, visible));
    std::printf("flow_epe %.10g\n", epe(r.state.flow_fwd, p.gt->flow_fwd, visible));
  }
  return 0;
}

int cmd_render_scene(const GlobalOptions& g) {
  const RunConfig rc = load_run_config(g);
  const SceneSpec spec = resolve_scene(rc.scene, rc.scene_size, {});
  const GroundTruth gt = render(spec);
  const fs::path& out = rc.out_dir;
  fs::create_directories(out);
  write_pfm(out / "frame_t.pfm", gt.frame_t);
  write_pfm(out / "frame_t1.pfm", gt.frame_t1);
  write_pfm(out / "depth_t.pfm", gt.depth_t);
  write_pfm(out / "depth_t1.pfm", gt.depth_t1);
  write_flo(out / "flow_fwd.flo", gt.flow_fwd);
  write_flo(out / "flow_bwd.flo", gt.flow_bwd);
  write_pose(out / "pose.txt", params_from_pose(gt.pose));
  write_mask(out / "occluded.pgm", gt.occluded);
  write_mask(out / "movers.pgm", gt.movers);
  write_mask(out / "static_visible.pgm", gt.static_visible());
  {
    std::ofstream f(out / "scene.txt");
    f << format_scene_spec(spec);
  }
  std::ofstream f(out / "inputs.cfg");
  char k[160];
  std::snprintf(k, sizeof k, "%.17g %.17g %.17g %.17g", spec.intrinsics.fx, spec.intrinsics.fy,
                spec.intrinsics.cx, spec.intrinsics.cy);
  f << "frame_t = frame_t.pfm\nframe_t1 = frame_t1.pfm\nintrinsics = " << k << "\n";
  if (!f) throw IoError("cannot write " + (out / "inputs.cfg").string());
  return 0;
}

int cmd_eval_flow(const std::string& est_path, const std::string& gt_path,
                  const std::string& mask) {
  const FlowField est = read_flo(est_path);
  const FlowField gt = read_flo(gt_path);
  std::cout << to_report(flow_metrics(est, gt, mask_or_all(mask, gt.width(), gt.height())));
  return 0;
}

int cmd_eval_depth(const std::string& est_path, const std::string& gt_path,
                   const std::string& mask, const DepthEvalOptions& opts) {
  const DepthMap est = read_pfm_depth(est_path);
  const DepthMap gt = read_pfm_depth(gt_path);
  std::cout << to_report(depth_metrics(est, gt, mask_or_all(mask, gt.width(), gt.height()), opts));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth, pose and optical-flow geometric consistency engine"};
  app.name("geocon");
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "key = value run configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "key=value override, repeatable");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  app.add_flag_callback("--list-keys", [] {
    std::cout << run_config_keys();
    throw CLI::Success();
  }, "print the configuration keys and exit");

  std::string depth, pose, intrinsics, out, valid_out, image, flow, fwd, bwd, est, gt, mask;
  FBCheckParams fb;
  DepthEvalOptions depth_opts;
  bool no_median = false;
  double max_magnitude = 0.0;
  int progress_every = 0;

  auto* synth = app.add_subcommand("synth-flow", "rigid flow from depth, pose and intrinsics");
  synth->add_option("--depth", depth, "depth map (.pfm)")->required()->check(CLI::ExistingFile);
  synth->add_option("--pose", pose, "pose file: rx ry rz tx ty tz")->required()->check(CLI::ExistingFile);
  synth->add_option("--intrinsics", intrinsics, "\"fx fy cx cy\"")->required();
  synth->add_option("-o,--out", out, "output flow (.flo)")->required();
  synth->add_option("--valid", valid_out, "optional in-front mask (.pgm)");

  auto* warp = app.add_subcommand("warp", "inverse-warp an image by a flow field");
  warp->add_option("--image", image, "image (.pfm, .pgm, .ppm)")->required()->check(CLI::ExistingFile);
  warp->add_option("--flow", flow, "flow (.flo)")->required()->check(CLI::ExistingFile);
  warp->add_option("-o,--out", out, "warped image")->required();
  warp->add_option("--valid", valid_out, "optional in-bounds mask (.pgm)");

  auto* maskc = app.add_subcommand("mask", "forward-backward consistency mask");
  maskc->add_option("--fwd", fwd, "forward flow (.flo)")->required()->check(CLI::ExistingFile);
  maskc->add_option("--bwd", bwd, "backward flow (.flo)")->required()->check(CLI::ExistingFile);
  maskc->add_option("--alpha1", fb.alpha1, "relative tolerance")->capture_default_str();
  maskc->add_option("--alpha2", fb.alpha2, "absolute tolerance, px^2")->capture_default_str();
  maskc->add_option("-o,--out", out, "mask (.pgm)")->required();

  auto* loss = app.add_subcommand("loss", "loss report for a scene state");
  auto* refine_cmd = app.add_subcommand("refine", "optimize depth, pose and flow");
  refine_cmd->add_option("--progress", progress_every, "print the loss every N iterations");
  auto* render_cmd = app.add_subcommand("render-scene", "write ground-truth fixture files");

  auto* eval_flow = app.add_subcommand("eval-flow", "EPE and F1 of a flow estimate");
  eval_flow->add_option("--est", est, "estimate (.flo)")->required()->check(CLI::ExistingFile);
  eval_flow->add_option("--gt", gt, "ground truth (.flo)")->required()->check(CLI::ExistingFile);
  eval_flow->add_option("--mask", mask, "evaluated pixels (.pgm)")->check(CLI::ExistingFile);

  auto* eval_depth = app.add_subcommand("eval-depth", "depth error and accuracy metrics");
  eval_depth->add_option("--est", est, "estimate (.pfm)")->required()->check(CLI::ExistingFile);
  eval_depth->add_option("--gt", gt, "ground truth (.pfm)")->required()->check(CLI::ExistingFile);
  eval_depth->add_option("--mask", mask, "evaluated pixels (.pgm)")->check(CLI::ExistingFile);
  eval_depth->add_option("--cap", depth_opts.cap, "ignore ground truth beyond this depth");
  eval_depth->add_flag("--no-median-scaling", no_median, "compare raw values");

  auto* viz = app.add_subcommand("viz-flow", "color-wheel rendering of a flow field");
  viz->add_option("--flow", flow, "flow (.flo)")->required()->check(CLI::ExistingFile);
  viz->add_option("--max", max_magnitude, "saturation magnitude; 0 uses the field maximum");
  viz->add_option("-o,--out", out, "image (.ppm)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (seed_opt->count() > 0) g.seed = seed;
  depth_opts.median_scale = !no_median;

  try {
    if (synth->parsed()) return cmd_synth_flow(depth, pose, intrinsics, out, valid_out);
    if (warp->parsed()) return cmd_warp(image, flow, out, valid_out);
    if (maskc->parsed()) return cmd_mask(fwd, bwd, fb, out);
    if (loss->parsed()) return cmd_loss(g);
    if (refine_cmd->parsed()) return cmd_refine(g, progress_every);
    if (render_cmd->parsed()) return cmd_render_scene(g);
    if (eval_flow->parsed()) return cmd_eval_flow(est, gt, mask);
    if (eval_depth->parsed()) return cmd_eval_depth(est, gt, mask, depth_opts);
    if (viz->parsed()) {
      write_flow_visualization(out, read_flo(flow), max_magnitude);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "geocon: error: %s\n", e.what());
    return 1;
  }
  return 1;
}

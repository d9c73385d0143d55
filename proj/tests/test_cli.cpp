#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "geocon/io.hpp"
#include "geocon/synthetic_scenes.hpp"
#include "test_support.hpp"

using namespace geocon;
using namespace geocon::test;

namespace {

struct CliRun {
  int status;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(GEOCON_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, ""};
  std::string out;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// "key value" lines.
std::map<std::string, double> values(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string key;
  double v;
  while (in >> key >> v) out[key] = v;
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, NoSubcommandFails) {
  const CliRun r = run("");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("synth-flow"), std::string::npos);
}

TEST(Cli, UnknownSubcommandPrintsUsage) {
  const CliRun r = run("frobnicate");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownFlagFails) {
  EXPECT_NE(run("viz-flow --bogus 1").status, 0);
}

TEST(Cli, UnknownConfigKeyFails) {
  const CliRun r = run("loss --set no_such_key=1");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("no_such_key"), std::string::npos);
}

TEST(Cli, SynthFlowIdentityPoseIsZero) {
  TempDir dir("cli_synth");
  write_pfm(dir / "d.pfm", DepthMap(9, 7, 3.0));
  write_pose(dir / "p.txt", Vec6::Zero());
  const CliRun r = run("synth-flow --depth " + (dir / "d.pfm").string() + " --pose " +
                    (dir / "p.txt").string() + " --intrinsics \"10 10 4 3\" -o " +
                    (dir / "f.flo").string());
  ASSERT_EQ(r.status, 0) << r.out;
  const FlowField f = read_flo(dir / "f.flo");
  ASSERT_EQ(f.width(), 9);
  for (double v : f.u().values()) EXPECT_EQ(v, 0.0);
  for (double v : f.v().values()) EXPECT_EQ(v, 0.0);
}

TEST(Cli, SynthFlowMatchesClosedForm) {
  TempDir dir("cli_synth2");
  write_pfm(dir / "d.pfm", DepthMap(8, 8, 4.0));
  Vec6 p = Vec6::Zero();
  p[3] = 0.5;
  write_pose(dir / "p.txt", p);
  ASSERT_EQ(run("synth-flow --depth " + (dir / "d.pfm").string() + " --pose " +
                (dir / "p.txt").string() + " --intrinsics \"20 20 3.5 3.5\" -o " +
                (dir / "f.flo").string())
                .status,
            0);
  const FlowField f = read_flo(dir / "f.flo");
  for (double v : f.u().values()) EXPECT_NEAR(v, 20.0 * 0.5 / 4.0, 1e-6);
}

TEST(Cli, EvalFlowOfIdenticalFilesIsZero) {
  TempDir dir("cli_eval");
  std::mt19937_64 rng(3);
  write_flo(dir / "a.flo", random_flow(rng, 12, 10, 5.0));
  const CliRun r = run("eval-flow --est " + (dir / "a.flo").string() + " --gt " +
                    (dir / "a.flo").string());
  ASSERT_EQ(r.status, 0) << r.out;
  const auto v = values(r.out);
  ASSERT_TRUE(v.count("epe") && v.count("f1")) << r.out;
  EXPECT_EQ(v.at("epe"), 0.0);
  EXPECT_EQ(v.at("f1"), 0.0);
}

TEST(Cli, MaskOfConsistentFlowsIsAllValid) {
  TempDir dir("cli_mask");
  FlowField fwd(10, 10), bwd(10, 10);
  for (auto& v : fwd.u().values()) v = 1.0;
  for (auto& v : bwd.u().values()) v = -1.0;
  write_flo(dir / "f.flo", fwd);
  write_flo(dir / "b.flo", bwd);
  const CliRun r = run("mask --fwd " + (dir / "f.flo").string() + " --bwd " +
                    (dir / "b.flo").string() + " -o " + (dir / "m.pgm").string());
  ASSERT_EQ(r.status, 0) << r.out;
  const ValidMask m = read_mask(dir / "m.pgm");
  // The last column maps out of view.
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 9; ++x) EXPECT_EQ(m(x, y), 1) << x << "," << y;
    EXPECT_EQ(m(9, y), 0);
  }
}

TEST(Cli, WarpByZeroFlowIsIdentity) {
  TempDir dir("cli_warp");
  std::mt19937_64 rng(5);
  const ImageBuffer img = random_image(rng, 7, 6, 1);
  write_pfm(dir / "i.pfm", img);
  write_flo(dir / "z.flo", FlowField(7, 6));
  ASSERT_EQ(run("warp --image " + (dir / "i.pfm").string() + " --flow " +
                (dir / "z.flo").string() + " -o " + (dir / "w.pfm").string())
                .status,
            0);
  const ImageBuffer w = read_pfm(dir / "w.pfm");
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 7; ++x) EXPECT_EQ(w(x, y), static_cast<double>(static_cast<float>(img(x, y))));
  }
}

TEST(Cli, VizFlowWritesPpm) {
  TempDir dir("cli_viz");
  write_flo(dir / "z.flo", FlowField(5, 4));
  ASSERT_EQ(run("viz-flow --flow " + (dir / "z.flo").string() + " -o " + (dir / "v.ppm").string())
                .status,
            0);
  const ImageBuffer v = read_pnm(dir / "v.ppm");
  EXPECT_EQ(v.channels(), 3);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(v(2, 2, c), 1.0);
}

TEST(Cli, RenderSceneThenLossFromFiles) {
  TempDir dir("cli_render");
  const CliRun r = run("render-scene --set scene=textured_plane --set scene_size=32 --set out_dir=" +
                    dir.path().string());
  ASSERT_EQ(r.status, 0) << r.out;
  for (const char* f : {"frame_t.pfm", "frame_t1.pfm", "depth_t.pfm", "depth_t1.pfm",
                        "flow_fwd.flo", "flow_bwd.flo", "pose.txt", "occluded.pgm", "inputs.cfg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const GroundTruth gt = render(textured_plane_fixture(32));
  EXPECT_EQ(read_flo(dir / "flow_fwd.flo").width(), 32);
  EXPECT_EQ(read_pfm_depth(dir / "depth_t.pfm")(3, 4), static_cast<double>(static_cast<float>(gt.depth_t(3, 4))));

  const std::string state = " --set depth_t=" + (dir / "depth_t.pfm").string() +
                            " --set depth_t1=" + (dir / "depth_t1.pfm").string() +
                            " --set pose=" + (dir / "pose.txt").string() +
                            " --set flow_fwd=" + (dir / "flow_fwd.flo").string() +
                            " --set flow_bwd=" + (dir / "flow_bwd.flo").string() +
                            " --set depth_noise=0";
  const CliRun from_files = run("loss --config " + (dir / "inputs.cfg").string() + state);
  ASSERT_EQ(from_files.status, 0) << from_files.out;
  const CliRun synthetic = run("loss --set scene=textured_plane --set scene_size=32" + state);
  ASSERT_EQ(synthetic.status, 0) << synthetic.out;
  const auto a = values(from_files.out);
  const auto b = values(synthetic.out);
  ASSERT_TRUE(a.count("total")) << from_files.out;
  // Frames pass through float32 files.
  EXPECT_NEAR(a.at("total"), b.at("total"), 1e-4 * std::max(1.0, b.at("total")));
}

TEST(Cli, RefineIsDeterministicAndWritesOutputs) {
  TempDir dir("cli_refine");
  const std::string args =
      "refine --seed 4 --set scene_size=32 --set iterations=20 --set scales=2 --set cross_scales=2";
  const CliRun a = run(args + " --set out_dir=" + (dir / "a").string());
  const CliRun b = run(args + " --set out_dir=" + (dir / "b").string());
  ASSERT_EQ(a.status, 0) << a.out;
  ASSERT_EQ(b.status, 0) << b.out;
  EXPECT_EQ(a.out.substr(0, a.out.find("depth_abs_rel")), b.out.substr(0, b.out.find("depth_abs_rel")));
  EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
  EXPECT_EQ(slurp(dir / "a" / "depth_t.pfm"), slurp(dir / "b" / "depth_t.pfm"));
  const auto v = values(a.out);
  EXPECT_EQ(v.at("iterations"), 20.0);
  EXPECT_LT(v.at("final_total"), v.at("initial_total"));
  EXPECT_TRUE(v.count("depth_abs_rel"));

  const CliRun other = run("refine --seed 5 --set scene_size=32 --set iterations=20 --set scales=2 "
                        "--set cross_scales=2 --set out_dir=" + (dir / "c").string());
  ASSERT_EQ(other.status, 0);
  EXPECT_NE(slurp(dir / "a" / "trace.csv"), slurp(dir / "c" / "trace.csv"));
}

TEST(Cli, MissingInputFileFails) {
  const CliRun r = run("eval-depth --est /nonexistent/a.pfm --gt /nonexistent/b.pfm");
  EXPECT_NE(r.status, 0);
}

TEST(Cli, EvalDepthReportsSevenMetrics) {
  TempDir dir("cli_depth");
  std::mt19937_64 rng(9);
  write_pfm(dir / "a.pfm", random_depth(rng, 10, 10));
  const CliRun r = run("eval-depth --est " + (dir / "a.pfm").string() + " --gt " +
                    (dir / "a.pfm").string() + " --no-median-scaling");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto v = values(r.out);
  EXPECT_EQ(v.size(), 7u) << r.out;
  EXPECT_EQ(v.at("abs_rel"), 0.0);
  EXPECT_EQ(v.at("a1"), 1.0);
}

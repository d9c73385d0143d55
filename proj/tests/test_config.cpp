#include <gtest/gtest.h>

#include <fstream>

#include "geocon/config.hpp"
#include "test_support.hpp"

using namespace geocon;
using geocon::test::TempDir;

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  const KeyValues kv = KeyValues::parse("# header\n  a = 1.5  \nb=hello # trailing\n\nc = 1 2 3\n");
  EXPECT_EQ(kv.get_double("a"), 1.5);
  EXPECT_EQ(kv.get_string("b"), "hello");
  EXPECT_EQ(kv.get_doubles("c", 3), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(kv.entries().size(), 3u);
}

TEST(KeyValues, Errors) {
  EXPECT_THROW(KeyValues::parse("novalue\n"), InvalidArgument);
  EXPECT_THROW(KeyValues::parse(" = 3\n"), InvalidArgument);
  const KeyValues kv = KeyValues::parse("n = 3.5\nb = maybe\nl = 1 2\n");
  EXPECT_THROW(kv.get_int("n"), InvalidArgument);
  EXPECT_THROW(kv.get_bool("b"), InvalidArgument);
  EXPECT_THROW(kv.get_doubles("l", 3), InvalidArgument);
  EXPECT_THROW(kv.get_string("missing"), InvalidArgument);
  EXPECT_THROW(KeyValues::load("/nonexistent/geocon.cfg"), IoError);
}

TEST(KeyValues, OverridesReplaceValues) {
  KeyValues kv = KeyValues::parse("lambda_c = 0.2\n");
  kv.apply_override("lambda_c=0");
  kv.apply_override(" iterations = 5 ");
  EXPECT_EQ(kv.get_double("lambda_c"), 0.0);
  EXPECT_EQ(kv.get_int("iterations"), 5);
  EXPECT_THROW(kv.apply_override("oops"), InvalidArgument);
}

TEST(KeyValues, BooleansAndPaths) {
  KeyValues kv = KeyValues::parse("x = yes\ny = off\np = data/a.pfm\nq = /abs/b.pfm\n");
  kv.set_base_dir("/root/cfg");
  EXPECT_TRUE(kv.get_bool("x"));
  EXPECT_FALSE(kv.get_bool("y"));
  EXPECT_EQ(kv.get_path("p"), std::filesystem::path("/root/cfg/data/a.pfm"));
  EXPECT_EQ(kv.get_path("q"), std::filesystem::path("/abs/b.pfm"));
}

TEST(RunConfig, DefaultsAndOverrides) {
  const RunConfig d = parse_run_config(KeyValues{});
  EXPECT_EQ(d.optimizer.learning_rate, 1e-2);
  EXPECT_EQ(d.optimizer.objective.weights.lambda_s, 3.0);
  EXPECT_EQ(d.scene, "textured_plane");

  const KeyValues kv = KeyValues::parse(
      "learning_rate = 0.005\niterations = 10\nlambda_c = 0\nscales = 2\ncross_scales = 1\n"
      "gating = intersection\nterms = photometric_rigid, cross\nseed = 17\nscene = mover\n"
      "scale_weights = 1 0.5\nflow_noise = 1\nintrinsics = 50 50 20 20\n");
  const RunConfig rc = parse_run_config(kv);
  EXPECT_EQ(rc.optimizer.learning_rate, 0.005);
  EXPECT_EQ(rc.optimizer.iterations, 10);
  EXPECT_EQ(rc.optimizer.objective.weights.lambda_c, 0.0);
  EXPECT_EQ(rc.optimizer.objective.gating, PhotometricGating::kIntersection);
  EXPECT_TRUE(rc.optimizer.objective.terms.photometric_rigid);
  EXPECT_TRUE(rc.optimizer.objective.terms.cross);
  EXPECT_FALSE(rc.optimizer.objective.terms.smooth_depth);
  EXPECT_EQ(rc.optimizer.objective.scale_weights, (std::vector<double>{1, 0.5}));
  EXPECT_EQ(rc.seed, 17u);
  EXPECT_EQ(rc.scene, "mover");
  ASSERT_TRUE(rc.intrinsics.has_value());
  EXPECT_EQ(rc.intrinsics->cx, 20.0);
}

TEST(RunConfig, RejectsBadInput) {
  EXPECT_THROW(parse_run_config(KeyValues::parse("lamda_c = 0.2\n")), InvalidArgument);
  EXPECT_THROW(parse_run_config(KeyValues::parse("learning_rate = -1\n")), InvalidArgument);
  EXPECT_THROW(parse_run_config(KeyValues::parse("gating = sometimes\n")), InvalidArgument);
  EXPECT_THROW(parse_run_config(KeyValues::parse("terms = everything\n")), InvalidArgument);
  EXPECT_THROW(parse_run_config(KeyValues::parse("depth_noise = 1.5\n")), InvalidArgument);
  EXPECT_THROW(parse_run_config(KeyValues::parse("frame_t = /nonexistent.pgm\n")), InvalidArgument);
  EXPECT_THROW(parse_run_config(KeyValues::parse("scene = nowhere.scene\n")), InvalidArgument);
}

TEST(SceneSpec, FormatParseRoundTrip) {
  for (const SceneSpec& spec : {textured_plane_fixture(32), mover_fixture(48), random_scene(3, 20, 16)}) {
    const SceneSpec back = parse_scene_spec(KeyValues::parse(format_scene_spec(spec)));
    EXPECT_EQ(back.width, spec.width);
    EXPECT_EQ(back.planes.size(), spec.planes.size());
    EXPECT_EQ(back.movers.size(), spec.movers.size());
    const GroundTruth a = render(spec);
    const GroundTruth b = render(back);
    for (std::size_t i = 0; i < a.depth_t.size(); ++i) {
      EXPECT_NEAR(a.depth_t[i], b.depth_t[i], 1e-12);
      EXPECT_NEAR(a.flow_fwd.u()[i], b.flow_fwd.u()[i], 1e-9);
      EXPECT_NEAR(a.frame_t1.plane()[i], b.frame_t1.plane()[i], 1e-9);
    }
  }
}

TEST(SceneSpec, BaseWithOverrides) {
  const SceneSpec s = parse_scene_spec(KeyValues::parse(
      "base = mover\nwidth = 32\nheight = 32\nmover.0.motion = 2 -1\nmotion.translation = 0.1 0 0\n"));
  EXPECT_EQ(s.width, 32);
  EXPECT_EQ(s.movers.at(0).motion, Vec2(2, -1));
  EXPECT_EQ(s.camera_motion.translation(), Vec3(0.1, 0, 0));
  EXPECT_THROW(parse_scene_spec(KeyValues::parse("plane.0.colour = red\n")), InvalidArgument);
  EXPECT_THROW(parse_scene_spec(KeyValues::parse("base = cube\n")), InvalidArgument);
}

TEST(SceneSpec, ResolveFromFileRelativeToBase) {
  TempDir dir("cfg");
  {
    std::ofstream out(dir / "s.scene");
    out << format_scene_spec(mover_fixture(16));
  }
  const SceneSpec s = resolve_scene("s.scene", 64, dir.path());
  EXPECT_EQ(s.width, 16);
  EXPECT_EQ(resolve_scene("textured_plane", 24, {}).width, 24);
}

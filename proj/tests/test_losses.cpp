#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "geocon/image_sampling.hpp"
#include "geocon/losses.hpp"
#include "geocon/synthetic_scenes.hpp"
#include "test_support.hpp"

using namespace geocon;
using geocon::test::random_depth;
using geocon::test::random_flow;
using geocon::test::random_grid;
using geocon::test::random_image;

namespace {

ValidMask random_mask(std::mt19937_64& rng, int w, int h, double p = 0.7) {
  std::bernoulli_distribution b(p);
  ValidMask m(w, h, 0);
  for (auto& v : m.values()) v = b(rng) ? 1 : 0;
  return m;
}

double photometric_oracle(const Grid<double>& a, const Grid<double>& b, const ValidMask& mask,
                          const CensusParams& p) {
  const int w = a.width(), h = a.height();
  double total = 0.0;
  double count = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      count += 1.0;
      double s = 0.0;
      for (int dy = -p.radius; dy <= p.radius; ++dy) {
        for (int dx = -p.radius; dx <= p.radius; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int qx = x + dx, qy = y + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const double da = a(qx, qy) - a(x, y);
          const double db = b(qx, qy) - b(x, y);
          const double ta = da / std::sqrt(da * da + p.epsilon * p.epsilon);
          const double tb = db / std::sqrt(db * db + p.epsilon * p.epsilon);
          const double delta = ta - tb;
          s += delta * delta / (0.1 + delta * delta);
        }
      }
      total += std::sqrt(s * s + p.charbonnier_eps * p.charbonnier_eps) - p.charbonnier_eps;
    }
  }
  return count > 0 ? total / count : 0.0;
}

double tv_oracle(const Grid<double>& f, const ImageBuffer& guide) {
  double s = 0.0;
  auto weight = [&](int ax, int ay, int bx, int by) {
    double d = 0.0;
    for (int c = 0; c < guide.channels(); ++c) d += std::abs(guide(ax, ay, c) - guide(bx, by, c));
    return std::exp(-d / guide.channels());
  };
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (x + 1 < f.width()) s += std::abs(f(x + 1, y) - f(x, y)) * weight(x + 1, y, x, y);
      if (y + 1 < f.height()) s += std::abs(f(x, y + 1) - f(x, y)) * weight(x, y + 1, x, y);
    }
  }
  return s;
}

// Scaled difference of an analytic and a numeric derivative; the floor absorbs
// the roundoff of central differences on entries close to zero.
double grad_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

double charb(double x, double e = kDefaultCharbonnierEps) { return std::sqrt(x * x + e * e) - e; }

// Central difference of f with respect to the value at *slot.
double central_difference(double* slot, const std::function<double()>& f, double h = 1e-6) {
  const double orig = *slot;
  *slot = orig + h;
  const double fp = f();
  *slot = orig - h;
  const double fm = f();
  *slot = orig;
  return (fp - fm) / (2 * h);
}

}  // namespace

TEST(Charbonnier, ZeroAtZeroAndApproachesAbs) {
  EXPECT_EQ(charbonnier(0.0, 1e-3), 0.0);
  EXPECT_NEAR(charbonnier(5.0, 1e-3), 5.0, 1e-3);
  EXPECT_NEAR(charbonnier(-5.0, 1e-3), 5.0, 1e-3);
  EXPECT_NEAR(charbonnier_derivative(2.0, 1e-3), 1.0, 1e-6);
}

TEST(Census, ConstantImageHasZeroDescriptor) {
  const CensusDescriptor d = census_descriptor(ImageBuffer(5, 4, 1, 0.3));
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) {
      for (int k = 0; k < d.taps(); ++k) {
        EXPECT_EQ(d.ternary(x, y, k), 0);
        EXPECT_EQ(d.soft(x, y, k), 0.0);
      }
    }
  }
}

TEST(Census, StepEdgeHandEnumeration) {
  // Left column 0, middle column 0.5, right column 1.
  ImageBuffer img(3, 3);
  for (int y = 0; y < 3; ++y) {
    img(0, y) = 0.0;
    img(1, y) = 0.5;
    img(2, y) = 1.0;
  }
  CensusParams p;
  p.epsilon = 0.01;
  const CensusDescriptor d = census_descriptor(img, p);
  // Taps in row-major patch order: (-1,-1) (0,-1) (1,-1) (-1,0) (1,0) (-1,1) (0,1) (1,1).
  const int expected[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  for (int k = 0; k < 8; ++k) {
    EXPECT_EQ(d.ternary(1, 1, k), expected[k]) << "tap " << k;
    EXPECT_TRUE(d.valid(1, 1, k));
  }
  // Corner pixel: only three neighbors are inside.
  int inside = 0;
  for (int k = 0; k < 8; ++k) inside += d.valid(0, 0, k);
  EXPECT_EQ(inside, 3);
}

TEST(Census, AdditiveShiftLeavesDescriptorUnchanged) {
  std::mt19937_64 rng(1);
  ImageBuffer img = random_image(rng, 8, 8);
  ImageBuffer shifted = img;
  for (auto& v : shifted.plane().values()) v += 0.25;
  const CensusDescriptor a = census_descriptor(img);
  const CensusDescriptor b = census_descriptor(shifted);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      for (int k = 0; k < a.taps(); ++k) {
        EXPECT_EQ(a.ternary(x, y, k), b.ternary(x, y, k));
        EXPECT_NEAR(a.soft(x, y, k), b.soft(x, y, k), 1e-12);
      }
    }
  }
}

TEST(Census, ColorInputIsAveraged) {
  std::mt19937_64 rng(2);
  const ImageBuffer color = random_image(rng, 6, 5, 3);
  const CensusDescriptor a = census_descriptor(color);
  const CensusDescriptor b = census_descriptor(color.to_gray());
  EXPECT_EQ(a.difference(2, 2, 3), b.difference(2, 2, 3));
}

TEST(Photometric, IdenticalImagesGiveZero) {
  std::mt19937_64 rng(3);
  const ImageBuffer img = random_image(rng, 10, 10);
  const PhotometricLoss l = photometric_loss(img, img, ValidMask::full(10, 10));
  EXPECT_EQ(l.value, 0.0);
  EXPECT_FALSE(l.degenerate_mask);
}

TEST(Photometric, UniformShiftOfWarpedGivesZero) {
  std::mt19937_64 rng(4);
  const ImageBuffer img = random_image(rng, 10, 10);
  ImageBuffer warped = img;
  for (auto& v : warped.plane().values()) v += 0.1;
  EXPECT_LT(photometric_loss(img, warped, ValidMask::full(10, 10)).value, 1e-9);
}

TEST(Photometric, MatchesScalarOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const ImageBuffer a = random_image(rng, 11, 9);
    const ImageBuffer b = random_image(rng, 11, 9);
    const ValidMask m = random_mask(rng, 11, 9);
    CensusParams p;
    p.radius = 1 + trial % 2;
    EXPECT_NEAR(photometric_loss(a, b, m, p).value,
                photometric_oracle(a.plane(), b.plane(), m, p), 1e-10);
  }
}

TEST(Photometric, EmptyMaskIsDegenerate) {
  const ImageBuffer a(4, 4, 1, 0.2), b(4, 4, 1, 0.7);
  const PhotometricLoss l = photometric_loss(a, b, ValidMask::none(4, 4));
  EXPECT_TRUE(l.degenerate_mask);
  EXPECT_EQ(l.value, 0.0);
}

TEST(Photometric, ShapeMismatchThrows) {
  EXPECT_THROW(photometric_loss(ImageBuffer(4, 4), ImageBuffer(4, 5), ValidMask::full(4, 4)),
               InvalidArgument);
}

TEST(Photometric, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const ImageBuffer a = random_image(rng, 9, 8);
  ImageBuffer b = random_image(rng, 9, 8);
  const ValidMask m = random_mask(rng, 9, 8);
  const PhotometricLoss l = photometric_loss(a, b, m);
  for (std::size_t i = 0; i < b.plane().size(); ++i) {
    const double fd = central_difference(&b.plane()[i], [&] { return photometric_loss(a, b, m).value; });
    EXPECT_LT(grad_error(l.grad_warped[i], fd), 1e-5) << i;
  }
}

TEST(Smoothness, ConstantFieldIsZero) {
  std::mt19937_64 rng(7);
  const ImageBuffer guide = random_image(rng, 8, 6);
  EXPECT_EQ(smoothness_loss(DepthMap(8, 6, 3.0), guide).value, 0.0);
  EXPECT_EQ(smoothness_loss(FlowField(8, 6, 1.0, -2.0), guide).value, 0.0);
}

TEST(Smoothness, RampWithConstantGuide) {
  // u = 0.5 x on an 8x6 grid: 7 * 6 horizontal differences of 0.5, no vertical change.
  FlowField f(8, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) f.u()(x, y) = 0.5 * x;
  }
  const double value = smoothness_loss(f, ImageBuffer(8, 6, 1, 0.4)).value;
  EXPECT_NEAR(value * 48.0, 0.5 * 42.0, 1e-12);
}

TEST(Smoothness, GuideEdgeLowersPenalty) {
  FlowField f(8, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) f.u()(x, y) = x < 4 ? 0.0 : 3.0;
  }
  ImageBuffer edge(8, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 4; x < 8; ++x) edge(x, y) = 1.0;
  }
  EXPECT_LT(smoothness_loss(f, edge).value, smoothness_loss(f, ImageBuffer(8, 4)).value);
}

TEST(Smoothness, DepthMatchesScalarOracle) {
  std::mt19937_64 rng(8);
  const DepthMap d = random_depth(rng, 10, 7);
  const ImageBuffer guide = random_image(rng, 10, 7, 3);
  double mean = 0.0;
  for (double v : d.values()) mean += v;
  mean /= 70.0;
  Grid<double> normalized(10, 7);
  for (std::size_t i = 0; i < d.size(); ++i) normalized[i] = d[i] / mean;
  EXPECT_NEAR(smoothness_loss(d, guide).value, tv_oracle(normalized, guide) / 70.0, 1e-12);
}

TEST(Smoothness, DepthIsScaleInvariant) {
  std::mt19937_64 rng(9);
  const DepthMap d = random_depth(rng, 10, 7);
  const ImageBuffer guide = random_image(rng, 10, 7);
  DepthMap scaled = d;
  for (auto& v : scaled.values()) v *= 7.0;
  EXPECT_NEAR(smoothness_loss(d, guide).value, smoothness_loss(scaled, guide).value, 1e-12);
}

TEST(Smoothness, FlowMatchesScalarOracle) {
  std::mt19937_64 rng(10);
  const FlowField f = random_flow(rng, 9, 9, 2.0);
  const ImageBuffer guide = random_image(rng, 9, 9);
  EXPECT_NEAR(smoothness_loss(f, guide).value,
              (tv_oracle(f.u(), guide) + tv_oracle(f.v(), guide)) / 81.0, 1e-12);
}

TEST(Smoothness, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  DepthMap d = random_depth(rng, 7, 6);
  FlowField f = random_flow(rng, 7, 6, 2.0);
  const ImageBuffer guide = random_image(rng, 7, 6);
  const DepthSmoothness ds = smoothness_loss(d, guide);
  const FlowSmoothness fs = smoothness_loss(f, guide);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double fd = central_difference(&d[i], [&] { return smoothness_loss(d, guide).value; });
    EXPECT_LT(grad_error(ds.gradient[i], fd), 1e-5);
    const double fu = central_difference(&f.u()[i], [&] { return smoothness_loss(f, guide).value; });
    const double fv = central_difference(&f.v()[i], [&] { return smoothness_loss(f, guide).value; });
    EXPECT_LT(grad_error(fs.gradient.u()[i], fu), 1e-5);
    EXPECT_LT(grad_error(fs.gradient.v()[i], fv), 1e-5);
  }
}

TEST(FbFlow, OppositeConstantFieldsGiveZero) {
  const FlowField fwd(8, 8, 1.5, -0.5), bwd(8, 8, -1.5, 0.5);
  EXPECT_EQ(fb_flow_loss(fwd, bwd, ValidMask::full(8, 8)).value, 0.0);
}

TEST(FbFlow, UnitForwardZeroBackward) {
  const FbFlowLoss l = fb_flow_loss(FlowField(6, 6, 1.0, 0.0), FlowField(6, 6), ValidMask::full(6, 6));
  EXPECT_DOUBLE_EQ(l.value, charb(1.0));
  EXPECT_NEAR(l.value, 1.0, 1.1e-3);
}

TEST(FbFlow, MatchesScalarOracle) {
  std::mt19937_64 rng(12);
  const FlowField fwd = random_flow(rng, 10, 8, 2.0);
  const FlowField bwd = random_flow(rng, 10, 8, 2.0);
  const ValidMask m = random_mask(rng, 10, 8);
  double s = 0.0, n = 0.0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (!m(x, y)) continue;
      const double tx = x + fwd.u()(x, y), ty = y + fwd.v()(x, y);
      s += charb(fwd.u()(x, y) + sample_bilinear(bwd.u(), tx, ty).value) +
           charb(fwd.v()(x, y) + sample_bilinear(bwd.v(), tx, ty).value);
      n += 1.0;
    }
  }
  EXPECT_NEAR(fb_flow_loss(fwd, bwd, m).value, s / n, 1e-10);
}

TEST(FbFlow, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(13);
  FlowField fwd = random_flow(rng, 8, 7, 1.7);
  FlowField bwd = random_flow(rng, 8, 7, 1.7);
  const ValidMask m = random_mask(rng, 8, 7);
  const FbFlowLoss l = fb_flow_loss(fwd, bwd, m);
  auto value = [&] { return fb_flow_loss(fwd, bwd, m).value; };
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    EXPECT_LT(grad_error(l.grad_fwd.u()[i], central_difference(&fwd.u()[i], value)), 1e-5);
    EXPECT_LT(grad_error(l.grad_fwd.v()[i], central_difference(&fwd.v()[i], value)), 1e-5);
    EXPECT_LT(grad_error(l.grad_bwd.u()[i], central_difference(&bwd.u()[i], value)), 1e-5);
    EXPECT_LT(grad_error(l.grad_bwd.v()[i], central_difference(&bwd.v()[i], value)), 1e-5);
  }
}

TEST(FbFlow, EmptyMaskIsDegenerate) {
  const FbFlowLoss l = fb_flow_loss(FlowField(3, 3, 1.0), FlowField(3, 3), ValidMask::none(3, 3));
  EXPECT_TRUE(l.degenerate_mask);
  EXPECT_EQ(l.value, 0.0);
}

TEST(FbDepth, ConstantDepthsZeroFlow) {
  const FbDepthLoss l =
      fb_depth_loss(DepthMap(5, 5, 2.0), DepthMap(5, 5, 3.0), FlowField(5, 5), ValidMask::full(5, 5));
  EXPECT_DOUBLE_EQ(l.value, charb(1.0));
}

TEST(FbDepth, StaticPlaneIdentityPose) {
  const DepthMap d(6, 6, 4.0);
  EXPECT_EQ(fb_depth_loss(d, d, FlowField(6, 6), ValidMask::full(6, 6)).value, 0.0);
}

TEST(FbDepth, TranslatingCameraPlaneScene) {
  SceneSpec spec;
  spec.width = spec.height = 32;
  spec.intrinsics = {32.0, 32.0, 15.5, 15.5};
  PlaneSpec plane;
  plane.offset = 4.0;
  spec.planes.push_back(plane);
  spec.camera_motion = PoseSE3(Mat3::Identity(), Vec3(0.3, 0.1, 0.0));
  const GroundTruth gt = render(spec);
  const FbDepthLoss l =
      fb_depth_loss(gt.depth_t, gt.depth_t1, gt.flow_fwd, gt.static_visible());
  EXPECT_LT(l.value, 1e-6);
}

TEST(FbDepth, MatchesScalarOracleAndGradients) {
  std::mt19937_64 rng(14);
  DepthMap dt = random_depth(rng, 8, 7);
  DepthMap dt1 = random_depth(rng, 8, 7);
  FlowField rigid = random_flow(rng, 8, 7, 2.0);
  const ValidMask m = random_mask(rng, 8, 7);
  double s = 0.0, n = 0.0;
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (!m(x, y)) continue;
      s += charb(dt(x, y) - sample_bilinear(dt1, x + rigid.u()(x, y), y + rigid.v()(x, y)).value);
      n += 1.0;
    }
  }
  const FbDepthLoss l = fb_depth_loss(dt, dt1, rigid, m);
  EXPECT_NEAR(l.value, s / n, 1e-10);
  auto value = [&] { return fb_depth_loss(dt, dt1, rigid, m).value; };
  for (std::size_t i = 0; i < dt.size(); ++i) {
    EXPECT_LT(grad_error(l.grad_depth_t[i], central_difference(&dt[i], value)), 1e-5);
    EXPECT_LT(grad_error(l.grad_depth_t1[i], central_difference(&dt1[i], value)), 1e-5);
    EXPECT_LT(grad_error(l.grad_flow.u()[i], central_difference(&rigid.u()[i], value)), 1e-5);
    EXPECT_LT(grad_error(l.grad_flow.v()[i], central_difference(&rigid.v()[i], value)), 1e-5);
  }
}

TEST(Cross, EqualFlowsGiveZero) {
  std::mt19937_64 rng(15);
  const FlowField f = random_flow(rng, 6, 6, 3.0);
  EXPECT_EQ(cross_task_loss(f, f, ValidMask::full(6, 6)).value, 0.0);
}

TEST(Cross, ConstantOffset) {
  const CrossTaskLoss l = cross_task_loss(FlowField(5, 4, 2.0, 0.0), FlowField(5, 4), ValidMask::full(5, 4));
  EXPECT_DOUBLE_EQ(l.value, charb(2.0));
  EXPECT_NEAR(l.value, 2.0, 1.1e-3);
}

TEST(Cross, MatchesScalarOracleAndGradients) {
  std::mt19937_64 rng(16);
  FlowField rigid = random_flow(rng, 9, 8, 3.0);
  FlowField flow = random_flow(rng, 9, 8, 3.0);
  const ValidMask m = random_mask(rng, 9, 8);
  double s = 0.0, n = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    s += charb(rigid.u()[i] - flow.u()[i]) + charb(rigid.v()[i] - flow.v()[i]);
    n += 1.0;
  }
  const CrossTaskLoss l = cross_task_loss(rigid, flow, m);
  EXPECT_NEAR(l.value, s / n, 1e-10);
  auto value = [&] { return cross_task_loss(rigid, flow, m).value; };
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_LT(grad_error(l.grad_rigid.u()[i], central_difference(&rigid.u()[i], value)), 1e-5);
    EXPECT_LT(grad_error(l.grad_flow.v()[i], central_difference(&flow.v()[i], value)), 1e-5);
  }
}

TEST(Cross, EmptyMaskIsDegenerate) {
  const CrossTaskLoss l = cross_task_loss(FlowField(3, 3, 1.0), FlowField(3, 3), ValidMask::none(3, 3));
  EXPECT_TRUE(l.degenerate_mask);
}

TEST(LossParams, Validation) {
  EXPECT_THROW((LossWeights{-1.0, 0.2, 0.2}.validate()), InvalidArgument);
  EXPECT_THROW((LossWeights{3.0, NAN, 0.2}.validate()), InvalidArgument);
  EXPECT_THROW((CensusParams{0, 0.02, 1e-3}.validate()), InvalidArgument);
  EXPECT_THROW((CensusParams{1, 0.0, 1e-3}.validate()), InvalidArgument);
}

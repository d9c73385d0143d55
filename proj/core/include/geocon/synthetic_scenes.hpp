#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "geocon/camera_geometry.hpp"
#include "geocon/raster.hpp"

namespace geocon {

/// Multi-octave value noise. Each octave doubles the frequency and scales the
/// amplitude by persistence.
struct TextureParams {
  int octaves = 3;
  /// Lattice spacing of the coarsest octave, in meters on plane surfaces.
  double base_period = 1.0;
  double persistence = 0.5;
  /// 0 renders a flat gray surface.
  double contrast = 1.0;
};

/// Smooth value noise in [0, 1] at continuous coordinates (x, y) in lattice
/// units of the first octave.
double value_noise(double x, double y, std::uint64_t seed, int octaves, double persistence);

/// Plane n . X = offset in frame-t camera coordinates (normal is normalized
/// on use). An extent bounds the plane in its own tangent coordinates.
struct PlaneSpec {
  Vec3 normal = Vec3::UnitZ();
  double offset = 5.0;
  std::uint64_t texture_seed = 1;
  /// (u_min, u_max, v_min, v_max) in meters; unbounded when empty.
  std::optional<std::array<double, 4>> extent;
};

/// Image-space patch with its own texture that moves independently of the
/// camera: it covers pixels [x, x+width) x [y, y+height) in frame t and the
/// same rectangle shifted by motion in frame t+1, at constant depth.
struct MoverSpec {
  int x = 0;
  int y = 0;
  int width = 8;
  int height = 8;
  Vec2 motion = Vec2::Zero();
  double depth = 2.0;
  std::uint64_t texture_seed = 99;
  /// Lattice spacing of the mover texture in pixels.
  double texture_period = 6.0;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  Intrinsics intrinsics{64.0, 64.0, 31.5, 31.5};
  std::vector<PlaneSpec> planes;
  PoseSE3 camera_motion;
  std::vector<MoverSpec> movers;
  TextureParams texture;

  void validate() const;
};

struct GroundTruth {
  ImageBuffer frame_t;
  ImageBuffer frame_t1;
  DepthMap depth_t;
  DepthMap depth_t1;
  PoseSE3 pose;
  FlowField flow_fwd;
  FlowField flow_bwd;
  /// Frame-t pixels with no visible correspondence in frame t+1 (out of view
  /// or hidden behind nearer geometry).
  ValidMask occluded;
  /// Same for frame-t+1 pixels with respect to frame t.
  ValidMask occluded_t1;
  /// Frame-t pixels covered by a mover.
  ValidMask movers;
  /// Frame-t+1 pixels covered by a mover.
  ValidMask movers_t1;

  /// Frame-t pixels that are neither occluded nor on a mover.
  ValidMask static_visible() const;
};

/// Analytic ray-plane rendering of both frames with exact depth, flow and
/// occlusion. Throws InvalidArgument when a plane is behind the camera or a
/// pixel sees no surface.
GroundTruth render(const SceneSpec& spec);

/// Textured plane tilted about both image axes, camera translating parallel
/// to the image plane.
SceneSpec textured_plane_fixture(int size = 64);

/// Fronto-parallel background with one independently moving patch.
SceneSpec mover_fixture(int size = 64);

/// Random tilted plane and random small camera motion.
SceneSpec random_scene(std::uint64_t seed, int width, int height);

}  // namespace geocon

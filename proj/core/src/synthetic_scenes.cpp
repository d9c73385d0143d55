#include "geocon/synthetic_scenes.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Geometry>

#include "geocon/parallel.hpp"

namespace geocon {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) * 0x8da6b343ULL ^
                                                 splitmix64(static_cast<std::uint64_t>(j))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double noise_octave(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto i = static_cast<std::int64_t>(fx);
  const auto j = static_cast<std::int64_t>(fy);
  const double u = fade(x - fx);
  const double v = fade(y - fy);
  const double a = lattice(i, j, seed);
  const double b = lattice(i + 1, j, seed);
  const double c = lattice(i, j + 1, seed);
  const double d = lattice(i + 1, j + 1, seed);
  const double top = a + u * (b - a);
  const double bottom = c + u * (d - c);
  return top + v * (bottom - top);
}

struct PlaneFrame {
  Vec3 normal;
  double offset;
  Vec3 tangent_u;
  Vec3 tangent_v;
  const PlaneSpec* spec;
};

PlaneFrame make_frame(const PlaneSpec& p) {
  PlaneFrame f{};
  const double norm = p.normal.norm();
  if (!(norm > 0.0)) throw InvalidArgument("plane normal must be nonzero");
  f.normal = p.normal / norm;
  f.offset = p.offset / norm;
  const Vec3 helper = std::abs(f.normal.y()) < 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  f.tangent_u = helper.cross(f.normal).normalized();
  f.tangent_v = f.normal.cross(f.tangent_u);
  f.spec = &p;
  return f;
}

struct Hit {
  double lambda = std::numeric_limits<double>::infinity();
  const PlaneFrame* plane = nullptr;
  Vec3 point = Vec3::Zero();
};

// Nearest intersection of origin + lambda * dir, lambda > 0, within extents.
Hit nearest_hit(const std::vector<PlaneFrame>& planes, const Vec3& origin, const Vec3& dir) {
  Hit best;
  for (const PlaneFrame& p : planes) {
    const double denom = p.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double lambda = (p.offset - p.normal.dot(origin)) / denom;
    if (!(lambda > 1e-9) || lambda >= best.lambda) continue;
    const Vec3 x = origin + lambda * dir;
    if (p.spec->extent) {
      const auto& e = *p.spec->extent;
      const double u = x.dot(p.tangent_u);
      const double v = x.dot(p.tangent_v);
      if (u < e[0] || u > e[1] || v < e[2] || v > e[3]) continue;
    }
    best = {lambda, &p, x};
  }
  return best;
}

double surface_intensity(const PlaneFrame& p, const Vec3& x, const TextureParams& tex) {
  const double n = value_noise(x.dot(p.tangent_u) / tex.base_period,
                               x.dot(p.tangent_v) / tex.base_period, p.spec->texture_seed,
                               tex.octaves, tex.persistence);
  return std::clamp(0.5 + tex.contrast * (n - 0.5), 0.0, 1.0);
}

double mover_intensity(const MoverSpec& m, double x, double y, const TextureParams& tex) {
  const double n = value_noise(x / m.texture_period, y / m.texture_period, m.texture_seed,
                               tex.octaves, tex.persistence);
  return std::clamp(0.5 + tex.contrast * (n - 0.5), 0.0, 1.0);
}

// Frame-t pixel rectangle test at pixel centers, continuous.
bool in_mover(const MoverSpec& m, double x, double y) {
  return x >= m.x - 0.5 && x < m.x + m.width - 0.5 && y >= m.y - 0.5 && y < m.y + m.height - 0.5;
}

const MoverSpec* mover_at(const std::vector<MoverSpec>& movers, double x, double y) {
  for (const MoverSpec& m : movers) {
    if (in_mover(m, x, y)) return &m;
  }
  return nullptr;
}

const MoverSpec* moved_mover_at(const std::vector<MoverSpec>& movers, double x, double y) {
  for (const MoverSpec& m : movers) {
    if (in_mover(m, x - m.motion.x(), y - m.motion.y())) return &m;
  }
  return nullptr;
}

bool in_view(int w, int h, double x, double y) {
  return x >= 0.0 && x <= w - 1 && y >= 0.0 && y <= h - 1;
}

}  // namespace

double value_noise(double x, double y, std::uint64_t seed, int octaves, double persistence) {
  double sum = 0.0;
  double norm = 0.0;
  double amp = 1.0;
  double freq = 1.0;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * noise_octave(x * freq, y * freq, splitmix64(seed + static_cast<std::uint64_t>(o)));
    norm += amp;
    amp *= persistence;
    freq *= 2.0;
  }
  return norm > 0.0 ? sum / norm : 0.5;
}

void SceneSpec::validate() const {
  if (width < 2 || height < 2) throw InvalidArgument("scene must be at least 2x2");
  intrinsics.validate();
  if (planes.empty()) throw InvalidArgument("scene needs at least one plane");
  if (texture.octaves < 1) throw InvalidArgument("texture needs at least one octave");
  if (!(texture.base_period > 0.0)) throw InvalidArgument("texture base_period must be positive");
  for (const MoverSpec& m : movers) {
    if (m.width < 1 || m.height < 1) throw InvalidArgument("mover size must be positive");
    if (!(m.depth > 0.0)) throw InvalidArgument("mover depth must be positive");
    if (!(m.texture_period > 0.0)) throw InvalidArgument("mover texture_period must be positive");
  }
}

ValidMask GroundTruth::static_visible() const {
  ValidMask out(occluded.width(), occluded.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (!occluded[i] && !movers[i]) ? 1 : 0;
  return out;
}

GroundTruth render(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  const Intrinsics& k = spec.intrinsics;
  const Mat3& r = spec.camera_motion.rotation();
  const Vec3& t = spec.camera_motion.translation();
  const Mat3 rt = r.transpose();
  const Vec3 origin_t1 = -(rt * t);

  std::vector<PlaneFrame> planes;
  planes.reserve(spec.planes.size());
  for (const PlaneSpec& p : spec.planes) planes.push_back(make_frame(p));

  // Unbounded planes must lie in front of both cameras across the whole view.
  for (const PlaneFrame& p : planes) {
    if (p.spec->extent) continue;
    for (double cy : {0.0, h - 1.0}) {
      for (double cx : {0.0, w - 1.0}) {
        const Vec3 ray = k.ray(cx, cy);
        const double denom_t = p.normal.dot(ray);
        const double denom_t1 = p.normal.dot(rt * ray);
        if (!(denom_t != 0.0 && p.offset / denom_t > 0.0) ||
            !(denom_t1 != 0.0 && (p.offset - p.normal.dot(origin_t1)) / denom_t1 > 0.0)) {
          throw InvalidArgument("plane behind camera");
        }
      }
    }
  }

  GroundTruth gt{ImageBuffer(w, h), ImageBuffer(w, h), DepthMap(w, h, 1.0), DepthMap(w, h, 1.0),
                 spec.camera_motion, FlowField(w, h), FlowField(w, h), ValidMask(w, h, 0),
                 ValidMask(w, h, 0), ValidMask(w, h, 0), ValidMask(w, h, 0)};

  auto no_surface = [](int x, int y) {
    return InvalidArgument("no surface visible at pixel (" + std::to_string(x) + ", " +
                           std::to_string(y) + ")");
  };

  // Frame t.
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (const MoverSpec* m = mover_at(spec.movers, x, y)) {
        gt.frame_t(x, y) = mover_intensity(*m, x, y, spec.texture);
        gt.depth_t(x, y) = m->depth;
        gt.movers(x, y) = 1;
        gt.flow_fwd.set(x, y, m->motion.x(), m->motion.y());
        gt.occluded(x, y) = in_view(w, h, x + m->motion.x(), y + m->motion.y()) ? 0 : 1;
        continue;
      }
      const Vec3 ray = k.ray(x, y);
      const Hit hit = nearest_hit(planes, Vec3::Zero(), ray);
      if (hit.plane == nullptr) throw no_surface(x, y);
      gt.frame_t(x, y) = surface_intensity(*hit.plane, hit.point, spec.texture);
      gt.depth_t(x, y) = hit.lambda;

      const Vec3 moved = r * hit.point + t;
      bool occluded = true;
      if (moved.z() > kMinCameraDepth) {
        const double px = k.fx * moved.x() / moved.z() + k.cx;
        const double py = k.fy * moved.y() / moved.z() + k.cy;
        gt.flow_fwd.set(x, y, px - x, py - y);
        if (in_view(w, h, px, py) && moved_mover_at(spec.movers, px, py) == nullptr) {
          const Hit back = nearest_hit(planes, origin_t1, rt * k.ray(px, py));
          occluded = !(back.plane != nullptr && back.lambda >= moved.z() * (1.0 - 1e-9) - 1e-9);
        }
      }
      gt.occluded(x, y) = occluded ? 1 : 0;
    }
  });

  // Frame t+1.
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (const MoverSpec* m = moved_mover_at(spec.movers, x, y)) {
        const double sx = x - m->motion.x();
        const double sy = y - m->motion.y();
        gt.frame_t1(x, y) = mover_intensity(*m, sx, sy, spec.texture);
        gt.depth_t1(x, y) = m->depth;
        gt.movers_t1(x, y) = 1;
        gt.flow_bwd.set(x, y, -m->motion.x(), -m->motion.y());
        gt.occluded_t1(x, y) = in_view(w, h, sx, sy) ? 0 : 1;
        continue;
      }
      const Vec3 dir = rt * k.ray(x, y);
      const Hit hit = nearest_hit(planes, origin_t1, dir);
      if (hit.plane == nullptr) throw no_surface(x, y);
      gt.frame_t1(x, y) = surface_intensity(*hit.plane, hit.point, spec.texture);
      gt.depth_t1(x, y) = hit.lambda;

      const Vec3& back = hit.point;  // frame-t coordinates
      bool occluded = true;
      if (back.z() > kMinCameraDepth) {
        const double px = k.fx * back.x() / back.z() + k.cx;
        const double py = k.fy * back.y() / back.z() + k.cy;
        gt.flow_bwd.set(x, y, px - x, py - y);
        if (in_view(w, h, px, py) && mover_at(spec.movers, px, py) == nullptr) {
          const Hit front = nearest_hit(planes, Vec3::Zero(), k.ray(px, py));
          occluded = !(front.plane != nullptr && front.lambda >= back.z() * (1.0 - 1e-9) - 1e-9);
        }
      }
      gt.occluded_t1(x, y) = occluded ? 1 : 0;
    }
  });
  return gt;
}

SceneSpec textured_plane_fixture(int size) {
  SceneSpec s;
  s.width = size;
  s.height = size;
  s.intrinsics = {static_cast<double>(size), static_cast<double>(size), 0.5 * (size - 1),
                  0.5 * (size - 1)};
  PlaneSpec plane;
  plane.normal = Vec3(0.05, -0.1, 1.0);
  plane.offset = 5.0;
  plane.texture_seed = 7;
  s.planes.push_back(plane);
  s.camera_motion = PoseSE3(Mat3::Identity(), Vec3(0.25, 0.08, 0.0));
  return s;
}

SceneSpec mover_fixture(int size) {
  SceneSpec s;
  s.width = size;
  s.height = size;
  s.intrinsics = {static_cast<double>(size), static_cast<double>(size), 0.5 * (size - 1),
                  0.5 * (size - 1)};
  PlaneSpec background;
  background.normal = Vec3::UnitZ();
  background.offset = 6.0;
  background.texture_seed = 11;
  s.planes.push_back(background);
  s.camera_motion = PoseSE3(Mat3::Identity(), Vec3(0.3, 0.0, 0.0));
  const double scale = size / 64.0;
  MoverSpec m;
  m.x = static_cast<int>(std::lround(24 * scale));
  m.y = static_cast<int>(std::lround(24 * scale));
  m.width = static_cast<int>(std::lround(12 * scale));
  m.height = static_cast<int>(std::lround(12 * scale));
  m.motion = Vec2(-8.0 * scale, 3.0 * scale);
  m.depth = 3.0;
  m.texture_seed = 23;
  s.movers.push_back(m);
  return s;
}

SceneSpec random_scene(std::uint64_t seed, int width, int height) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SceneSpec s;
  s.width = width;
  s.height = height;
  const double f = std::max(width, height);
  s.intrinsics = {f * (1.0 + 0.1 * unit(rng)), f * (1.0 + 0.1 * unit(rng)), 0.5 * (width - 1),
                  0.5 * (height - 1)};
  PlaneSpec plane;
  plane.normal = Vec3(0.2 * unit(rng), 0.2 * unit(rng), 1.0);
  plane.offset = 4.0 + unit(rng);
  plane.texture_seed = splitmix64(seed);
  s.planes.push_back(plane);
  const Vec3 omega(0.01 * unit(rng), 0.01 * unit(rng), 0.01 * unit(rng));
  const Vec3 trans(0.15 * unit(rng), 0.1 * unit(rng), 0.05 * unit(rng));
  s.camera_motion = PoseSE3(so3_exp(omega), trans);
  // Roughly four pixels per lattice cell at depth 4.
  s.texture.base_period = 16.0 / f;
  return s;
}

}  // namespace geocon

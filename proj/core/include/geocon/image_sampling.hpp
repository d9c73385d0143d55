#pragma once

#include <span>
#include <vector>

#include "geocon/camera_geometry.hpp"
#include "geocon/raster.hpp"

namespace geocon {

/// Bilinear sample of a single plane plus its derivative with respect to the
/// sampling coordinates. Out-of-range coordinates are clamped to the border;
/// the derivative along a clamped axis is zero.
struct BilinearSample {
  double value = 0.0;
  double d_dx = 0.0;
  double d_dy = 0.0;
  bool in_bounds = false;
};

BilinearSample sample_bilinear(const Grid<double>& plane, double x, double y);

/// Adjoint of sample_bilinear with respect to the plane values: adds
/// weight * (bilinear weight of each neighbor) into grad.
void scatter_bilinear(Grid<double>& grad, double x, double y, double weight);

struct SampledImage {
  ImageBuffer values;
  ValidMask in_bounds;
};

/// Samples img at coords (row-major, width * height entries).
SampledImage bilinear_sample(const ImageBuffer& img, std::span<const Vec2> coords, int width,
                             int height);

/// warped(p) = img(p + flow(p)).
SampledImage inverse_warp(const ImageBuffer& target, const FlowField& flow);

/// Bilinearly warps a depth map; out-of-bounds pixels take clamped values.
Grid<double> inverse_warp(const Grid<double>& plane, const FlowField& flow);

/// 2x2 average pooling to ceil(w/2) x ceil(h/2). Border blocks that hang off
/// odd-sized inputs average the pixels they cover. Throws when either
/// dimension is 1.
Grid<double> downsample(const Grid<double>& plane);
ImageBuffer downsample(const ImageBuffer& img);
DepthMap downsample(const DepthMap& depth);
/// Also halves the flow vectors.
FlowField downsample(const FlowField& flow);

/// Transpose of downsample(Grid<double>): spreads each coarse value over the
/// fine pixels of its block, divided by the block size.
Grid<double> downsample_adjoint(const Grid<double>& coarse, int fine_width, int fine_height);

/// levels[0] is x itself; each following level is downsample of the previous.
template <typename T>
std::vector<T> build_pyramid(const T& x, int levels) {
  if (levels < 1) throw InvalidArgument("pyramid needs at least one level");
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(levels));
  out.push_back(x);
  for (int l = 1; l < levels; ++l) out.push_back(downsample(out.back()));
  return out;
}

}  // namespace geocon

#include "geocon/image_sampling.hpp"

#include <algorithm>
#include <cmath>

#include "geocon/parallel.hpp"

namespace geocon {
namespace {

struct Cell {
  int x0, y0, x1, y1;
  double fx, fy;
  bool clamped_x, clamped_y;
};

// Cell lookup on [0, n-1]. The last coordinate uses the cell to its left with
// fraction 1 so the derivative stays that cell's slope.
inline void locate(double c, int n, int& i0, int& i1, double& frac, bool& clamped) {
  clamped = !(c >= 0.0 && c <= n - 1);
  const double cc = std::isfinite(c) ? std::clamp(c, 0.0, static_cast<double>(n - 1)) : 0.0;
  if (n == 1) {
    i0 = i1 = 0;
    frac = 0.0;
    return;
  }
  i0 = std::min(static_cast<int>(std::floor(cc)), n - 2);
  i1 = i0 + 1;
  frac = cc - i0;
}

inline Cell make_cell(int w, int h, double x, double y) {
  Cell c{};
  locate(x, w, c.x0, c.x1, c.fx, c.clamped_x);
  locate(y, h, c.y0, c.y1, c.fy, c.clamped_y);
  return c;
}

}  // namespace

BilinearSample sample_bilinear(const Grid<double>& plane, double x, double y) {
  const Cell c = make_cell(plane.width(), plane.height(), x, y);
  const double v00 = plane(c.x0, c.y0);
  const double v10 = plane(c.x1, c.y0);
  const double v01 = plane(c.x0, c.y1);
  const double v11 = plane(c.x1, c.y1);
  const double top = (1.0 - c.fx) * v00 + c.fx * v10;
  const double bottom = (1.0 - c.fx) * v01 + c.fx * v11;
  BilinearSample s;
  s.value = (1.0 - c.fy) * top + c.fy * bottom;
  s.in_bounds = !c.clamped_x && !c.clamped_y;
  if (!c.clamped_x && c.x1 != c.x0) {
    s.d_dx = (1.0 - c.fy) * (v10 - v00) + c.fy * (v11 - v01);
  }
  if (!c.clamped_y && c.y1 != c.y0) s.d_dy = bottom - top;
  return s;
}

void scatter_bilinear(Grid<double>& grad, double x, double y, double weight) {
  const Cell c = make_cell(grad.width(), grad.height(), x, y);
  grad(c.x0, c.y0) += weight * (1.0 - c.fx) * (1.0 - c.fy);
  grad(c.x1, c.y0) += weight * c.fx * (1.0 - c.fy);
  grad(c.x0, c.y1) += weight * (1.0 - c.fx) * c.fy;
  grad(c.x1, c.y1) += weight * c.fx * c.fy;
}

SampledImage bilinear_sample(const ImageBuffer& img, std::span<const Vec2> coords, int width,
                             int height) {
  if (coords.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("bilinear_sample: coordinate count does not match output size");
  }
  SampledImage out{ImageBuffer(width, height, img.channels()), ValidMask(width, height, 0)};
  parallel_for(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = out.in_bounds.index(x, y);
      const Vec2& p = coords[i];
      for (int c = 0; c < img.channels(); ++c) {
        const BilinearSample s = sample_bilinear(img.plane(c), p.x(), p.y());
        out.values(x, y, c) = s.value;
        out.in_bounds[i] = s.in_bounds ? 1 : 0;
      }
    }
  });
  return out;
}

SampledImage inverse_warp(const ImageBuffer& target, const FlowField& flow) {
  require_same_shape(target, flow, "inverse_warp");
  const int w = flow.width();
  const int h = flow.height();
  std::vector<Vec2> coords(flow.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = flow.u().index(x, y);
      coords[i] = Vec2(x + flow.u()[i], y + flow.v()[i]);
    }
  }
  return bilinear_sample(target, coords, w, h);
}

Grid<double> inverse_warp(const Grid<double>& plane, const FlowField& flow) {
  require_same_shape(plane, flow, "inverse_warp");
  Grid<double> out(plane.width(), plane.height());
  parallel_for(plane.height(), [&](int y) {
    for (int x = 0; x < plane.width(); ++x) {
      out(x, y) = sample_bilinear(plane, x + flow.u()(x, y), y + flow.v()(x, y)).value;
    }
  });
  return out;
}

Grid<double> downsample(const Grid<double>& plane) {
  if (plane.width() < 2 || plane.height() < 2) {
    throw InvalidArgument("cannot downsample a " + std::to_string(plane.width()) + "x" +
                          std::to_string(plane.height()) + " raster");
  }
  const int w = (plane.width() + 1) / 2;
  const int h = (plane.height() + 1) / 2;
  Grid<double> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int fx = 2 * x + dx;
          const int fy = 2 * y + dy;
          if (plane.contains(fx, fy)) {
            sum += plane(fx, fy);
            ++n;
          }
        }
      }
      out(x, y) = sum / n;
    }
  }
  return out;
}

ImageBuffer downsample(const ImageBuffer& img) {
  std::vector<Grid<double>> planes;
  planes.reserve(static_cast<std::size_t>(img.channels()));
  for (int c = 0; c < img.channels(); ++c) planes.push_back(downsample(img.plane(c)));
  return ImageBuffer(std::move(planes));
}

DepthMap downsample(const DepthMap& depth) {
  return DepthMap(downsample(static_cast<const Grid<double>&>(depth)));
}

FlowField downsample(const FlowField& flow) {
  Grid<double> u = downsample(flow.u());
  Grid<double> v = downsample(flow.v());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] *= 0.5;
    v[i] *= 0.5;
  }
  return FlowField(std::move(u), std::move(v));
}

Grid<double> downsample_adjoint(const Grid<double>& coarse, int fine_width, int fine_height) {
  if ((fine_width + 1) / 2 != coarse.width() || (fine_height + 1) / 2 != coarse.height()) {
    throw InvalidArgument("downsample_adjoint: fine size does not match coarse level");
  }
  Grid<double> fine(fine_width, fine_height, 0.0);
  for (int y = 0; y < coarse.height(); ++y) {
    for (int x = 0; x < coarse.width(); ++x) {
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) n += fine.contains(2 * x + dx, 2 * y + dy);
      }
      const double share = coarse(x, y) / n;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          if (fine.contains(2 * x + dx, 2 * y + dy)) fine(2 * x + dx, 2 * y + dy) = share;
        }
      }
    }
  }
  return fine;
}

}  // namespace geocon

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geocon/error.hpp"

namespace geocon {

/// Dense row-major 2-D array. Pixel (x, y) lives at index y * width + x.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_area(width, height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

 private:
  static std::size_t checked_area(int width, int height) {
    if (width <= 0 || height <= 0) {
      throw InvalidArgument("raster dimensions must be positive, got " + std::to_string(width) +
                            "x" + std::to_string(height));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) +
                          "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                          "x" + std::to_string(b.height()) + ")");
  }
}

/// Per-pixel depth in meters.
class DepthMap : public Grid<double> {
 public:
  using Grid<double>::Grid;
  explicit DepthMap(Grid<double> grid) : Grid<double>(std::move(grid)) {}

  /// Throws unless every value is finite and strictly positive.
  void validate() const {
    for (double d : values()) {
      if (!std::isfinite(d) || d <= 0.0) {
        throw InvalidArgument("depth map values must be finite and positive");
      }
    }
  }
};

/// Per-pixel boolean region. Stored as bytes holding 0 or 1.
class ValidMask : public Grid<std::uint8_t> {
 public:
  using Grid<std::uint8_t>::Grid;

  static ValidMask full(int width, int height) { return ValidMask(width, height, 1); }
  static ValidMask none(int width, int height) { return ValidMask(width, height, 0); }

  bool valid(int x, int y) const noexcept { return (*this)(x, y) != 0; }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto b : values()) n += b != 0;
    return n;
  }
};

/// Per-pixel 2-D displacement (u, v) in pixels.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height, double u = 0.0, double v = 0.0)
      : u_(width, height, u), v_(width, height, v) {}
  FlowField(Grid<double> u, Grid<double> v) : u_(std::move(u)), v_(std::move(v)) {
    require_same_shape(u_, v_, "FlowField");
  }

  int width() const noexcept { return u_.width(); }
  int height() const noexcept { return u_.height(); }
  std::size_t size() const noexcept { return u_.size(); }

  Grid<double>& u() noexcept { return u_; }
  Grid<double>& v() noexcept { return v_; }
  const Grid<double>& u() const noexcept { return u_; }
  const Grid<double>& v() const noexcept { return v_; }

  void set(int x, int y, double u, double v) noexcept {
    u_(x, y) = u;
    v_(x, y) = v;
  }

  void validate() const {
    for (std::size_t i = 0; i < u_.size(); ++i) {
      if (!std::isfinite(u_[i]) || !std::isfinite(v_[i])) {
        throw InvalidArgument("flow field components must be finite");
      }
    }
  }

  bool operator==(const FlowField&) const = default;

 private:
  Grid<double> u_;
  Grid<double> v_;
};

/// Raster of intensities, one row-major plane per channel.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels = 1, double fill = 0.0)
      : planes_(checked_channels(channels), Grid<double>(width, height, fill)) {}
  explicit ImageBuffer(Grid<double> plane) { planes_.push_back(std::move(plane)); }
  explicit ImageBuffer(std::vector<Grid<double>> planes) : planes_(std::move(planes)) {
    checked_channels(static_cast<int>(planes_.size()));
    for (const auto& p : planes_) require_same_shape(p, planes_.front(), "ImageBuffer");
  }

  int width() const noexcept { return planes_.empty() ? 0 : planes_.front().width(); }
  int height() const noexcept { return planes_.empty() ? 0 : planes_.front().height(); }
  int channels() const noexcept { return static_cast<int>(planes_.size()); }

  double& operator()(int x, int y, int c = 0) noexcept { return planes_[c](x, y); }
  double operator()(int x, int y, int c = 0) const noexcept { return planes_[c](x, y); }

  Grid<double>& plane(int c = 0) { return planes_.at(static_cast<std::size_t>(c)); }
  const Grid<double>& plane(int c = 0) const { return planes_.at(static_cast<std::size_t>(c)); }

  /// Channel average; a copy for single-channel images.
  ImageBuffer to_gray() const {
    if (channels() == 1) return *this;
    Grid<double> gray(width(), height(), 0.0);
    const double inv = 1.0 / channels();
    for (std::size_t i = 0; i < gray.size(); ++i) {
      double sum = 0.0;
      for (const auto& p : planes_) sum += p[i];
      gray[i] = sum * inv;
    }
    return ImageBuffer(std::move(gray));
  }

  void validate() const {
    if (planes_.empty()) throw InvalidArgument("image must have at least one channel");
    for (const auto& p : planes_) {
      for (double v : p.values()) {
        if (!std::isfinite(v)) throw InvalidArgument("image values must be finite");
      }
    }
  }

  bool operator==(const ImageBuffer&) const = default;

 private:
  static std::size_t checked_channels(int channels) {
    if (channels < 1) throw InvalidArgument("image channel count must be at least 1");
    return static_cast<std::size_t>(channels);
  }

  std::vector<Grid<double>> planes_;
};

}  // namespace geocon

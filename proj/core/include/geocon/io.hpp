#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geocon/camera_geometry.hpp"
#include "geocon/losses.hpp"
#include "geocon/raster.hpp"

namespace geocon {

/// Middlebury .flo: float 202021.25 ("PIEH"), int32 width, int32 height, then
/// row-major interleaved (u, v) float32, all little-endian. Values are stored
/// as float32.
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);

/// Portable float map. Writes little-endian (negative scale) with rows stored
/// bottom-up; reads either byte order. "Pf" holds one channel, "PF" three.
void write_pfm(const std::filesystem::path& path, const ImageBuffer& image);
void write_pfm(const std::filesystem::path& path, const DepthMap& depth);
ImageBuffer read_pfm(const std::filesystem::path& path);
/// Single-channel PFM validated as a depth map.
DepthMap read_pfm_depth(const std::filesystem::path& path);

/// Binary 8-bit PGM (1 channel) or PPM (3 channels); values in [0, 1] are
/// quantized to 0..255.
void write_pnm(const std::filesystem::path& path, const ImageBuffer& image);
ImageBuffer read_pnm(const std::filesystem::path& path);

/// Dispatch on the extension: .pfm, .pgm, .ppm.
ImageBuffer read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageBuffer& image);

/// Mask as an 8-bit PGM (valid = 255).
void write_mask(const std::filesystem::path& path, const ValidMask& mask);
ValidMask read_mask(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Middlebury color-wheel color of one flow vector; magnitude normalized by
/// max_magnitude (vectors longer than that are darkened).
Rgb flow_color(double u, double v, double max_magnitude);

/// Color-wheel rendering as a binary PPM. max_magnitude <= 0 normalizes by the
/// largest vector in the field.
void write_flow_visualization(const std::filesystem::path& path, const FlowField& flow,
                              double max_magnitude = 0.0);

/// CSV with columns iter, photometric, smooth, fb, cross, total.
void write_trace_csv(const std::filesystem::path& path, const std::vector<LossReport>& trace);
std::string trace_csv(const std::vector<LossReport>& trace);

/// Single line "rx ry rz tx ty tz" (axis-angle, translation).
void write_pose(const std::filesystem::path& path, const Vec6& params);
Vec6 read_pose(const std::filesystem::path& path);

}  // namespace geocon

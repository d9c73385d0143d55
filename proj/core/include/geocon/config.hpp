#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geocon/optimizer.hpp"
#include "geocon/synthetic_scenes.hpp"

namespace geocon {

/// Flat "key = value" document. '#' starts a comment, blank lines are
/// ignored, a repeated key keeps the last value.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& source = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  /// Applies "key=value" overrides on top of the current entries.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  /// Directory relative paths are resolved against (the file's directory).
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Whitespace- or comma-separated numbers; throws unless exactly n when n > 0.
  std::vector<double> get_doubles(const std::string& key, std::size_t n = 0) const;
  std::filesystem::path get_path(const std::string& key) const;

 private:
  std::map<std::string, std::string> entries_;
  std::filesystem::path base_dir_;
};

/// Everything a CLI run needs. Input paths are optional; unset means the
/// input comes from the synthetic scene.
struct RunConfig {
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;

  /// Scene spec file, or a built-in fixture name: textured_plane, mover.
  std::string scene = "textured_plane";
  int scene_size = 64;
  /// Multiplicative depth perturbation: depth * U[1 - a, 1 + a].
  double depth_noise = 0.2;
  /// Additive flow perturbation: flow + U[-a, a] per component, in pixels.
  double flow_noise = 0.0;

  std::optional<std::filesystem::path> frame_t;
  std::optional<std::filesystem::path> frame_t1;
  std::optional<std::filesystem::path> depth_t;
  std::optional<std::filesystem::path> depth_t1;
  std::optional<std::filesystem::path> pose;
  std::optional<std::filesystem::path> flow_fwd;
  std::optional<std::filesystem::path> flow_bwd;
  std::optional<Intrinsics> intrinsics;
  std::filesystem::path out_dir = ".";

  void validate() const;
};

/// Keys understood by parse_run_config, one per line with a short description.
std::string run_config_keys();

/// Throws InvalidArgument on unknown keys, bad values or missing input files.
RunConfig parse_run_config(const KeyValues& kv);

/// Scene spec from keys such as width, height, intrinsics, motion.rotation,
/// motion.translation, plane.N.*, mover.N.*, texture.*. Indices N start at 0.
SceneSpec parse_scene_spec(const KeyValues& kv);
std::string format_scene_spec(const SceneSpec& spec);

/// Built-in fixture by name or a scene spec file.
SceneSpec resolve_scene(const std::string& scene, int size, const std::filesystem::path& base_dir);

}  // namespace geocon

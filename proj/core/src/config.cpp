#include "geocon/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "geocon/error.hpp"

namespace geocon {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_numbers(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': expected a number, got '" + text + "'");
}

const std::set<std::string>& run_keys() {
  static const std::set<std::string> keys = {
      "learning_rate", "beta1", "beta2", "adam_epsilon", "iterations", "lambda_s", "lambda_f",
      "lambda_c", "alpha1", "alpha2", "census_radius", "census_epsilon", "census_charbonnier_eps",
      "charbonnier_eps", "scales", "cross_scales", "scale_weights", "gating", "seed", "scene",
      "scene_size", "depth_noise", "flow_noise", "frame_t", "frame_t1", "depth_t", "depth_t1",
      "pose", "flow_fwd", "flow_bwd", "intrinsics", "out_dir", "terms"};
  return keys;
}

PhotometricGating parse_gating(const std::string& s) {
  if (s == "own") return PhotometricGating::kOwnBranch;
  if (s == "rigid") return PhotometricGating::kRigidMask;
  if (s == "flow") return PhotometricGating::kFlowMask;
  if (s == "intersection") return PhotometricGating::kIntersection;
  throw InvalidArgument("config key 'gating': expected own, rigid, flow or intersection, got '" + s +
                        "'");
}

TermSelection parse_terms(const std::string& s) {
  TermSelection t{false, false, false, false, false, false, false};
  std::string list = s;
  std::replace(list.begin(), list.end(), ',', ' ');
  std::istringstream is(list);
  for (std::string w; is >> w;) {
    if (w == "all") {
      t = TermSelection{};
    } else if (w == "photometric_rigid") {
      t.photometric_rigid = true;
    } else if (w == "photometric_flow") {
      t.photometric_flow = true;
    } else if (w == "smooth_depth") {
      t.smooth_depth = true;
    } else if (w == "smooth_flow") {
      t.smooth_flow = true;
    } else if (w == "fb_flow") {
      t.fb_flow = true;
    } else if (w == "fb_depth") {
      t.fb_depth = true;
    } else if (w == "cross") {
      t.cross = true;
    } else {
      throw InvalidArgument("config key 'terms': unknown term '" + w + "'");
    }
  }
  return t;
}

// Splits "plane.3.normal" into ("plane", 3, "normal").
bool indexed_key(const std::string& key, const std::string& prefix, std::size_t& index,
                 std::string& field) {
  if (key.rfind(prefix + ".", 0) != 0) return false;
  const std::string rest = key.substr(prefix.size() + 1);
  const auto dot = rest.find('.');
  if (dot == std::string::npos || dot == 0) return false;
  const std::string idx = rest.substr(0, dot);
  if (!std::all_of(idx.begin(), idx.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return false;
  }
  index = std::stoul(idx);
  if (index > 1000) throw InvalidArgument("config key '" + key + "': index too large");
  field = rest.substr(dot + 1);
  return true;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument(source + ":" + std::to_string(lineno) + ": empty key");
    kv.entries_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  KeyValues kv = parse(ss.str(), path.string());
  kv.base_dir_ = path.parent_path();
  return kv;
}

void KeyValues::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw InvalidArgument("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw InvalidArgument("override '" + assignment + "' has an empty key");
  entries_[key] = trim(assignment.substr(eq + 1));
}

std::string KeyValues::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidArgument("missing config key '" + key + "'");
  return it->second;
}

double KeyValues::get_double(const std::string& key) const { return to_double(key, get_string(key)); }

long KeyValues::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': expected an integer, got '" + s + "'");
}

std::uint64_t KeyValues::get_uint(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': expected a nonnegative integer, got '" + s + "'");
}

bool KeyValues::get_bool(const std::string& key) const {
  const std::string s = get_string(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw InvalidArgument("config key '" + key + "': expected a boolean, got '" + s + "'");
}

std::vector<double> KeyValues::get_doubles(const std::string& key, std::size_t n) const {
  std::vector<double> out;
  for (const std::string& w : split_numbers(get_string(key))) out.push_back(to_double(key, w));
  if (n > 0 && out.size() != n) {
    throw InvalidArgument("config key '" + key + "': expected " + std::to_string(n) +
                          " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

std::filesystem::path KeyValues::get_path(const std::string& key) const {
  std::filesystem::path p = get_string(key);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

void RunConfig::validate() const {
  optimizer.validate();
  if (depth_noise < 0.0 || depth_noise >= 1.0) {
    throw InvalidArgument("depth_noise must lie in [0, 1)");
  }
  if (flow_noise < 0.0) throw InvalidArgument("flow_noise must be nonnegative");
  if (scene_size < 8) throw InvalidArgument("scene_size must be at least 8");
  for (const auto* p : {&frame_t, &frame_t1, &depth_t, &depth_t1, &pose, &flow_fwd, &flow_bwd}) {
    if (*p && !std::filesystem::exists(**p)) {
      throw InvalidArgument("input file does not exist: " + (*p)->string());
    }
  }
  if (frame_t.has_value() != frame_t1.has_value()) {
    throw InvalidArgument("frame_t and frame_t1 must be given together");
  }
  if (intrinsics) intrinsics->validate();
}

std::string run_config_keys() {
  return "learning_rate, beta1, beta2, adam_epsilon, iterations   Adam settings\n"
         "lambda_s, lambda_f, lambda_c                           loss weights\n"
         "alpha1, alpha2                                         forward-backward check\n"
         "census_radius, census_epsilon, census_charbonnier_eps  census photometric cost\n"
         "charbonnier_eps                                        fb and cross-task penalty\n"
         "scales, cross_scales, scale_weights                    pyramid\n"
         "gating                                                 own | rigid | flow | intersection\n"
         "terms                                                  all or a list of term names\n"
         "seed, scene, scene_size, depth_noise, flow_noise       synthetic inputs\n"
         "frame_t, frame_t1, depth_t, depth_t1, pose,\n"
         "flow_fwd, flow_bwd, intrinsics, out_dir                files\n";
}

RunConfig parse_run_config(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (!run_keys().count(key)) throw InvalidArgument("unknown config key '" + key + "'");
  }
  RunConfig rc;
  OptimizerConfig& o = rc.optimizer;
  ObjectiveConfig& obj = o.objective;
  if (kv.has("learning_rate")) o.learning_rate = kv.get_double("learning_rate");
  if (kv.has("beta1")) o.beta1 = kv.get_double("beta1");
  if (kv.has("beta2")) o.beta2 = kv.get_double("beta2");
  if (kv.has("adam_epsilon")) o.adam_epsilon = kv.get_double("adam_epsilon");
  if (kv.has("iterations")) o.iterations = static_cast<int>(kv.get_int("iterations"));
  if (kv.has("lambda_s")) obj.weights.lambda_s = kv.get_double("lambda_s");
  if (kv.has("lambda_f")) obj.weights.lambda_f = kv.get_double("lambda_f");
  if (kv.has("lambda_c")) obj.weights.lambda_c = kv.get_double("lambda_c");
  if (kv.has("alpha1")) obj.fb.alpha1 = kv.get_double("alpha1");
  if (kv.has("alpha2")) obj.fb.alpha2 = kv.get_double("alpha2");
  if (kv.has("census_radius")) obj.census.radius = static_cast<int>(kv.get_int("census_radius"));
  if (kv.has("census_epsilon")) obj.census.epsilon = kv.get_double("census_epsilon");
  if (kv.has("census_charbonnier_eps")) {
    obj.census.charbonnier_eps = kv.get_double("census_charbonnier_eps");
  }
  if (kv.has("charbonnier_eps")) obj.charbonnier_eps = kv.get_double("charbonnier_eps");
  if (kv.has("scales")) obj.scales = static_cast<int>(kv.get_int("scales"));
  if (kv.has("cross_scales")) obj.cross_scales = static_cast<int>(kv.get_int("cross_scales"));
  if (kv.has("scale_weights")) obj.scale_weights = kv.get_doubles("scale_weights");
  if (kv.has("gating")) obj.gating = parse_gating(kv.get_string("gating"));
  if (kv.has("terms")) obj.terms = parse_terms(kv.get_string("terms"));

  if (kv.has("seed")) rc.seed = kv.get_uint("seed");
  if (kv.has("scene")) rc.scene = kv.get_string("scene");
  if (kv.has("scene_size")) rc.scene_size = static_cast<int>(kv.get_int("scene_size"));
  if (kv.has("depth_noise")) rc.depth_noise = kv.get_double("depth_noise");
  if (kv.has("flow_noise")) rc.flow_noise = kv.get_double("flow_noise");
  auto path_opt = [&](const char* key, std::optional<std::filesystem::path>& dst) {
    if (kv.has(key)) dst = kv.get_path(key);
  };
  path_opt("frame_t", rc.frame_t);
  path_opt("frame_t1", rc.frame_t1);
  path_opt("depth_t", rc.depth_t);
  path_opt("depth_t1", rc.depth_t1);
  path_opt("pose", rc.pose);
  path_opt("flow_fwd", rc.flow_fwd);
  path_opt("flow_bwd", rc.flow_bwd);
  if (kv.has("intrinsics")) {
    const auto k = kv.get_doubles("intrinsics", 4);
    rc.intrinsics = Intrinsics{k[0], k[1], k[2], k[3]};
  }
  if (kv.has("out_dir")) rc.out_dir = kv.get_path("out_dir");
  if (rc.scene != "textured_plane" && rc.scene != "mover") {
    std::filesystem::path p = rc.scene;
    if (p.is_relative() && !kv.base_dir().empty()) p = kv.base_dir() / p;
    if (!std::filesystem::exists(p)) throw InvalidArgument("scene file does not exist: " + p.string());
    rc.scene = p.string();
  }
  rc.validate();
  return rc;
}

SceneSpec parse_scene_spec(const KeyValues& kv) {
  SceneSpec spec;
  if (kv.has("base")) {
    const std::string base = kv.get_string("base");
    const int size = kv.has("width") ? static_cast<int>(kv.get_int("width")) : 64;
    if (base == "textured_plane") {
      spec = textured_plane_fixture(size);
    } else if (base == "mover") {
      spec = mover_fixture(size);
    } else {
      throw InvalidArgument("scene key 'base': expected textured_plane or mover, got '" + base + "'");
    }
  }
  Vec3 rotation = params_from_pose(spec.camera_motion).head<3>();
  Vec3 translation = spec.camera_motion.translation();

  for (const auto& [key, value] : kv.entries()) {
    std::size_t idx = 0;
    std::string field;
    if (key == "base") {
      continue;
    } else if (key == "width") {
      spec.width = static_cast<int>(kv.get_int(key));
    } else if (key == "height") {
      spec.height = static_cast<int>(kv.get_int(key));
    } else if (key == "intrinsics") {
      const auto k = kv.get_doubles(key, 4);
      spec.intrinsics = Intrinsics{k[0], k[1], k[2], k[3]};
    } else if (key == "motion.rotation") {
      const auto r = kv.get_doubles(key, 3);
      rotation = Vec3(r[0], r[1], r[2]);
    } else if (key == "motion.translation") {
      const auto t = kv.get_doubles(key, 3);
      translation = Vec3(t[0], t[1], t[2]);
    } else if (key == "texture.octaves") {
      spec.texture.octaves = static_cast<int>(kv.get_int(key));
    } else if (key == "texture.base_period") {
      spec.texture.base_period = kv.get_double(key);
    } else if (key == "texture.persistence") {
      spec.texture.persistence = kv.get_double(key);
    } else if (key == "texture.contrast") {
      spec.texture.contrast = kv.get_double(key);
    } else if (indexed_key(key, "plane", idx, field)) {
      if (spec.planes.size() <= idx) spec.planes.resize(idx + 1);
      PlaneSpec& p = spec.planes[idx];
      if (field == "normal") {
        const auto n = kv.get_doubles(key, 3);
        p.normal = Vec3(n[0], n[1], n[2]);
      } else if (field == "offset") {
        p.offset = kv.get_double(key);
      } else if (field == "texture_seed") {
        p.texture_seed = kv.get_uint(key);
      } else if (field == "extent") {
        const auto e = kv.get_doubles(key, 4);
        p.extent = std::array<double, 4>{e[0], e[1], e[2], e[3]};
      } else {
        throw InvalidArgument("unknown scene key '" + key + "'");
      }
    } else if (indexed_key(key, "mover", idx, field)) {
      if (spec.movers.size() <= idx) spec.movers.resize(idx + 1);
      MoverSpec& m = spec.movers[idx];
      if (field == "rect") {
        const auto r = kv.get_doubles(key, 4);
        m.x = static_cast<int>(r[0]);
        m.y = static_cast<int>(r[1]);
        m.width = static_cast<int>(r[2]);
        m.height = static_cast<int>(r[3]);
      } else if (field == "motion") {
        const auto v = kv.get_doubles(key, 2);
        m.motion = Vec2(v[0], v[1]);
      } else if (field == "depth") {
        m.depth = kv.get_double(key);
      } else if (field == "texture_seed") {
        m.texture_seed = kv.get_uint(key);
      } else if (field == "texture_period") {
        m.texture_period = kv.get_double(key);
      } else {
        throw InvalidArgument("unknown scene key '" + key + "'");
      }
    } else {
      throw InvalidArgument("unknown scene key '" + key + "'");
    }
  }
  Vec6 params;
  params << rotation, translation;
  spec.camera_motion = pose_from_params(params);
  spec.validate();
  return spec;
}

std::string format_scene_spec(const SceneSpec& spec) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "width = " << spec.width << "\nheight = " << spec.height << "\n";
  const Intrinsics& k = spec.intrinsics;
  os << "intrinsics = " << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << "\n";
  const Vec6 p = params_from_pose(spec.camera_motion);
  os << "motion.rotation = " << p[0] << ' ' << p[1] << ' ' << p[2] << "\n";
  os << "motion.translation = " << p[3] << ' ' << p[4] << ' ' << p[5] << "\n";
  os << "texture.octaves = " << spec.texture.octaves << "\n";
  os << "texture.base_period = " << spec.texture.base_period << "\n";
  os << "texture.persistence = " << spec.texture.persistence << "\n";
  os << "texture.contrast = " << spec.texture.contrast << "\n";
  for (std::size_t i = 0; i < spec.planes.size(); ++i) {
    const PlaneSpec& pl = spec.planes[i];
    const std::string pre = "plane." + std::to_string(i) + ".";
    os << pre << "normal = " << pl.normal.x() << ' ' << pl.normal.y() << ' ' << pl.normal.z() << "\n";
    os << pre << "offset = " << pl.offset << "\n";
    os << pre << "texture_seed = " << pl.texture_seed << "\n";
    if (pl.extent) {
      const auto& e = *pl.extent;
      os << pre << "extent = " << e[0] << ' ' << e[1] << ' ' << e[2] << ' ' << e[3] << "\n";
    }
  }
  for (std::size_t i = 0; i < spec.movers.size(); ++i) {
    const MoverSpec& m = spec.movers[i];
    const std::string pre = "mover." + std::to_string(i) + ".";
    os << pre << "rect = " << m.x << ' ' << m.y << ' ' << m.width << ' ' << m.height << "\n";
    os << pre << "motion = " << m.motion.x() << ' ' << m.motion.y() << "\n";
    os << pre << "depth = " << m.depth << "\n";
    os << pre << "texture_seed = " << m.texture_seed << "\n";
    os << pre << "texture_period = " << m.texture_period << "\n";
  }
  return os.str();
}

SceneSpec resolve_scene(const std::string& scene, int size, const std::filesystem::path& base_dir) {
  if (scene == "textured_plane") return textured_plane_fixture(size);
  if (scene == "mover") return mover_fixture(size);
  std::filesystem::path p = scene;
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return parse_scene_spec(KeyValues::load(p));
}

}  // namespace geocon

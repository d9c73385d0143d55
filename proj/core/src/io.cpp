#include "geocon/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace geocon {
namespace {

constexpr float kFloMagic = 202021.25f;

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_all(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p, bool little) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const auto byte = static_cast<std::uint32_t>(static_cast<unsigned char>(p[i]));
    v |= little ? byte << (8 * i) : byte << (8 * (3 - i));
  }
  return v;
}

void put_f32le(std::string& out, double v) { put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

float get_f32(const char* p, bool little) { return std::bit_cast<float>(get_u32(p, little)); }

// Reads whitespace-separated header tokens of PFM/PNM; '#' starts a comment.
class HeaderReader {
 public:
  HeaderReader(const std::vector<char>& bytes, std::string name) : b_(bytes), name_(std::move(name)) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_]))) t.push_back(b_[pos_++]);
    if (t.empty()) throw IoError(name_ + ": malformed header (unexpected end of file)");
    return t;
  }

  long integer() {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw IoError(name_ + ": malformed header (expected an integer, got '" + t + "')");
    }
  }

  double real() {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw IoError(name_ + ": malformed header (expected a number, got '" + t + "')");
    }
  }

  /// Consumes the single whitespace byte that ends the header.
  std::size_t payload_start() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_]))) {
      throw IoError(name_ + ": malformed header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<char>& b_;
  std::string name_;
  std::size_t pos_ = 0;
};

void check_dimensions(long w, long h, const std::string& what) {
  if (w <= 0 || h <= 0) throw IoError(what + ": nonpositive dimensions");
  if (w > (1L << 16) || h > (1L << 16)) throw IoError(what + ": dimensions too large");
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Middlebury color wheel: red-yellow-green-cyan-blue-magenta segments.
std::vector<std::array<double, 3>> make_color_wheel() {
  constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
  std::vector<std::array<double, 3>> w;
  for (int i = 0; i < kRY; ++i) w.push_back({255, 255.0 * i / kRY, 0});
  for (int i = 0; i < kYG; ++i) w.push_back({255 - 255.0 * i / kYG, 255, 0});
  for (int i = 0; i < kGC; ++i) w.push_back({0, 255, 255.0 * i / kGC});
  for (int i = 0; i < kCB; ++i) w.push_back({0, 255 - 255.0 * i / kCB, 255});
  for (int i = 0; i < kBM; ++i) w.push_back({255.0 * i / kBM, 0, 255});
  for (int i = 0; i < kMR; ++i) w.push_back({255, 0, 255 - 255.0 * i / kMR});
  return w;
}

}  // namespace

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  std::string out;
  out.reserve(12 + flow.size() * 8);
  put_u32le(out, std::bit_cast<std::uint32_t>(kFloMagic));
  put_u32le(out, static_cast<std::uint32_t>(flow.width()));
  put_u32le(out, static_cast<std::uint32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    put_f32le(out, flow.u()[i]);
    put_f32le(out, flow.v()[i]);
  }
  write_all(path, out);
}

FlowField read_flo(const std::filesystem::path& path) {
  const std::vector<char> b = read_all(path);
  if (b.size() < 4 || get_f32(b.data(), true) != kFloMagic) {
    throw IoError(path.string() + ": not a flow file");
  }
  if (b.size() < 12) throw IoError(path.string() + ": corrupt flow file");
  const auto w = static_cast<std::int32_t>(get_u32(b.data() + 4, true));
  const auto h = static_cast<std::int32_t>(get_u32(b.data() + 8, true));
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) {
    throw IoError(path.string() + ": corrupt flow file");
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (b.size() != 12 + n * 8) throw IoError(path.string() + ": corrupt flow file");
  FlowField flow(w, h);
  const char* p = b.data() + 12;
  for (std::size_t i = 0; i < n; ++i, p += 8) {
    flow.u()[i] = get_f32(p, true);
    flow.v()[i] = get_f32(p + 4, true);
  }
  return flow;
}

void write_pfm(const std::filesystem::path& path, const ImageBuffer& image) {
  const int c = image.channels();
  if (c != 1 && c != 3) throw InvalidArgument("PFM stores 1 or 3 channels, got " + std::to_string(c));
  std::string out = (c == 1 ? "Pf\n" : "PF\n") + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n-1.0\n";
  for (int y = image.height() - 1; y >= 0; --y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int ch = 0; ch < c; ++ch) put_f32le(out, image(x, y, ch));
    }
  }
  write_all(path, out);
}

void write_pfm(const std::filesystem::path& path, const DepthMap& depth) {
  write_pfm(path, ImageBuffer(static_cast<const Grid<double>&>(depth)));
}

ImageBuffer read_pfm(const std::filesystem::path& path) {
  const std::vector<char> b = read_all(path);
  const std::string name = path.string();
  HeaderReader hdr(b, name);
  const std::string magic = hdr.token();
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw IoError(name + ": malformed header (bad PFM magic '" + magic + "')");
  }
  const long w = hdr.integer();
  const long h = hdr.integer();
  check_dimensions(w, h, name);
  const double scale = hdr.real();
  if (scale == 0.0 || !std::isfinite(scale)) throw IoError(name + ": malformed header (scale)");
  const bool little = scale < 0.0;
  const std::size_t start = hdr.payload_start();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
  if (b.size() != start + 4 * n) throw IoError(name + ": truncated or oversized PFM payload");
  ImageBuffer img(static_cast<int>(w), static_cast<int>(h), channels);
  const char* p = b.data() + start;
  for (long y = h - 1; y >= 0; --y) {
    for (long x = 0; x < w; ++x) {
      for (int ch = 0; ch < channels; ++ch, p += 4) {
        img(static_cast<int>(x), static_cast<int>(y), ch) = get_f32(p, little);
      }
    }
  }
  return img;
}

DepthMap read_pfm_depth(const std::filesystem::path& path) {
  ImageBuffer img = read_pfm(path);
  if (img.channels() != 1) throw IoError(path.string() + ": depth PFM must have one channel");
  DepthMap d(img.plane());
  d.validate();
  return d;
}

void write_pnm(const std::filesystem::path& path, const ImageBuffer& image) {
  const int c = image.channels();
  if (c != 1 && c != 3) throw InvalidArgument("PNM stores 1 or 3 channels, got " + std::to_string(c));
  std::string out = (c == 1 ? "P5\n" : "P6\n") + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n255\n";
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int ch = 0; ch < c; ++ch) {
        const double v = std::clamp(image(x, y, ch), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
      }
    }
  }
  write_all(path, out);
}

ImageBuffer read_pnm(const std::filesystem::path& path) {
  const std::vector<char> b = read_all(path);
  const std::string name = path.string();
  HeaderReader hdr(b, name);
  const std::string magic = hdr.token();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw IoError(name + ": malformed header (only binary P5/P6 are supported)");
  }
  const long w = hdr.integer();
  const long h = hdr.integer();
  check_dimensions(w, h, name);
  const long maxval = hdr.integer();
  if (maxval <= 0 || maxval > 255) throw IoError(name + ": only 8-bit PNM is supported");
  const std::size_t start = hdr.payload_start();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
  if (b.size() < start + n) throw IoError(name + ": truncated PNM payload");
  ImageBuffer img(static_cast<int>(w), static_cast<int>(h), channels);
  const auto* p = reinterpret_cast<const unsigned char*>(b.data() + start);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      for (int ch = 0; ch < channels; ++ch) {
        img(static_cast<int>(x), static_cast<int>(y), ch) = static_cast<double>(*p++) / maxval;
      }
    }
  }
  return img;
}

ImageBuffer read_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw IoError(path.string() + ": unsupported image extension '" + ext + "'");
}

void write_image(const std::filesystem::path& path, const ImageBuffer& image) {
  const std::string ext = lower_extension(path);
  if (ext == ".pfm") return write_pfm(path, image);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return write_pnm(path, image);
  throw IoError(path.string() + ": unsupported image extension '" + ext + "'");
}

void write_mask(const std::filesystem::path& path, const ValidMask& mask) {
  ImageBuffer img(mask.width(), mask.height(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.plane()[i] = mask[i] ? 1.0 : 0.0;
  write_pnm(path, img);
}

ValidMask read_mask(const std::filesystem::path& path) {
  const ImageBuffer img = read_image(path);
  ValidMask mask(img.width(), img.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = img.plane()[i] >= 0.5 ? 1 : 0;
  return mask;
}

Rgb flow_color(double u, double v, double max_magnitude) {
  static const auto wheel = make_color_wheel();
  const int ncols = static_cast<int>(wheel.size());
  const double scale = max_magnitude > 0.0 ? 1.0 / max_magnitude : 0.0;
  const double fu = u * scale;
  const double fv = v * scale;
  const double rad = std::sqrt(fu * fu + fv * fv);
  const double a = std::atan2(-fv, -fu) / std::numbers::pi;
  const double fk = (a + 1.0) / 2.0 * (ncols - 1);
  const int k0 = static_cast<int>(std::floor(fk)) % ncols;
  const int k1 = (k0 + 1) % ncols;
  const double f = fk - std::floor(fk);
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    double col = ((1.0 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
    col = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : col * 0.75;
    out[c] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(col, 0.0, 1.0)));
  }
  return out;
}

void write_flow_visualization(const std::filesystem::path& path, const FlowField& flow,
                              double max_magnitude) {
  double norm = max_magnitude;
  if (!(norm > 0.0)) {
    norm = 0.0;
    for (std::size_t i = 0; i < flow.size(); ++i) {
      norm = std::max(norm, std::hypot(flow.u()[i], flow.v()[i]));
    }
  }
  std::string out = "P6\n" + std::to_string(flow.width()) + " " + std::to_string(flow.height()) +
                    "\n255\n";
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const Rgb c = flow_color(flow.u()[i], flow.v()[i], norm);
    for (std::uint8_t v : c) out.push_back(static_cast<char>(v));
  }
  write_all(path, out);
}

std::string trace_csv(const std::vector<LossReport>& trace) {
  std::ostringstream os;
  os << "iter,photometric,smooth,fb,cross,total\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const LossReport& r = trace[i];
    os << i << ',' << r.photometric << ',' << r.smooth << ',' << r.forward_backward << ','
       << r.cross << ',' << r.total << '\n';
  }
  return os.str();
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<LossReport>& trace) {
  write_all(path, trace_csv(trace));
}

void write_pose(const std::filesystem::path& path, const Vec6& params) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (int i = 0; i < 6; ++i) os << params[i] << (i == 5 ? '\n' : ' ');
  write_all(path, os.str());
}

Vec6 read_pose(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Vec6 p;
  for (int i = 0; i < 6; ++i) {
    if (!(in >> p[i])) throw IoError(path.string() + ": expected six pose parameters");
  }
  return p;
}

}  // namespace geocon

#include "pro/data/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pro::data {
namespace {

std::uint32_t load_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t load_u32_be(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[3]) | static_cast<std::uint32_t>(p[2]) << 8 |
         static_cast<std::uint32_t>(p[1]) << 16 | static_cast<std::uint32_t>(p[0]) << 24;
}

// Reads one whitespace-delimited header token starting at `pos`.
std::string pfm_token(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size() && std::isspace(b[pos])) ++pos;
  const std::size_t start = pos;
  while (pos < b.size() && !std::isspace(b[pos])) ++pos;
  if (start == pos) throw ParseError("PFM header truncated at byte " + std::to_string(start));
  return std::string(b.begin() + static_cast<long>(start), b.begin() + static_cast<long>(pos));
}

void check_png(int ok, const png_image& img, const std::string& what, const fs::path& path) {
  if (!ok)
    throw ParseError(what + " '" + path.string() + "': " + (img.message[0] ? img.message : "libpng error"));
}

std::vector<std::uint8_t> png_read_raw(const fs::path& path, std::uint32_t format, int& width,
                                       int& height, std::size_t bytes_per_pixel) {
  if (!fs::exists(path)) throw DataError("missing file '" + path.string() + "'");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  check_png(png_image_begin_read_from_file(&img, path.c_str()), img, "cannot read PNG", path);
  img.format = format;
  width = static_cast<int>(img.width);
  height = static_cast<int>(img.height);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(width) * height * bytes_per_pixel);
  const int ok = png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr);
  if (!ok) png_image_free(&img);
  check_png(ok, img, "malformed PNG", path);
  return buf;
}

void png_write_raw(const fs::path& path, std::uint32_t format, int width, int height,
                   const void* data) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  const int ok = png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr);
  if (!ok)
    throw DataError("cannot write PNG '" + path.string() + "': " +
                    (img.message[0] ? img.message : "libpng error"));
}

std::string fmt_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return buf;
}

fs::path range_path(const fs::path& png) { return fs::path(png.string() + ".range"); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing '" + path.string() + "'");
}

std::string pfm_header(int width, int height) {
  return "Pf\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
}

std::vector<std::uint8_t> encode_pfm(const DepthMap& map) {
  require_finite(map, "PFM payload");
  const std::string header = pfm_header(map.width(), map.height());
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + map.size() * 4);
  for (int y = map.height() - 1; y >= 0; --y)
    for (int x = 0; x < map.width(); ++x) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(map(y, x));
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  return out;
}

DepthMap decode_pfm(const std::vector<std::uint8_t>& b) {
  std::size_t pos = 0;
  const std::string magic = pfm_token(b, pos);
  if (magic == "PF") throw ParseError("PFM at byte 0: unsupported channel count (colour PF)");
  if (magic != "Pf") throw ParseError("PFM at byte 0: bad magic '" + magic + "'");
  const std::size_t wpos = pos;
  int w = 0, h = 0;
  double scale = 0;
  try {
    w = std::stoi(pfm_token(b, pos));
    h = std::stoi(pfm_token(b, pos));
    scale = std::stod(pfm_token(b, pos));
  } catch (const std::logic_error&) {
    throw ParseError("PFM header malformed near byte " + std::to_string(wpos));
  }
  if (w <= 0 || h <= 0) throw ParseError("PFM header has non-positive dimensions near byte " + std::to_string(wpos));
  if (scale == 0) throw ParseError("PFM scale must be nonzero near byte " + std::to_string(wpos));
  if (pos >= b.size() || !std::isspace(b[pos]))
    throw ParseError("PFM header truncated at byte " + std::to_string(pos));
  ++pos;  // single whitespace byte ends the header
  const std::size_t need = static_cast<std::size_t>(w) * h * 4;
  if (b.size() - pos < need)
    throw ParseError("PFM payload truncated at byte " + std::to_string(b.size()) + ", expected " +
                     std::to_string(pos + need) + " bytes");
  const bool little = scale < 0;
  DepthMap map(h, w);
  const std::uint8_t* p = b.data() + pos;
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x, p += 4)
      map(y, x) = std::bit_cast<float>(little ? load_u32_le(p) : load_u32_be(p));
  return map;
}

void write_pfm(const DepthMap& map, const fs::path& path) { write_file(path, encode_pfm(map)); }

DepthMap read_pfm(const fs::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_png16(const DepthMap& map, const fs::path& path) {
  require_finite(map, "PNG16 payload");
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  const float mn = map.empty() ? 0.0f : *lo;
  const float mx = map.empty() ? 0.0f : *hi;
  const double range = static_cast<double>(mx) - mn;
  std::vector<std::uint16_t> codes(map.size(), 0);
  if (range > 0)
    for (std::size_t i = 0; i < map.size(); ++i)
      codes[i] = static_cast<std::uint16_t>(std::lround((map[i] - mn) / range * 65535.0));
  png_write_raw(path, PNG_FORMAT_LINEAR_Y, map.width(), map.height(), codes.data());
  std::ofstream f(range_path(path), std::ios::trunc);
  if (!f) throw DataError("cannot write '" + range_path(path).string() + "'");
  f << fmt_float(mn) << ' ' << fmt_float(mx) << '\n';
}

DepthMap read_png16(const fs::path& path) {
  int w = 0, h = 0;
  const auto raw = png_read_raw(path, PNG_FORMAT_LINEAR_Y, w, h, 2);
  std::ifstream f(range_path(path));
  float mn = 0, mx = 0;
  if (!f || !(f >> mn >> mx))
    throw ParseError("missing or malformed range sidecar '" + range_path(path).string() + "'");
  DepthMap map(h, w);
  const double range = static_cast<double>(mx) - mn;
  for (std::size_t i = 0; i < map.size(); ++i) {
    std::uint16_t code;
    std::memcpy(&code, raw.data() + 2 * i, 2);
    map[i] = static_cast<float>(mn + code * range / 65535.0);
  }
  return map;
}

void write_png_mask(const BinaryMask& mask, const fs::path& path) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
  png_write_raw(path, PNG_FORMAT_GRAY, mask.width(), mask.height(), px.data());
}

BinaryMask read_png_mask(const fs::path& path) {
  int w = 0, h = 0;
  const auto raw = png_read_raw(path, PNG_FORMAT_GRAY, w, h, 1);
  BinaryMask m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = raw[i] ? 1 : 0;
  return m;
}

void write_png_rgb(const RgbImage& image, const fs::path& path) {
  const int w = image.width(), h = image.height();
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::min(1.0f, std::max(0.0f, image(c, y, x)));
        px[(static_cast<std::size_t>(y) * w + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  png_write_raw(path, PNG_FORMAT_RGB, w, h, px.data());
}

RgbImage read_png_rgb(const fs::path& path) {
  int w = 0, h = 0;
  const auto raw = png_read_raw(path, PNG_FORMAT_RGB, w, h, 3);
  RgbImage img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img(c, y, x) = raw[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
  return img;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write manifest '" + path.string() + "'");
  f << kManifestHeader << '\n';
  for (const auto& e : entries)
    f << e.scene_id << ',' << e.seed << ',' << e.image << ',' << e.depth_true << ','
      << e.depth_labeled << ',' << e.edges << ',' << e.transparent << '\n';
  if (!f) throw DataError("failed writing manifest '" + path.string() + "'");
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(f, line) || split_csv(line) != split_csv(kManifestHeader))
    throw ParseError("manifest '" + path.string() + "' has an unexpected header");
  std::vector<ManifestEntry> out;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv(line);
    if (cols.size() != 7)
      throw ParseError("manifest '" + path.string() + "' line " + std::to_string(lineno) +
                       ": expected 7 columns, got " + std::to_string(cols.size()));
    ManifestEntry e;
    e.scene_id = cols[0];
    try {
      e.seed = std::stoull(cols[1]);
    } catch (const std::logic_error&) {
      throw ParseError("manifest '" + path.string() + "' line " + std::to_string(lineno) + ": bad seed");
    }
    e.image = cols[2];
    e.depth_true = cols[3];
    e.depth_labeled = cols[4];
    e.edges = cols[5];
    e.transparent = cols[6];
    out.push_back(std::move(e));
  }
  return out;
}

ManifestEntry write_scene(const Scene& scene, const fs::path& root, const std::string& scene_id) {
  const fs::path dir = root / scene_id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  ManifestEntry e{scene_id,
                  scene.seed,
                  scene_id + "/image.png",
                  scene_id + "/depth_true.pfm",
                  scene_id + "/depth_labeled.pfm",
                  scene_id + "/edges.png",
                  scene_id + "/transparent.png"};
  write_png_rgb(scene.image, root / e.image);
  write_pfm(scene.depth_true, root / e.depth_true);
  write_pfm(scene.depth_labeled, root / e.depth_labeled);
  write_png_mask(scene.object_edges, root / e.edges);
  write_png_mask(scene.transparent_mask, root / e.transparent);
  return e;
}

Scene read_scene(const fs::path& root, const ManifestEntry& e) {
  Scene s;
  s.seed = e.seed;
  s.image = read_png_rgb(root / e.image);
  s.depth_true = read_pfm(root / e.depth_true);
  s.depth_labeled = read_pfm(root / e.depth_labeled);
  s.object_edges = read_png_mask(root / e.edges);
  s.transparent_mask = read_png_mask(root / e.transparent);
  const int h = s.depth_true.height(), w = s.depth_true.width();
  auto same = [&](int hh, int ww) { return hh == h && ww == w; };
  if (!same(s.image.height(), s.image.width()) || !same(s.depth_labeled.height(), s.depth_labeled.width()) ||
      !same(s.object_edges.height(), s.object_edges.width()) ||
      !same(s.transparent_mask.height(), s.transparent_mask.width()))
    throw DataError("scene '" + e.scene_id + "' has files of differing dimensions");
  return s;
}

Dataset Dataset::open(const fs::path& root) {
  Dataset d;
  d.root = root;
  d.entries = read_manifest(root / "manifest.csv");
  return d;
}

}  // namespace pro::data

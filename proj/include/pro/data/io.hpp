#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pro/core/raster.hpp"
#include "pro/data/scene.hpp"

namespace pro::data {

namespace fs = std::filesystem;

// Grayscale PFM, little-endian ("-1.0" scale), rows stored bottom to top.
std::string pfm_header(int width, int height);
std::vector<std::uint8_t> encode_pfm(const DepthMap& map);
DepthMap decode_pfm(const std::vector<std::uint8_t>& bytes);
void write_pfm(const DepthMap& map, const fs::path& path);
DepthMap read_pfm(const fs::path& path);

// 16-bit grayscale PNG plus "<path>.range" holding "min max"; code k
// dequantizes to min + k * (max - min) / 65535. A constant map stores all
// zero codes.
void write_png16(const DepthMap& map, const fs::path& path);
DepthMap read_png16(const fs::path& path);

// 8-bit 0/255 PNG; any nonzero sample reads back as 1.
void write_png_mask(const BinaryMask& mask, const fs::path& path);
BinaryMask read_png_mask(const fs::path& path);

// 8-bit RGB PNG; values are clamped to [0, 1].
void write_png_rgb(const RgbImage& image, const fs::path& path);
RgbImage read_png_rgb(const fs::path& path);

std::vector<std::uint8_t> read_file(const fs::path& path);
void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes);

struct ManifestEntry {
  std::string scene_id;
  std::uint64_t seed = 0;
  std::string image;          // paths relative to the dataset root
  std::string depth_true;
  std::string depth_labeled;
  std::string edges;
  std::string transparent;
};

inline constexpr const char* kManifestHeader =
    "scene_id,seed,image,depth_true,depth_labeled,edges,transparent";

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const fs::path& path);

// Writes the scene files under root / scene_id and returns its manifest row.
ManifestEntry write_scene(const Scene& scene, const fs::path& root, const std::string& scene_id);
Scene read_scene(const fs::path& root, const ManifestEntry& entry);

struct Dataset {
  fs::path root;
  std::vector<ManifestEntry> entries;

  static Dataset open(const fs::path& root);
  std::size_t size() const { return entries.size(); }
  Scene load(std::size_t i) const { return read_scene(root, entries.at(i)); }
};

}  // namespace pro::data

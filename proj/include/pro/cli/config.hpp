#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>

#include "pro/backbone/backbone.hpp"
#include "pro/bfm/bfm.hpp"
#include "pro/data/scene.hpp"
#include "pro/fusion/network.hpp"
#include "pro/losses/losses.hpp"
#include "pro/tiling/tiling.hpp"

namespace pro::cli {

struct TrainConfig {
  int epochs = 8;
  int max_steps = 0;          // > 0 caps the step count derived from epochs
  int batch_size = 8;         // samples per micro-batch
  int accum_steps = 2;        // micro-batches per optimizer step
  double learning_rate = 0.01;
  double momentum = 0.9;
  int patch_size = 128;       // native patch side in scene pixels
  int overlap = 55;           // pixels shared by adjacent patches of a group
  bool use_bfm = true;        // false supervises every pixel
  int max_resample = 8;       // crop attempts before a sample is dropped
  int checkpoint_every = 0;   // 0 writes only the final checkpoint

  int crop_size() const { return 2 * patch_size - overlap; }
};

struct EvalConfig {
  int d3r_cell = 8;
  double d3r_threshold = 0.1;
  int br_tol = 2;
  double edge_threshold = 0.05;  // depth-edge threshold for boundary recall
  int ce_overlap = 55;
  int ce_groups = 4;             // overlap groups sampled per scene for CE
  std::string target = "true";   // "true" or "labeled" ground truth
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/default";
  std::string data_dir = "data";
  int count = 32;  // scenes written by gen-data

  data::GenConfig gen;
  backbone::OracleConfig oracle;
  fusion::NetConfig net;
  losses::LossConfig loss;
  bfm::BfmConfig bfm;
  TrainConfig train;
  tiling::GridSpec grid;
  EvalConfig eval;

  void validate() const;
};

// Flat "key = value" text with [section] headers; '#' and ';' start
// comments. Keys not listed in dump_config are rejected.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& cfg);

// "RxC", e.g. "4x4".
tiling::GridSpec parse_grid(const std::string& text);

}  // namespace pro::cli

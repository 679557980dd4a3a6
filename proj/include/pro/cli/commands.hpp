#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "pro/cli/config.hpp"
#include "pro/cli/trainer.hpp"

namespace pro::cli {

namespace fs = std::filesystem;

// Writes `count` scenes and manifest.csv under out_dir. A nonempty out_dir
// is refused unless `force`.
void cmd_gen_data(const RunConfig& cfg, int count, const fs::path& out_dir, bool force);

// Trains on every scene of the dataset; writes loss.csv, config.ini,
// periodic ckpt_<step>.pro and the final model.pro under out_dir.
TrainState cmd_train(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir, bool force,
                     std::ostream* log = nullptr);

struct InferRequest {
  std::optional<fs::path> checkpoint;  // none: freshly initialized network
  fs::path data_dir;
  std::string scene_id;
  tiling::GridSpec grid;
  fs::path out_dir;
  bool write_residual = false;
};

// Writes depth.pfm (and residual.png) and returns the inference result.
InferResult cmd_infer(const RunConfig& cfg, const InferRequest& req);

// Writes metrics.csv and transparent.csv under out_dir.
void cmd_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint, const fs::path& data_dir,
              const std::string& metric_list, const fs::path& out_dir);

// Writes unreliable.png, edge.png and bfm.png for one dataset scene.
void cmd_inspect_mask(const RunConfig& cfg, const fs::path& data_dir, const std::string& scene_id,
                      const fs::path& out_dir);

// Command-line front end; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace pro::cli

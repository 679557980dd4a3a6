#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include "pro/cli/config.hpp"
#include "pro/cli/pipeline.hpp"
#include "pro/fusion/network.hpp"
#include "pro/losses/losses.hpp"

namespace pro::cli {

// One training example: a 2x2 overlap group with its inputs and supervision.
template <typename T>
struct GroupSample {
  tiling::OverlapGroup group;                // region in the scene frame
  std::array<fusion::NetInputs<T>, 4> inputs;
  Raster<T> gt;                              // region-sized normalized labels
  BinaryMask mask;                           // region-sized supervision mask
};

// L_final = L_masked(merge(D_refine)) + lambda * L_con(D_refine) for one
// group. When `backward` is set, d L_final / d params, times grad_scale, is
// accumulated into params.
template <typename T>
losses::LossValue group_loss(const fusion::ResidualNet& net, fusion::ParameterStore<T>& params,
                             const GroupSample<T>& sample, const losses::LossConfig& cfg,
                             bool backward, T grad_scale = T(1));

struct StepRecord {
  std::uint64_t step = 0;
  losses::LossValue loss;  // mean over the samples used in the step
  int samples = 0;
  int discarded = 0;
};

struct TrainState {
  std::uint64_t step = 0;
  fusion::ParameterStore<float> params;
  std::vector<AlignedVector<float>> momentum;  // one buffer per parameter
  std::vector<double> loss_history;          // L_final per completed step

  bool operator==(const TrainState& o) const {
    return step == o.step && params == o.params && momentum == o.momentum &&
           loss_history == o.loss_history;
  }
};

// Checkpoints use the parameter container: network parameters under their
// own names, then "momentum/<name>", "meta/step" and "meta/loss_history"
// (64-bit values split into exact 16-bit chunks).
std::vector<std::uint8_t> serialize_train_state(const TrainState& st);
TrainState deserialize_train_state(const std::vector<std::uint8_t>& bytes);
void save_train_state(const TrainState& st, const std::filesystem::path& path);
TrainState load_train_state(const std::filesystem::path& path);

// Network parameters from a checkpoint, checked against the architecture.
fusion::ParameterStore<float> load_model(const std::filesystem::path& path, const fusion::ResidualNet& net);

class Trainer {
 public:
  Trainer(const RunConfig& cfg, std::vector<data::Scene> scenes);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const RunConfig& config() const { return cfg_; }
  const fusion::ResidualNet& net() const { return net_; }
  std::size_t scene_count() const { return scenes_.size(); }
  std::uint64_t total_steps() const;

  TrainState init_state() const;

  // Scene index of global sample n (epoch-wise shuffled order).
  std::size_t scene_for_sample(std::uint64_t n) const;

  // Draws global sample n: a random crop of its scene, re-drawn while the
  // mask test rejects it. Returns false if every attempt was rejected.
  bool draw_sample(std::uint64_t n, GroupSample<float>& out) const;

  StepRecord train_step(TrainState& st) const;

 private:
  RunConfig cfg_;
  fusion::ResidualNet net_;
  std::vector<data::Scene> scenes_;
  std::vector<SceneContext> contexts_;
};

void write_loss_header(std::ostream& os);
void write_loss_row(std::ostream& os, const StepRecord& rec);

}  // namespace pro::cli

#include "pro/cli/trainer.hpp"

#include <bit>
#include <cmath>
#include <cstdio>

#include "pro/core/ops.hpp"
#include "pro/core/rng.hpp"
#include "pro/data/io.hpp"

namespace pro::cli {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kCropStream = 0xc409;
constexpr const char* kMomentumPrefix = "momentum/";
constexpr const char* kStepKey = "meta/step";
constexpr const char* kLossKey = "meta/loss_history";

void put_u64(AlignedVector<float>& out, std::uint64_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<float>((v >> (16 * i)) & 0xffff));
}

std::uint64_t get_u64(const AlignedVector<float>& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const float f = in.at(at + i);
    if (!(f >= 0 && f <= 65535 && f == std::floor(f))) throw ParseError("corrupt checkpoint metadata");
    v |= static_cast<std::uint64_t>(f) << (16 * i);
  }
  return v;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

template <typename T>
losses::LossValue group_loss(const fusion::ResidualNet& net, fusion::ParameterStore<T>& params,
                             const GroupSample<T>& sample, const losses::LossConfig& cfg,
                             bool backward, T grad_scale) {
  const int r = net.config().patch_res;
  std::array<fusion::NetTape<T>, 4> tapes;
  std::array<Raster<T>, 4> preds;
  for (int i = 0; i < 4; ++i) {
    const auto out = net.forward(sample.inputs[i], params, backward ? &tapes[i] : nullptr);
    const Raster<T> d = fusion::refine_patch(sample.inputs[i].coarse_roi, out.residual);
    const PatchRect& p = sample.group.patches[i];
    preds[i] = (p.h == r && p.w == r) ? d : resize_bilinear(d, p.h, p.w);
  }
  const Raster<T> merged = tiling::merge_group(preds, sample.group);
  const auto masked = losses::masked_loss(merged, sample.gt, sample.mask, cfg);
  const auto con = losses::consistency_loss(preds, sample.group, tiling::enumerate_overlaps(sample.group));
  const losses::LossValue total = losses::final_loss(masked.loss, con.loss, cfg);
  if (!backward) return total;

  const auto g_merge = tiling::merge_group_adjoint(masked.grad, sample.group);
  for (int i = 0; i < 4; ++i) {
    Raster<T> g = g_merge[i];
    const T lam = static_cast<T>(cfg.lambda_con);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = grad_scale * (g[k] + lam * con.grads[i][k]);
    const PatchRect& p = sample.group.patches[i];
    if (p.h != r || p.w != r) g = resize_bilinear_adjoint(g, r, r);
    net.backward(tapes[i], g, params);
  }
  return total;
}

template losses::LossValue group_loss<float>(const fusion::ResidualNet&, fusion::ParameterStore<float>&,
                                             const GroupSample<float>&, const losses::LossConfig&, bool, float);
template losses::LossValue group_loss<double>(const fusion::ResidualNet&, fusion::ParameterStore<double>&,
                                              const GroupSample<double>&, const losses::LossConfig&, bool,
                                              double);

std::vector<std::uint8_t> serialize_train_state(const TrainState& st) {
  fusion::ParameterStore<float> bundle;
  for (const auto& p : st.params) bundle[bundle.add(p.name, p.shape)].value = p.value;
  for (std::size_t i = 0; i < st.params.size(); ++i) {
    const auto& p = st.params[i];
    bundle[bundle.add(kMomentumPrefix + p.name, p.shape)].value = st.momentum.at(i);
  }
  AlignedVector<float> step;
  put_u64(step, st.step);
  bundle[bundle.add(kStepKey, {4})].value = step;
  if (!st.loss_history.empty()) {
    AlignedVector<float> hist;
    for (double v : st.loss_history) put_u64(hist, std::bit_cast<std::uint64_t>(v));
    bundle[bundle.add(kLossKey, {static_cast<int>(st.loss_history.size()), 4})].value = hist;
  }
  return fusion::serialize_parameters(bundle);
}

TrainState deserialize_train_state(const std::vector<std::uint8_t>& bytes) {
  const auto bundle = fusion::deserialize_parameters(bytes);
  TrainState st;
  std::vector<const fusion::Parameter<float>*> moments;
  for (const auto& p : bundle) {
    if (p.name == kStepKey) {
      st.step = get_u64(p.value, 0);
    } else if (p.name == kLossKey) {
      for (std::size_t k = 0; k + 4 <= p.value.size(); k += 4)
        st.loss_history.push_back(std::bit_cast<double>(get_u64(p.value, k)));
    } else if (starts_with(p.name, kMomentumPrefix)) {
      moments.push_back(&p);
    } else if (starts_with(p.name, "meta/")) {
      throw VersionError("unknown checkpoint record '" + p.name + "'");
    } else {
      st.params[st.params.add(p.name, p.shape)].value = p.value;
    }
  }
  if (!moments.empty() && moments.size() != st.params.size())
    throw VersionError("checkpoint momentum records do not match its parameters");
  for (std::size_t i = 0; i < st.params.size(); ++i) {
    if (moments.empty()) {
      st.momentum.emplace_back(st.params[i].size(), 0.0f);
      continue;
    }
    if (moments[i]->name != kMomentumPrefix + st.params[i].name || moments[i]->shape != st.params[i].shape)
      throw VersionError("checkpoint momentum record '" + moments[i]->name + "' is out of place");
    st.momentum.push_back(moments[i]->value);
  }
  return st;
}

void save_train_state(const TrainState& st, const std::filesystem::path& path) {
  data::write_file(path, serialize_train_state(st));
}

TrainState load_train_state(const std::filesystem::path& path) {
  try {
    return deserialize_train_state(data::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

fusion::ParameterStore<float> load_model(const std::filesystem::path& path, const fusion::ResidualNet& net) {
  TrainState st = load_train_state(path);
  net.check_parameters(st.params);
  return std::move(st.params);
}

Trainer::Trainer(const RunConfig& cfg, std::vector<data::Scene> scenes)
    : cfg_(cfg), net_(cfg.net), scenes_(std::move(scenes)) {
  cfg_.validate();
  if (scenes_.empty()) throw DataError("training needs at least one scene");
  for (const auto& s : scenes_) {
    if (s.depth_true.height() < cfg_.train.crop_size() || s.depth_true.width() < cfg_.train.crop_size())
      throw DataError("scene " + std::to_string(s.seed) + " is smaller than the training crop");
    contexts_.push_back(prepare_scene(s, cfg_, cfg_.train.use_bfm));
  }
}

std::uint64_t Trainer::total_steps() const {
  const std::uint64_t per_step = static_cast<std::uint64_t>(cfg_.train.batch_size) * cfg_.train.accum_steps;
  const std::uint64_t per_epoch = (scenes_.size() + per_step - 1) / per_step;
  std::uint64_t steps = per_epoch * static_cast<std::uint64_t>(cfg_.train.epochs);
  if (cfg_.train.max_steps > 0) steps = std::min<std::uint64_t>(steps, cfg_.train.max_steps);
  return steps;
}

TrainState Trainer::init_state() const {
  TrainState st;
  st.params = net_.make_parameters<float>(cfg_.seed);
  for (const auto& p : st.params) st.momentum.emplace_back(p.size(), 0.0f);
  return st;
}

std::size_t Trainer::scene_for_sample(std::uint64_t n) const {
  const std::size_t count = scenes_.size();
  const std::uint64_t epoch = n / count;
  std::vector<std::size_t> perm(count);
  for (std::size_t i = 0; i < count; ++i) perm[i] = i;
  Rng rng = Rng(cfg_.seed, kShuffleStream).fork(epoch);
  for (std::size_t i = count; i > 1; --i)
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)))]);
  return perm[n % count];
}

bool Trainer::draw_sample(std::uint64_t n, GroupSample<float>& out) const {
  const SceneContext& ctx = contexts_[scene_for_sample(n)];
  const int side = cfg_.train.crop_size();
  const int p = cfg_.train.patch_size;
  Rng rng = Rng(cfg_.seed, kCropStream).fork(n);
  for (int attempt = 0; attempt < cfg_.train.max_resample; ++attempt) {
    const int x0 = rng.uniform_int(0, ctx.width() - side);
    const int y0 = rng.uniform_int(0, ctx.height() - side);
    const PatchRect region{x0, y0, side, side};
    if (ctx.masks && bfm::should_discard_sample(crop(ctx.masks->unreliable, region), cfg_.bfm)) continue;
    out.group = tiling::make_overlap_group(region, p, p);
    for (int i = 0; i < 4; ++i)
      out.inputs[i] = patch_inputs(ctx, out.group.patch_in_parent(i), kTrainIndexBase + 4 * n + i, cfg_);
    out.gt = crop(ctx.gt_norm, region);
    out.mask = ctx.masks ? crop(ctx.masks->reliable, region) : BinaryMask(side, side, 1);
    return true;
  }
  return false;
}

StepRecord Trainer::train_step(TrainState& st) const {
  StepRecord rec;
  rec.step = st.step;
  const int per_step = cfg_.train.batch_size * cfg_.train.accum_steps;
  st.params.zero_grad();
  std::vector<losses::LossValue> losses_seen;
  // Micro-batches run back to back; accumulating sample by sample keeps the
  // reduction order independent of how samples are split into micro-batches.
  for (int slot = 0; slot < per_step; ++slot) {
    const std::uint64_t n = st.step * static_cast<std::uint64_t>(per_step) + slot;
    GroupSample<float> sample;
    if (!draw_sample(n, sample)) {
      ++rec.discarded;
      continue;
    }
    const auto loss = group_loss(net_, st.params, sample, cfg_.loss, true);
    if (!std::isfinite(loss.value))
      throw NumericError("non-finite loss at step " + std::to_string(st.step) + ", sample " +
                         std::to_string(n) + " (scene seed " +
                         std::to_string(scenes_[scene_for_sample(n)].seed) + ")");
    losses_seen.push_back(loss);
  }
  rec.samples = static_cast<int>(losses_seen.size());
  if (rec.samples == 0) {
    rec.loss.value = 0;
    st.loss_history.push_back(0);
    ++st.step;
    return rec;
  }

  const double inv = 1.0 / rec.samples;
  rec.loss.terms = losses_seen.front().terms;
  for (auto& t : rec.loss.terms) t.raw = 0;
  for (const auto& l : losses_seen) {
    rec.loss.value += l.value * inv;
    for (std::size_t k = 0; k < l.terms.size(); ++k) rec.loss.terms[k].raw += l.terms[k].raw * inv;
  }

  const float inv_f = static_cast<float>(inv);
  const float lr = static_cast<float>(cfg_.train.learning_rate);
  const float mu = static_cast<float>(cfg_.train.momentum);
  for (std::size_t i = 0; i < st.params.size(); ++i) {
    auto& p = st.params[i];
    auto& v = st.momentum[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const float g = p.grad[k] * inv_f;
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient in '" + p.name + "' at step " + std::to_string(st.step));
      v[k] = mu * v[k] + g;
      p.value[k] -= lr * v[k];
    }
  }
  st.loss_history.push_back(rec.loss.value);
  ++st.step;
  return rec;
}

void write_loss_header(std::ostream& os) { os << "step,loss,masked,l1,l2,msg,con,samples,discarded\n"; }

void write_loss_row(std::ostream& os, const StepRecord& rec) {
  auto g = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  double con_weighted = 0;
  for (const auto& t : rec.loss.terms)
    if (t.name == "con") con_weighted = t.weight * t.raw;
  os << rec.step << ',' << g(rec.loss.value) << ',' << g(rec.loss.value - con_weighted) << ','
     << g(rec.loss.raw("l1")) << ',' << g(rec.loss.raw("l2")) << ',' << g(rec.loss.raw("msg")) << ','
     << g(rec.loss.raw("con")) << ',' << rec.samples << ',' << rec.discarded << '\n';
}

}  // namespace pro::cli

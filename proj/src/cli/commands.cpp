#include "pro/cli/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "pro/core/ops.hpp"
#include "pro/data/io.hpp"

namespace pro::cli {
namespace {

void prepare_out_dir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw DataError("output directory '" + dir.string() + "' is not empty (use --force to overwrite)");
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
}

std::size_t find_scene(const data::Dataset& ds, const std::string& scene_id) {
  for (std::size_t i = 0; i < ds.entries.size(); ++i)
    if (ds.entries[i].scene_id == scene_id) return i;
  throw DataError("scene '" + scene_id + "' not found in " + (ds.root / "manifest.csv").string());
}

fusion::ParameterStore<float> model_or_init(const fusion::ResidualNet& net, const RunConfig& cfg,
                                            const std::optional<fs::path>& checkpoint) {
  if (checkpoint) return load_model(*checkpoint, net);
  return net.make_parameters<float>(cfg.seed);
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg, int count, const fs::path& out_dir, bool force) {
  if (count < 0) throw ConfigError("scene count must be >= 0");
  prepare_out_dir(out_dir, force);
  std::vector<data::ManifestEntry> entries;
  for (int i = 0; i < count; ++i) {
    data::GenConfig g = cfg.gen;
    g.seed = data::scene_seed(cfg.seed, static_cast<std::uint64_t>(i));
    char id[32];
    std::snprintf(id, sizeof id, "scene_%04d", i);
    entries.push_back(data::write_scene(data::generate_scene(g), out_dir, id));
  }
  data::write_manifest(out_dir / "manifest.csv", entries);
}

TrainState cmd_train(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir, bool force,
                     std::ostream* log) {
  const data::Dataset ds = data::Dataset::open(data_dir);
  std::vector<data::Scene> scenes;
  for (std::size_t i = 0; i < ds.size(); ++i) scenes.push_back(ds.load(i));
  prepare_out_dir(out_dir, force);
  {
    std::ofstream f(out_dir / "config.ini", std::ios::trunc);
    f << dump_config(cfg);
  }
  const Trainer trainer(cfg, std::move(scenes));
  TrainState st = trainer.init_state();
  std::ofstream csv(out_dir / "loss.csv", std::ios::trunc);
  if (!csv) throw DataError("cannot write '" + (out_dir / "loss.csv").string() + "'");
  write_loss_header(csv);
  const std::uint64_t steps = trainer.total_steps();
  while (st.step < steps) {
    const StepRecord rec = trainer.train_step(st);
    write_loss_row(csv, rec);
    if (log) {
      write_loss_row(*log, rec);
      log->flush();
    }
    if (cfg.train.checkpoint_every > 0 && st.step % static_cast<std::uint64_t>(cfg.train.checkpoint_every) == 0 &&
        st.step < steps) {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_%06llu.pro", static_cast<unsigned long long>(st.step));
      save_train_state(st, out_dir / name);
    }
  }
  csv.flush();
  save_train_state(st, out_dir / "model.pro");
  return st;
}

InferResult cmd_infer(const RunConfig& cfg, const InferRequest& req) {
  const data::Dataset ds = data::Dataset::open(req.data_dir);
  const data::Scene scene = ds.load(find_scene(ds, req.scene_id));
  const fusion::ResidualNet net(cfg.net);
  const auto params = model_or_init(net, cfg, req.checkpoint);
  const SceneContext ctx = prepare_scene(scene, cfg, false);
  InferResult res = infer_scene(net, params, ctx, req.grid, cfg);
  std::error_code ec;
  fs::create_directories(req.out_dir, ec);
  if (ec) throw DataError("cannot create '" + req.out_dir.string() + "': " + ec.message());
  data::write_pfm(res.merged, req.out_dir / "depth.pfm");
  if (req.write_residual) {
    std::vector<DepthMap> residuals;
    for (std::size_t k = 0; k < res.refined.size(); ++k) {
      DepthMap r = res.refined[k];
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= res.coarse_rois[k][i];
      residuals.push_back(std::move(r));
    }
    data::write_png16(tiling::reassemble_inference(ctx.width(), ctx.height(), req.grid, residuals),
                      req.out_dir / "residual.png");
  }
  return res;
}

void cmd_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint, const fs::path& data_dir,
              const std::string& metric_list, const fs::path& out_dir) {
  const MetricSelection sel = MetricSelection::parse(metric_list);
  const data::Dataset ds = data::Dataset::open(data_dir);
  const fusion::ResidualNet net(cfg.net);
  const auto params = model_or_init(net, cfg, checkpoint);
  std::vector<metrics::MetricRow> rows;
  std::vector<TransparentReport> glass;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const data::Scene scene = ds.load(i);
    SceneEval ev = evaluate_scene(net, params, scene, i, cfg, sel);
    rows.push_back({ds.entries[i].scene_id, ev.report});
    glass.push_back(ev.transparent);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());
  std::ofstream m(out_dir / "metrics.csv", std::ios::trunc);
  if (!m) throw DataError("cannot write '" + (out_dir / "metrics.csv").string() + "'");
  metrics::write_metrics_csv(m, rows);

  std::ofstream t(out_dir / "transparent.csv", std::ios::trunc);
  if (!t) throw DataError("cannot write '" + (out_dir / "transparent.csv").string() + "'");
  t << "scene_id,transparent_absrel,opaque_absrel,transparent_pixels\n";
  double ts = 0, os = 0;
  int tn = 0, on = 0;
  std::size_t px = 0;
  for (std::size_t i = 0; i < glass.size(); ++i) {
    const auto& g = glass[i];
    t << rows[i].scene_id << ',' << fmt(g.transparent_absrel) << ',' << fmt(g.opaque_absrel) << ','
      << g.transparent_pixels << '\n';
    if (g.transparent_absrel) ts += *g.transparent_absrel, ++tn;
    if (g.opaque_absrel) os += *g.opaque_absrel, ++on;
    px += g.transparent_pixels;
  }
  t << "aggregate," << fmt(tn ? std::optional<double>(ts / tn) : std::nullopt) << ','
    << fmt(on ? std::optional<double>(os / on) : std::nullopt) << ',' << px << '\n';
}

void cmd_inspect_mask(const RunConfig& cfg, const fs::path& data_dir, const std::string& scene_id,
                      const fs::path& out_dir) {
  const data::Dataset ds = data::Dataset::open(data_dir);
  const data::Scene scene = ds.load(find_scene(ds, scene_id));
  const SceneContext ctx = prepare_scene(scene, cfg, true);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());
  data::write_png_mask(ctx.masks->unreliable, out_dir / "unreliable.png");
  data::write_png_mask(ctx.masks->edge, out_dir / "edge.png");
  data::write_png_mask(ctx.masks->reliable, out_dir / "bfm.png");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Patch-wise depth refinement: data generation, training, inference and evaluation"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string grid_text;
  bool force = false;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--seed", seed, "Run seed (overrides run.seed)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--grid", grid_text, "Inference grid RxC (overrides [grid])");
  app.add_flag("--force", force, "Allow writing into a nonempty output directory");

  std::optional<int> count;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--count", count, "Number of scenes (overrides run.count)");

  std::string data_dir;
  auto* train = app.add_subcommand("train", "Train the residual network");
  train->add_option("--data", data_dir, "Dataset directory (overrides run.data_dir)");

  std::string checkpoint;
  std::string scene_id;
  bool residual = false;
  auto* infer = app.add_subcommand("infer", "Refine one dataset scene");
  infer->add_option("--checkpoint", checkpoint, "Checkpoint (default: freshly initialized network)");
  infer->add_option("--data", data_dir, "Dataset directory");
  infer->add_option("--scene", scene_id, "Scene id from the manifest")->required();
  infer->add_flag("--residual", residual, "Also write residual.png");

  std::string metric_list = "all";
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint (default: freshly initialized network)");
  eval->add_option("--data", data_dir, "Dataset directory");
  eval->add_option("--metrics", metric_list, "Comma-separated subset of absrel,delta1,d3r,br,ce");

  auto* inspect = app.add_subcommand("inspect-mask", "Write the bias-free masks of one scene");
  inspect->add_option("--data", data_dir, "Dataset directory");
  inspect->add_option("--scene", scene_id, "Scene id from the manifest")->required();

  for (auto* sub : {gen, train, infer, eval, inspect}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!grid_text.empty()) cfg.grid = parse_grid(grid_text);
    cfg.validate();
    const fs::path out_dir = out.empty() ? fs::path(cfg.out_dir) : fs::path(out);
    const fs::path data = data_dir.empty() ? fs::path(cfg.data_dir) : fs::path(data_dir);
    const std::optional<fs::path> ckpt = checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint);

    if (*gen) {
      const fs::path dest = out.empty() ? data : out_dir;
      cmd_gen_data(cfg, count.value_or(cfg.count), dest, force);
      std::cout << "wrote " << count.value_or(cfg.count) << " scenes to " << dest.string() << '\n';
    } else if (*train) {
      const TrainState st = cmd_train(cfg, data, out_dir, force, nullptr);
      std::cout << "trained " << st.step << " steps; final loss "
                << (st.loss_history.empty() ? 0.0 : st.loss_history.back()) << "; model at "
                << (out_dir / "model.pro").string() << '\n';
    } else if (*infer) {
      InferRequest req{ckpt, data, scene_id, cfg.grid, out_dir, residual};
      cmd_infer(cfg, req);
      std::cout << "wrote " << (out_dir / "depth.pfm").string() << '\n';
    } else if (*eval) {
      cmd_eval(cfg, ckpt, data, metric_list, out_dir);
      std::cout << "wrote " << (out_dir / "metrics.csv").string() << '\n';
    } else if (*inspect) {
      cmd_inspect_mask(cfg, data, scene_id, out_dir);
      std::cout << "wrote masks to " << out_dir.string() << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace pro::cli

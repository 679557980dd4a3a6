#include "pro/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace pro::cli {
namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("invalid number '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string show(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Field builders keyed on a member accessor.
template <typename T, typename Acc>
Field field(std::string sec, std::string key, Acc acc) {
  Field f{std::move(sec), std::move(key), nullptr, nullptr};
  f.set = [acc](RunConfig& c, const std::string& v) {
    T& ref = acc(c);
    if constexpr (std::is_same_v<T, bool>)
      ref = parse_bool(v);
    else if constexpr (std::is_same_v<T, std::string>)
      ref = v;
    else
      ref = parse_number<T>(v);
  };
  f.get = [acc](const RunConfig& c) {
    const T& ref = acc(const_cast<RunConfig&>(c));
    if constexpr (std::is_same_v<T, bool>)
      return std::string(ref ? "true" : "false");
    else if constexpr (std::is_same_v<T, std::string>)
      return ref;
    else if constexpr (std::is_floating_point_v<T>)
      return show(ref);
    else
      return std::to_string(ref);
  };
  return f;
}

#define PRO_FIELD(T, sec, key, expr) field<T>(sec, key, [](RunConfig& c) -> T& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      PRO_FIELD(std::uint64_t, "run", "seed", c.seed),
      PRO_FIELD(std::string, "run", "out_dir", c.out_dir),
      PRO_FIELD(std::string, "run", "data_dir", c.data_dir),
      PRO_FIELD(int, "run", "count", c.count),

      PRO_FIELD(int, "gen", "size", c.gen.size),
      PRO_FIELD(int, "gen", "min_primitives", c.gen.min_primitives),
      PRO_FIELD(int, "gen", "max_primitives", c.gen.max_primitives),
      PRO_FIELD(double, "gen", "transparent_prob", c.gen.transparent_prob),
      PRO_FIELD(double, "gen", "texture_scale", c.gen.texture_scale),

      PRO_FIELD(int, "oracle", "working_res", c.oracle.working_res),
      PRO_FIELD(double, "oracle", "blur_sigma", c.oracle.blur_sigma),
      PRO_FIELD(double, "oracle", "gamma", c.oracle.gamma),
      PRO_FIELD(double, "oracle", "jitter_scale_range", c.oracle.jitter_scale_range),
      PRO_FIELD(double, "oracle", "jitter_shift_range", c.oracle.jitter_shift_range),
      PRO_FIELD(int, "oracle", "feature_channels", c.oracle.feature_channels),
      PRO_FIELD(std::uint64_t, "oracle", "seed", c.oracle.seed),

      PRO_FIELD(int, "net", "base_channels", c.net.base_channels),
      PRO_FIELD(int, "net", "levels", c.net.levels),
      PRO_FIELD(int, "net", "patch_res", c.net.patch_res),

      PRO_FIELD(double, "loss", "lambda_con", c.loss.lambda_con),
      PRO_FIELD(double, "loss", "w_l1", c.loss.w_l1),
      PRO_FIELD(double, "loss", "w_l2", c.loss.w_l2),
      PRO_FIELD(double, "loss", "w_msg", c.loss.w_msg),
      PRO_FIELD(int, "loss", "msg_scales", c.loss.msg_scales),

      PRO_FIELD(double, "bfm", "tau", c.bfm.tau),
      PRO_FIELD(int, "bfm", "dilate_kh", c.bfm.dilate_kh),
      PRO_FIELD(int, "bfm", "dilate_kw", c.bfm.dilate_kw),
      PRO_FIELD(double, "bfm", "edge_grad_threshold", c.bfm.edge_grad_threshold),
      PRO_FIELD(double, "bfm", "discard_threshold", c.bfm.discard_threshold),

      PRO_FIELD(int, "train", "epochs", c.train.epochs),
      PRO_FIELD(int, "train", "max_steps", c.train.max_steps),
      PRO_FIELD(int, "train", "batch_size", c.train.batch_size),
      PRO_FIELD(int, "train", "accum_steps", c.train.accum_steps),
      PRO_FIELD(double, "train", "learning_rate", c.train.learning_rate),
      PRO_FIELD(double, "train", "momentum", c.train.momentum),
      PRO_FIELD(int, "train", "patch_size", c.train.patch_size),
      PRO_FIELD(int, "train", "overlap", c.train.overlap),
      PRO_FIELD(bool, "train", "use_bfm", c.train.use_bfm),
      PRO_FIELD(int, "train", "max_resample", c.train.max_resample),
      PRO_FIELD(int, "train", "checkpoint_every", c.train.checkpoint_every),

      PRO_FIELD(int, "grid", "rows", c.grid.rows),
      PRO_FIELD(int, "grid", "cols", c.grid.cols),

      PRO_FIELD(int, "eval", "d3r_cell", c.eval.d3r_cell),
      PRO_FIELD(double, "eval", "d3r_threshold", c.eval.d3r_threshold),
      PRO_FIELD(int, "eval", "br_tol", c.eval.br_tol),
      PRO_FIELD(double, "eval", "edge_threshold", c.eval.edge_threshold),
      PRO_FIELD(int, "eval", "ce_overlap", c.eval.ce_overlap),
      PRO_FIELD(int, "eval", "ce_groups", c.eval.ce_groups),
      PRO_FIELD(std::string, "eval", "target", c.eval.target),
  };
  return all;
}

#undef PRO_FIELD

}  // namespace

void RunConfig::validate() const {
  gen.validate();
  oracle.validate();
  net.validate();
  loss.validate();
  bfm.validate();
  if (count < 0) throw ConfigError("run.count must be >= 0");
  if (oracle.working_res != net.patch_res)
    throw ConfigError("oracle.working_res (" + std::to_string(oracle.working_res) +
                      ") must equal net.patch_res (" + std::to_string(net.patch_res) + ")");
  if (oracle.feature_channels != net.base_channels)
    throw ConfigError("oracle.feature_channels must equal net.base_channels");
  if (train.epochs < 0 || train.max_steps < 0) throw ConfigError("train.epochs and train.max_steps must be >= 0");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.accum_steps < 1) throw ConfigError("train.accum_steps must be >= 1");
  if (!(train.learning_rate >= 0)) throw ConfigError("train.learning_rate must be >= 0");
  if (!(train.momentum >= 0 && train.momentum < 1)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (train.patch_size < 2) throw ConfigError("train.patch_size must be >= 2");
  if (train.overlap < 0 || train.overlap > train.patch_size)
    throw ConfigError("train.overlap must lie in [0, patch_size]");
  if (train.crop_size() > gen.size) throw ConfigError("training crop (2 * patch_size - overlap) exceeds gen.size");
  if (train.max_resample < 1) throw ConfigError("train.max_resample must be >= 1");
  if (train.checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  if (grid.rows < 1 || grid.cols < 1) throw ConfigError("grid rows and cols must be >= 1");
  if (eval.d3r_cell < 1 || eval.br_tol < 0 || eval.ce_groups < 0)
    throw ConfigError("eval.d3r_cell >= 1, eval.br_tol >= 0, eval.ce_groups >= 0 required");
  if (eval.ce_overlap < 0 || eval.ce_overlap > train.patch_size)
    throw ConfigError("eval.ce_overlap must lie in [0, train.patch_size]");
  if (eval.target != "true" && eval.target != "labeled")
    throw ConfigError("eval.target must be 'true' or 'labeled'");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* match = nullptr;
    for (const auto& f : fields())
      if (f.section == section && f.key == key) match = &f;
    if (!match)
      throw ConfigError(where() + "unknown key '" + key + "' in section [" + section + "]");
    try {
      match->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + section + "." + key + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config(f, path.string());
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

tiling::GridSpec parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("grid must look like RxC, got '" + text + "'");
  tiling::GridSpec g;
  try {
    g.rows = parse_number<int>(text.substr(0, x));
    g.cols = parse_number<int>(text.substr(x + 1));
  } catch (const ConfigError&) {
    throw ConfigError("grid must look like RxC, got '" + text + "'");
  }
  if (g.rows < 1 || g.cols < 1) throw ConfigError("grid dimensions must be >= 1");
  return g;
}

}  // namespace pro::cli

#include "trajpred/config.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "trajpred/io.hpp"
#include "trajpred/util.hpp"

namespace trajpred {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("config: " + what);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) fail("bad number for " + key + ": " + v);
  return d;
}

int to_int(const std::string& v, const std::string& key) {
  char* end = nullptr;
  long long i = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) fail("bad integer for " + key + ": " + v);
  return static_cast<int>(i);
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  char* end = nullptr;
  std::uint64_t i = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) fail("bad seed for " + key + ": " + v);
  return i;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail("bad bool for " + key + ": " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::istringstream is(v);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& t : split_list(v)) out.push_back(to_double(t, key));
  return out;
}

std::vector<int> to_ints(const std::string& v, const std::string& key) {
  std::vector<int> out;
  for (const auto& t : split_list(v)) out.push_back(to_int(t, key));
  return out;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& v, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail("line " + std::to_string(lineno) +
                                ": unterminated section header");
      section = t.substr(1, t.size() - 2);
      static const char* known[] = {"paths",  "toy",  "anchors", "subsample",
                                    "train",  "eval", "grid",    "plot",
                                    "sweep"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* s) {
            return section == s;
          }) == std::end(known))
        fail("unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    std::string qkey = section + "." + key;

    if (section == "paths") {
      if (key == "dataset") cfg.paths.dataset = value;
      else if (key == "anchors") cfg.paths.anchors = value;
      else if (key == "checkpoint") cfg.paths.checkpoint = value;
      else if (key == "report") cfg.paths.report = value;
      else if (key == "grids") cfg.paths.grids = value;
      else if (key == "plot") cfg.paths.plot = value;
      else if (key == "sweep") cfg.paths.sweep = value;
      else fail("unknown key " + qkey);
    } else if (section == "toy") {
      if (key == "n") cfg.toy.n = to_int(value, qkey);
      else if (key == "t") cfg.toy.T = to_int(value, qkey);
      else if (key == "h") cfg.toy.H = to_int(value, qkey);
      else if (key == "dt") cfg.toy.dt = to_double(value, qkey);
      else if (key == "speed") cfg.toy.speed = to_double(value, qkey);
      else if (key == "amplitude") cfg.toy.amplitude = to_double(value, qkey);
      else if (key == "omega_max") cfg.toy.omega_max = to_double(value, qkey);
      else if (key == "branch_probs") {
        auto v = to_doubles(value, qkey);
        if (v.size() != 3) fail(qkey + " needs exactly 3 values");
        std::copy(v.begin(), v.end(), cfg.toy.branch_probs.begin());
      } else if (key == "branch_headings") {
        auto v = to_doubles(value, qkey);
        if (v.size() != 3) fail(qkey + " needs exactly 3 values");
        std::copy(v.begin(), v.end(), cfg.toy.branch_headings.begin());
      } else if (key == "seed") cfg.toy.seed = to_u64(value, qkey);
      else fail("unknown key " + qkey);
    } else if (section == "anchors") {
      if (key == "mode") {
        if (value != "kmeans" && value != "enumerate")
          fail("anchors.mode must be kmeans or enumerate");
        cfg.anchors.mode = value;
      } else if (key == "k") cfg.anchors.k = to_int(value, qkey);
      else if (key == "seed") cfg.anchors.seed = to_u64(value, qkey);
      else if (key == "max_iters") cfg.anchors.max_iters = to_int(value, qkey);
      else if (key == "n_orientations")
        cfg.anchors.n_orientations = to_int(value, qkey);
      else if (key == "distances") cfg.anchors.distances = to_doubles(value, qkey);
      else if (key == "include_stationary")
        cfg.anchors.include_stationary = to_bool(value, qkey);
      else fail("unknown key " + qkey);
    } else if (section == "subsample") {
      if (key == "enabled") cfg.subsample.enabled = to_bool(value, qkey);
      else if (key == "curvature_bins")
        cfg.subsample.curvature_bins = to_int(value, qkey);
      else if (key == "distance_bins")
        cfg.subsample.distance_bins = to_int(value, qkey);
      else if (key == "cap_fraction")
        cfg.subsample.cap_fraction = to_double(value, qkey);
      else if (key == "seed") cfg.subsample.seed = to_u64(value, qkey);
      else fail("unknown key " + qkey);
    } else if (section == "train") {
      if (key == "loss") cfg.train.loss = loss_from_string(value);
      else if (key == "with_sigma") cfg.train.with_sigma = to_bool(value, qkey);
      else if (key == "hidden") cfg.train.hidden = to_ints(value, qkey);
      else if (key == "batch_size") cfg.train.batch_size = to_int(value, qkey);
      else if (key == "total_steps") cfg.train.total_steps = to_int(value, qkey);
      else if (key == "lr_peak") cfg.train.lr_peak = to_double(value, qkey);
      else if (key == "warmup_fraction")
        cfg.train.warmup_fraction = to_double(value, qkey);
      else if (key == "adam_beta1") cfg.train.adam_beta1 = to_double(value, qkey);
      else if (key == "adam_beta2") cfg.train.adam_beta2 = to_double(value, qkey);
      else if (key == "adam_eps") cfg.train.adam_eps = to_double(value, qkey);
      else if (key == "soft_temperature")
        cfg.train.soft_temperature = to_double(value, qkey);
      else if (key == "seed") cfg.train.seed = to_u64(value, qkey);
      else fail("unknown key " + qkey);
    } else if (section == "eval") {
      if (key == "methods") {
        cfg.eval.methods = split_list(value);
        for (const auto& m : cfg.eval.methods)
          if (m != "linear" && m != "regression" && m != "multipath" &&
              m != "min_of_k")
            fail("unknown eval method: " + m);
      } else if (key == "m_values") cfg.eval.m_values = to_ints(value, qkey);
      else if (key == "test_fraction")
        cfg.eval.test_fraction = to_double(value, qkey);
      else fail("unknown key " + qkey);
    } else if (section == "grid") {
      if (key == "cell_size") cfg.grid.cell_size = to_double(value, qkey);
      else if (key == "padding_sigmas")
        cfg.grid.padding_sigmas = to_double(value, qkey);
      else if (key == "example_index")
        cfg.grid.example_index = to_int(value, qkey);
      else if (key == "method") cfg.grid.method = value;
      else fail("unknown key " + qkey);
    } else if (section == "plot") {
      if (key == "example_index") cfg.plot.example_index = to_int(value, qkey);
      else if (key == "n_samples") cfg.plot.n_samples = to_int(value, qkey);
      else if (key == "method") cfg.plot.method = value;
      else fail("unknown key " + qkey);
    } else if (section == "sweep") {
      if (key == "k_values") cfg.sweep.k_values = to_ints(value, qkey);
      else fail("unknown key " + qkey);
    } else {
      fail("key before any section: " + key);
    }
  }
  return cfg;
}

std::string write_config(const ExperimentConfig& cfg) {
  std::string out;
  auto fd = [](double v) { return fmt_double(v); };
  out += "[paths]\n";
  out += "dataset = " + cfg.paths.dataset + "\n";
  out += "anchors = " + cfg.paths.anchors + "\n";
  out += "checkpoint = " + cfg.paths.checkpoint + "\n";
  out += "report = " + cfg.paths.report + "\n";
  out += "grids = " + cfg.paths.grids + "\n";
  out += "plot = " + cfg.paths.plot + "\n";
  out += "sweep = " + cfg.paths.sweep + "\n";
  out += "\n[toy]\n";
  out += "n = " + std::to_string(cfg.toy.n) + "\n";
  out += "t = " + std::to_string(cfg.toy.T) + "\n";
  out += "h = " + std::to_string(cfg.toy.H) + "\n";
  out += "dt = " + fd(cfg.toy.dt) + "\n";
  out += "speed = " + fd(cfg.toy.speed) + "\n";
  out += "amplitude = " + fd(cfg.toy.amplitude) + "\n";
  out += "omega_max = " + fd(cfg.toy.omega_max) + "\n";
  out += "branch_probs = " + fd(cfg.toy.branch_probs[0]) + " " +
         fd(cfg.toy.branch_probs[1]) + " " + fd(cfg.toy.branch_probs[2]) + "\n";
  out += "branch_headings = " + fd(cfg.toy.branch_headings[0]) + " " +
         fd(cfg.toy.branch_headings[1]) + " " + fd(cfg.toy.branch_headings[2]) +
         "\n";
  out += "seed = " + std::to_string(cfg.toy.seed) + "\n";
  out += "\n[anchors]\n";
  out += "mode = " + cfg.anchors.mode + "\n";
  out += "k = " + std::to_string(cfg.anchors.k) + "\n";
  out += "seed = " + std::to_string(cfg.anchors.seed) + "\n";
  out += "max_iters = " + std::to_string(cfg.anchors.max_iters) + "\n";
  out += "n_orientations = " + std::to_string(cfg.anchors.n_orientations) + "\n";
  out += "distances = " + join(cfg.anchors.distances, fd) + "\n";
  out += std::string("include_stationary = ") +
         (cfg.anchors.include_stationary ? "true" : "false") + "\n";
  out += "\n[subsample]\n";
  out += std::string("enabled = ") + (cfg.subsample.enabled ? "true" : "false") +
         "\n";
  out += "curvature_bins = " + std::to_string(cfg.subsample.curvature_bins) + "\n";
  out += "distance_bins = " + std::to_string(cfg.subsample.distance_bins) + "\n";
  out += "cap_fraction = " + fd(cfg.subsample.cap_fraction) + "\n";
  out += "seed = " + std::to_string(cfg.subsample.seed) + "\n";
  out += "\n[train]\n";
  out += "loss = " + to_string(cfg.train.loss) + "\n";
  out += std::string("with_sigma = ") + (cfg.train.with_sigma ? "true" : "false") +
         "\n";
  out += "hidden = " +
         join(cfg.train.hidden, [](int v) { return std::to_string(v); }) + "\n";
  out += "batch_size = " + std::to_string(cfg.train.batch_size) + "\n";
  out += "total_steps = " + std::to_string(cfg.train.total_steps) + "\n";
  out += "lr_peak = " + fd(cfg.train.lr_peak) + "\n";
  out += "warmup_fraction = " + fd(cfg.train.warmup_fraction) + "\n";
  out += "adam_beta1 = " + fd(cfg.train.adam_beta1) + "\n";
  out += "adam_beta2 = " + fd(cfg.train.adam_beta2) + "\n";
  out += "adam_eps = " + fd(cfg.train.adam_eps) + "\n";
  out += "soft_temperature = " + fd(cfg.train.soft_temperature) + "\n";
  out += "seed = " + std::to_string(cfg.train.seed) + "\n";
  out += "\n[eval]\n";
  out += "methods = " +
         join(cfg.eval.methods, [](const std::string& s) { return s; }) + "\n";
  out += "m_values = " +
         join(cfg.eval.m_values, [](int v) { return std::to_string(v); }) + "\n";
  out += "test_fraction = " + fd(cfg.eval.test_fraction) + "\n";
  out += "\n[grid]\n";
  out += "cell_size = " + fd(cfg.grid.cell_size) + "\n";
  out += "padding_sigmas = " + fd(cfg.grid.padding_sigmas) + "\n";
  out += "example_index = " + std::to_string(cfg.grid.example_index) + "\n";
  out += "method = " + cfg.grid.method + "\n";
  out += "\n[plot]\n";
  out += "example_index = " + std::to_string(cfg.plot.example_index) + "\n";
  out += "n_samples = " + std::to_string(cfg.plot.n_samples) + "\n";
  out += "method = " + cfg.plot.method + "\n";
  out += "\n[sweep]\n";
  out += "k_values = " +
         join(cfg.sweep.k_values, [](int v) { return std::to_string(v); }) + "\n";
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

std::string path_with_tag(const std::string& path, const std::string& tag) {
  std::size_t slash = path.find_last_of('/');
  std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "." + tag;
  return path.substr(0, dot) + "." + tag + path.substr(dot);
}

std::string method_for_loss(LossKind loss) {
  switch (loss) {
    case LossKind::MultipathHard:
    case LossKind::MultipathSoft: return "multipath";
    case LossKind::MinOfK: return "min_of_k";
    case LossKind::Regression: return "regression";
  }
  throw std::invalid_argument("unknown loss kind");
}

std::string anchors_path(const ExperimentConfig& cfg, int k) {
  return path_with_tag(cfg.paths.anchors, "k" + std::to_string(k));
}

std::string checkpoint_path(const ExperimentConfig& cfg,
                            const std::string& method) {
  return path_with_tag(cfg.paths.checkpoint, method);
}

}  // namespace trajpred

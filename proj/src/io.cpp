#include "trajpred/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajpred/util.hpp"

namespace trajpred {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error(what);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& ctx) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) fail(ctx + ": bad number '" + tok + "'");
  return v;
}

long long parse_int(const std::string& tok, const std::string& ctx) {
  char* end = nullptr;
  long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size()) fail(ctx + ": bad integer '" + tok + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& tok, const std::string& ctx) {
  char* end = nullptr;
  std::uint64_t v = std::strtoull(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size()) fail(ctx + ": bad seed '" + tok + "'");
  return v;
}

// key=value token; returns value or fails.
std::string kv(const std::string& tok, const std::string& key,
               const std::string& ctx) {
  std::string prefix = key + "=";
  if (tok.rfind(prefix, 0) != 0)
    fail(ctx + ": expected '" + key + "=...', got '" + tok + "'");
  return tok.substr(prefix.size());
}

// Line-oriented cursor over the whole text.
struct Lines {
  std::vector<std::string> lines;
  std::size_t pos{0};
  std::string ctx;

  explicit Lines(const std::string& text, std::string context)
      : ctx(std::move(context)) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
  }
  const std::string& next() {
    if (pos >= lines.size()) fail(ctx + ": unexpected end of file");
    return lines[pos++];
  }
  bool done() const { return pos >= lines.size(); }
};

void expect_magic(Lines& in, const std::string& magic, int version) {
  auto toks = split_ws(in.next());
  if (toks.size() != 2 || toks[0] != magic)
    fail(in.ctx + ": not a " + magic + " file");
  if (parse_int(toks[1], in.ctx) != version)
    fail(in.ctx + ": unsupported " + magic + " version " + toks[1] +
         " (expected " + std::to_string(version) + ")");
}

void append_row(std::string& out, const Eigen::RowVector2d& row) {
  out += fmt_double(row.x());
  out += ' ';
  out += fmt_double(row.y());
  out += '\n';
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write file: " + path);
  out << content;
  if (!out) fail("write failed: " + path);
}

// --- dataset -----------------------------------------------------------------

std::string serialize_dataset(std::span<const ToyScene> scenes) {
  const int H = scenes.empty() ? 0 : static_cast<int>(scenes[0].history.points.rows());
  const int T = scenes.empty() ? 0 : scenes[0].future.length();
  const double dt = scenes.empty() ? 0.0 : scenes[0].future.dt;
  std::string out = "trajpred.dataset 1\n";
  out += "H=" + std::to_string(H) + " T=" + std::to_string(T) +
         " dt=" + fmt_double(dt) + " n=" + std::to_string(scenes.size()) + "\n";
  for (const ToyScene& s : scenes) {
    if (s.history.points.rows() != H || s.future.length() != T ||
        s.future.dt != dt)
      fail("dataset: inconsistent scene shapes");
    out += "1 " + std::to_string(s.seed) + " " + kBranchNames[s.branch];
    for (int i = 0; i < H; ++i)
      out += " " + fmt_double(s.history.points(i, 0)) + " " +
             fmt_double(s.history.points(i, 1));
    for (int t = 0; t < T; ++t)
      out += " " + fmt_double(s.future.points(t, 0)) + " " +
             fmt_double(s.future.points(t, 1));
    out += "\n";
  }
  return out;
}

std::vector<ToyScene> parse_dataset(const std::string& text) {
  Lines in(text, "dataset");
  expect_magic(in, "trajpred.dataset", 1);
  auto meta = split_ws(in.next());
  if (meta.size() != 4) fail("dataset: bad meta line");
  int H = static_cast<int>(parse_int(kv(meta[0], "H", "dataset"), "dataset"));
  int T = static_cast<int>(parse_int(kv(meta[1], "T", "dataset"), "dataset"));
  double dt = parse_double(kv(meta[2], "dt", "dataset"), "dataset");
  long long n = parse_int(kv(meta[3], "n", "dataset"), "dataset");
  std::vector<ToyScene> scenes;
  scenes.reserve(n);
  for (long long i = 0; i < n; ++i) {
    auto toks = split_ws(in.next());
    std::size_t want = 3 + 2 * static_cast<std::size_t>(H + T);
    if (toks.size() != want)
      fail("dataset: record " + std::to_string(i) + " has " +
           std::to_string(toks.size()) + " fields, expected " +
           std::to_string(want));
    if (parse_int(toks[0], "dataset") != 1)
      fail("dataset: unsupported record version " + toks[0]);
    ToyScene s;
    s.seed = parse_u64(toks[1], "dataset");
    try {
      s.branch = branch_from_name(toks[2]);
    } catch (const std::invalid_argument& e) {
      fail(std::string("dataset: ") + e.what());
    }
    Waypoints past(H, 2), future(T, 2);
    std::size_t f = 3;
    for (int r = 0; r < H; ++r) {
      past(r, 0) = parse_double(toks[f++], "dataset");
      past(r, 1) = parse_double(toks[f++], "dataset");
    }
    for (int r = 0; r < T; ++r) {
      future(r, 0) = parse_double(toks[f++], "dataset");
      future(r, 1) = parse_double(toks[f++], "dataset");
    }
    s.history = make_history(past);
    s.future = Trajectory{future, dt};
    scenes.push_back(std::move(s));
  }
  if (!in.done()) fail("dataset: trailing content after records");
  return scenes;
}

// --- anchors -----------------------------------------------------------------

std::string serialize_anchors(const AnchorSet& set) {
  validate(set);
  std::string out = "trajpred.anchors 1\n";
  out += "K=" + std::to_string(set.count()) +
         " T=" + std::to_string(set.horizon()) +
         " dt=" + fmt_double(set.dt()) + "\n";
  for (const Trajectory& a : set.anchors)
    for (int t = 0; t < a.length(); ++t) append_row(out, a.points.row(t));
  return out;
}

AnchorSet parse_anchors(const std::string& text) {
  Lines in(text, "anchors");
  expect_magic(in, "trajpred.anchors", 1);
  auto meta = split_ws(in.next());
  if (meta.size() != 3) fail("anchors: bad meta line");
  int K = static_cast<int>(parse_int(kv(meta[0], "K", "anchors"), "anchors"));
  int T = static_cast<int>(parse_int(kv(meta[1], "T", "anchors"), "anchors"));
  double dt = parse_double(kv(meta[2], "dt", "anchors"), "anchors");
  AnchorSet set;
  for (int k = 0; k < K; ++k) {
    Waypoints pts(T, 2);
    for (int t = 0; t < T; ++t) {
      auto toks = split_ws(in.next());
      if (toks.size() != 2) fail("anchors: bad coordinate row");
      pts(t, 0) = parse_double(toks[0], "anchors");
      pts(t, 1) = parse_double(toks[1], "anchors");
    }
    set.anchors.push_back(Trajectory{pts, dt});
  }
  if (!in.done()) fail("anchors: trailing content");
  validate(set);
  return set;
}

std::uint64_t anchors_hash(const AnchorSet& set) {
  return fnv1a(serialize_anchors(set));
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// --- checkpoint ----------------------------------------------------------------

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const MlpConfig& cfg = ckpt.params.cfg;
  std::string out = "trajpred.checkpoint 1\n";
  out += "loss=" + to_string(ckpt.loss) +
         " with_sigma=" + std::to_string(cfg.with_sigma ? 1 : 0) +
         " K=" + std::to_string(cfg.K) + " T=" + std::to_string(cfg.T) +
         " input_dim=" + std::to_string(cfg.input_dim) + " hidden=";
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i)
    out += (i ? "," : "") + std::to_string(cfg.hidden[i]);
  out += "\nanchors_hash=" + hash_hex(ckpt.anchors_hash) + "\n";
  for (std::size_t l = 0; l < ckpt.params.W.size(); ++l) {
    const Eigen::MatrixXd& W = ckpt.params.W[l];
    out += "layer rows=" + std::to_string(W.rows()) +
           " cols=" + std::to_string(W.cols()) + "\n";
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        if (j) out += ' ';
        out += fmt_double(W(i, j));
      }
      out += '\n';
    }
    out += "bias";
    for (Eigen::Index i = 0; i < ckpt.params.b[l].size(); ++i)
      out += " " + fmt_double(ckpt.params.b[l][i]);
    out += '\n';
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
  Lines in(text, "checkpoint");
  expect_magic(in, "trajpred.checkpoint", 1);
  auto meta = split_ws(in.next());
  if (meta.size() != 6) fail("checkpoint: bad meta line");
  Checkpoint ckpt;
  try {
    ckpt.loss = loss_from_string(kv(meta[0], "loss", "checkpoint"));
  } catch (const std::invalid_argument& e) {
    fail(std::string("checkpoint: ") + e.what());
  }
  MlpConfig cfg;
  cfg.with_sigma =
      parse_int(kv(meta[1], "with_sigma", "checkpoint"), "checkpoint") != 0;
  cfg.K = static_cast<int>(parse_int(kv(meta[2], "K", "checkpoint"), "checkpoint"));
  cfg.T = static_cast<int>(parse_int(kv(meta[3], "T", "checkpoint"), "checkpoint"));
  cfg.input_dim = static_cast<int>(
      parse_int(kv(meta[4], "input_dim", "checkpoint"), "checkpoint"));
  cfg.hidden.clear();
  {
    std::string list = kv(meta[5], "hidden", "checkpoint");
    std::string tok;
    std::istringstream is(list);
    while (std::getline(is, tok, ','))
      if (!tok.empty())
        cfg.hidden.push_back(static_cast<int>(parse_int(tok, "checkpoint")));
  }
  auto hash_toks = split_ws(in.next());
  if (hash_toks.size() != 1) fail("checkpoint: bad anchors_hash line");
  {
    std::string hex = kv(hash_toks[0], "anchors_hash", "checkpoint");
    char* end = nullptr;
    ckpt.anchors_hash = std::strtoull(hex.c_str(), &end, 16);
    if (end != hex.c_str() + hex.size()) fail("checkpoint: bad hash hex");
  }
  ckpt.params.cfg = cfg;
  std::vector<int> dims;
  dims.push_back(cfg.input_dim);
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(cfg.output_dim());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    auto head = split_ws(in.next());
    if (head.size() != 3 || head[0] != "layer")
      fail("checkpoint: expected layer header");
    Eigen::Index rows = parse_int(kv(head[1], "rows", "checkpoint"), "checkpoint");
    Eigen::Index cols = parse_int(kv(head[2], "cols", "checkpoint"), "checkpoint");
    if (rows != dims[l + 1] || cols != dims[l])
      fail("checkpoint: layer shape does not match config");
    Eigen::MatrixXd W(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      auto toks = split_ws(in.next());
      if (static_cast<Eigen::Index>(toks.size()) != cols)
        fail("checkpoint: bad weight row");
      for (Eigen::Index j = 0; j < cols; ++j)
        W(i, j) = parse_double(toks[j], "checkpoint");
    }
    auto btoks = split_ws(in.next());
    if (btoks.size() != static_cast<std::size_t>(rows) + 1 ||
        btoks[0] != "bias")
      fail("checkpoint: bad bias line");
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i)
      b[i] = parse_double(btoks[i + 1], "checkpoint");
    ckpt.params.W.push_back(std::move(W));
    ckpt.params.b.push_back(std::move(b));
  }
  if (!in.done()) fail("checkpoint: trailing content");
  return ckpt;
}

// --- training log ---------------------------------------------------------------

std::string serialize_train_log(std::span<const TrainLogEntry> log) {
  std::string out = "step,lr,loss\n";
  for (const TrainLogEntry& e : log)
    out += std::to_string(e.step) + "," + fmt_double(e.lr) + "," +
           fmt_double(e.loss) + "\n";
  return out;
}

// --- report ----------------------------------------------------------------------

namespace {

std::string maybe_bracket(double v, bool clamped) {
  std::string s = fmt_double(v);
  return clamped ? "(" + s + ")" : s;
}

}  // namespace

std::string serialize_report(const Report& report) {
  std::string out = "trajpred.report,1\n";
  out += "# overall\n";
  out += "method,category,count,ll,ll_std,ade,ade_std,fde,fde_std";
  for (int m : report.m_values) {
    std::string ms = std::to_string(m);
    out += ",minade_" + ms + ",minade_" + ms + "_std,minmsd_" + ms +
           ",minmsd_" + ms + "_std";
  }
  out += "\n";
  for (const ReportRow& row : report.rows) {
    if (row.category != "overall") continue;
    out += row.method + "," + row.category + "," + std::to_string(row.count);
    out += "," + (row.ll_mean ? fmt_double(*row.ll_mean) : std::string("-"));
    out += "," + (row.ll_std ? fmt_double(*row.ll_std) : std::string("-"));
    out += "," + fmt_double(row.ade_mean) + "," + fmt_double(row.ade_std);
    out += "," + fmt_double(row.fde_mean) + "," + fmt_double(row.fde_std);
    for (const MinStat& ms : row.min_stats) {
      bool clamped = ms.m_used < ms.m_requested;
      out += "," + maybe_bracket(ms.min_ade_mean, clamped) + "," +
             maybe_bracket(ms.min_ade_std, clamped);
      out += "," + maybe_bracket(ms.min_msd_mean, clamped) + "," +
             maybe_bracket(ms.min_msd_std, clamped);
    }
    out += "\n";
  }
  out += "# categories\n";
  out += "method,category,count,ade,ade_std,fde,fde_std\n";
  for (const ReportRow& row : report.rows) {
    if (row.category == "overall") continue;
    out += row.method + "," + row.category + "," + std::to_string(row.count) +
           "," + fmt_double(row.ade_mean) + "," + fmt_double(row.ade_std) +
           "," + fmt_double(row.fde_mean) + "," + fmt_double(row.fde_std) +
           "\n";
  }
  out += "# per_step\n";
  out += "method,t,ade\n";
  for (const PerStepRow& ps : report.per_step)
    for (Eigen::Index t = 0; t < ps.ade_t.size(); ++t)
      out += ps.method + "," + std::to_string(t + 1) + "," +
             fmt_double(ps.ade_t[t]) + "\n";
  return out;
}

// --- occupancy grids ----------------------------------------------------------------

std::string serialize_grid(const OccupancyGrid& grid) {
  std::string out = "trajpred.grid 1\n";
  out += "T=" + std::to_string(grid.planes.size()) + "\n";
  const GridSpec& s = grid.spec;
  for (std::size_t t = 0; t < grid.planes.size(); ++t) {
    out += "t=" + std::to_string(t + 1) + " origin_x=" + fmt_double(s.origin.x()) +
           " origin_y=" + fmt_double(s.origin.y()) +
           " cell=" + fmt_double(s.cell_size) +
           " width=" + std::to_string(s.width) +
           " height=" + std::to_string(s.height) + "\n";
    const Eigen::MatrixXd& plane = grid.planes[t];
    for (int iy = 0; iy < s.height; ++iy) {
      for (int ix = 0; ix < s.width; ++ix) {
        if (ix) out += ' ';
        out += fmt_double(plane(iy, ix));
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace trajpred

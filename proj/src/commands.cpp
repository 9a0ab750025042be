#include "trajpred/commands.hpp"

#include <memory>
#include <ostream>

#include "trajpred/io.hpp"
#include "trajpred/metrics.hpp"
#include "trajpred/plot.hpp"
#include "trajpred/util.hpp"

namespace trajpred {

namespace {

std::vector<ToyScene> load_scenes(const ExperimentConfig& cfg) {
  return parse_dataset(read_text_file(cfg.paths.dataset));
}

std::vector<ToyScene> pick(const std::vector<ToyScene>& scenes,
                           const std::vector<std::size_t>& idx) {
  std::vector<ToyScene> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(scenes[i]);
  return out;
}

// K implied by the anchor section (enumerate mode derives it).
int configured_k(const ExperimentConfig& cfg) {
  if (cfg.anchors.mode == "enumerate")
    return cfg.anchors.n_orientations *
               static_cast<int>(cfg.anchors.distances.size()) +
           (cfg.anchors.include_stationary ? 1 : 0);
  return cfg.anchors.k;
}

std::shared_ptr<const AnchorSet> load_anchors(const ExperimentConfig& cfg,
                                              int k) {
  return std::make_shared<AnchorSet>(
      parse_anchors(read_text_file(anchors_path(cfg, k))));
}

struct LoadedModel {
  Checkpoint ckpt;
  std::shared_ptr<const AnchorSet> anchors;
};

LoadedModel load_model(const ExperimentConfig& cfg, const std::string& method) {
  if (method == "linear")
    throw std::invalid_argument(method + ": not a learned method");
  LoadedModel m;
  m.ckpt = parse_checkpoint(read_text_file(checkpoint_path(cfg, method)));
  if (method_for_loss(m.ckpt.loss) != method)
    throw std::runtime_error("checkpoint at " + checkpoint_path(cfg, method) +
                             " was trained with loss " + to_string(m.ckpt.loss) +
                             ", not for method " + method);
  m.anchors = load_anchors(cfg, m.ckpt.params.cfg.K);
  std::uint64_t h = anchors_hash(*m.anchors);
  if (h != m.ckpt.anchors_hash)
    throw std::runtime_error(
        "anchors file " + anchors_path(cfg, m.ckpt.params.cfg.K) +
        " does not match checkpoint (hash " + hash_hex(h) + " vs " +
        hash_hex(m.ckpt.anchors_hash) + "); regenerate anchors or retrain");
  return m;
}

}  // namespace

int cmd_gen(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<ToyScene> scenes = generate_dataset(cfg.toy);
  write_text_file(cfg.paths.dataset, serialize_dataset(scenes));
  log << "gen: wrote " << scenes.size() << " scenes to " << cfg.paths.dataset
      << "\n";
  return 0;
}

int cmd_anchors(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<ToyScene> scenes = load_scenes(cfg);
  SplitIndices split = split_dataset(scenes, cfg.eval.test_fraction);
  std::vector<ToyScene> train_scenes = pick(scenes, split.train);

  std::vector<Trajectory> futures;
  std::vector<Pose> poses;
  for (const ToyScene& s : train_scenes) {
    futures.push_back(s.future);
    poses.push_back(s.history.pose);
  }
  if (cfg.subsample.enabled) {
    auto kept = stratified_subsample(futures, poses,
                                     cfg.subsample.curvature_bins,
                                     cfg.subsample.distance_bins,
                                     cfg.subsample.cap_fraction,
                                     cfg.subsample.seed);
    std::vector<Trajectory> f2;
    std::vector<Pose> p2;
    for (std::size_t i : kept) {
      f2.push_back(futures[i]);
      p2.push_back(poses[i]);
    }
    log << "anchors: subsampled " << futures.size() << " -> " << f2.size()
        << " examples\n";
    futures.swap(f2);
    poses.swap(p2);
  }

  AnchorSet set;
  if (cfg.anchors.mode == "kmeans") {
    KmeansResult res = kmeans_anchors(futures, poses, cfg.anchors.k,
                                      cfg.anchors.seed, cfg.anchors.max_iters);
    set = std::move(res.anchors);
    log << "anchors: k-means K=" << cfg.anchors.k << " converged after "
        << res.iterations << " iterations, distortion";
    for (double d : res.distortions) log << " " << d;
    log << "\n";
  } else {
    if (futures.empty()) throw std::invalid_argument("anchors: empty dataset");
    set = enumerate_anchors(cfg.anchors.n_orientations, cfg.anchors.distances,
                            futures[0].length(), futures[0].dt,
                            cfg.anchors.include_stationary);
    log << "anchors: enumerated K=" << set.count() << "\n";
  }
  std::string path = anchors_path(cfg, set.count());
  write_text_file(path, serialize_anchors(set));
  log << "anchors: wrote " << path << " (hash " << hash_hex(anchors_hash(set))
      << ")\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<ToyScene> scenes = load_scenes(cfg);
  SplitIndices split = split_dataset(scenes, cfg.eval.test_fraction);
  std::vector<ToyScene> train_scenes = pick(scenes, split.train);

  int K = cfg.train.loss == LossKind::Regression ? 1 : configured_k(cfg);
  std::shared_ptr<const AnchorSet> anchors = load_anchors(cfg, K);
  if (!train_scenes.empty() &&
      anchors->horizon() != train_scenes[0].future.length())
    throw std::invalid_argument("train: anchor horizon != dataset horizon");

  TrainResult res = train(cfg.train, train_scenes, anchors);
  Checkpoint ckpt{std::move(res.params), cfg.train.loss, anchors_hash(*anchors)};
  std::string method = method_for_loss(cfg.train.loss);
  std::string path = checkpoint_path(cfg, method);
  write_text_file(path, serialize_checkpoint(ckpt));
  write_text_file(path + ".log", serialize_train_log(res.log));
  double last = res.log.empty() ? 0.0 : res.log.back().loss;
  log << "train: " << to_string(cfg.train.loss) << " on "
      << train_scenes.size() << " scenes, " << cfg.train.total_steps
      << " steps, final batch loss " << last << "\n";
  log << "train: wrote " << path << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<ToyScene> scenes = load_scenes(cfg);
  SplitIndices split = split_dataset(scenes, cfg.eval.test_fraction);
  std::vector<ToyScene> test_scenes = pick(scenes, split.test);
  if (test_scenes.empty())
    throw std::invalid_argument("eval: test split is empty");

  std::vector<MethodOutput> outputs;
  for (const std::string& method : cfg.eval.methods) {
    MethodOutput mo;
    mo.method = method;
    mo.predictions.reserve(test_scenes.size());
    if (method == "linear") {
      for (const ToyScene& s : test_scenes) {
        LinearFit fit = linear_fit(s.history, s.future.dt);
        PredictionSet p;
        p.trajectories.emplace_back(
            1.0, linear_predict(fit, s.future.length(), s.future.dt));
        mo.predictions.push_back(std::move(p));
      }
    } else {
      LoadedModel m = load_model(cfg, method);
      for (const ToyScene& s : test_scenes) {
        TrajectoryMixture mix = predict(m.ckpt.params, s.history, m.anchors);
        PredictionSet p;
        p.trajectories = map_trajectory_set(mix);
        if (m.ckpt.params.cfg.with_sigma)
          p.metric_ll = metric_ll(mix, s.future);
        mo.predictions.push_back(std::move(p));
      }
    }
    outputs.push_back(std::move(mo));
  }

  Report report = make_report(outputs, test_scenes, cfg.eval.m_values);
  write_text_file(cfg.paths.report, serialize_report(report));
  for (const ReportRow& row : report.rows) {
    if (row.category != "overall") continue;
    log << "eval: " << row.method << " n=" << row.count;
    if (row.ll_mean) log << " ll=" << *row.ll_mean;
    log << " ade=" << row.ade_mean << " fde=" << row.fde_mean << "\n";
  }
  log << "eval: wrote " << cfg.paths.report << "\n";
  return 0;
}

namespace {

TrajectoryMixture example_mixture(const ExperimentConfig& cfg,
                                  const std::string& method,
                                  int example_index,
                                  std::vector<ToyScene>* test_out) {
  std::vector<ToyScene> scenes = load_scenes(cfg);
  SplitIndices split = split_dataset(scenes, cfg.eval.test_fraction);
  std::vector<ToyScene> test_scenes = pick(scenes, split.test);
  if (example_index < 0 ||
      static_cast<std::size_t>(example_index) >= test_scenes.size())
    throw std::invalid_argument("example_index out of range (test split has " +
                                std::to_string(test_scenes.size()) +
                                " scenes)");
  LoadedModel m = load_model(cfg, method);
  TrajectoryMixture mix =
      predict(m.ckpt.params, test_scenes[example_index].history, m.anchors);
  if (test_out) *test_out = std::move(test_scenes);
  return mix;
}

}  // namespace

int cmd_occupancy(const ExperimentConfig& cfg, std::ostream& log) {
  TrajectoryMixture mix =
      example_mixture(cfg, cfg.grid.method, cfg.grid.example_index, nullptr);
  GridSpec spec = fit_grid(mix, cfg.grid.padding_sigmas, cfg.grid.cell_size);
  OccupancyGrid grid = occupancy(mix, spec);
  write_text_file(cfg.paths.grids, serialize_grid(grid));
  double mass_last = grid.planes.back().sum();
  log << "occupancy: " << spec.width << "x" << spec.height << " cells of "
      << spec.cell_size << " m, " << grid.planes.size()
      << " timesteps, last-step mass " << mass_last << "\n";
  log << "occupancy: wrote " << cfg.paths.grids << "\n";
  return 0;
}

int cmd_plot(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<ToyScene> test_scenes;
  TrajectoryMixture mix = example_mixture(cfg, cfg.plot.method,
                                          cfg.plot.example_index, &test_scenes);
  std::size_t n =
      std::min<std::size_t>(std::max(0, cfg.plot.n_samples), test_scenes.size());
  std::span<const ToyScene> samples(test_scenes.data(), n);
  write_text_file(cfg.paths.plot, render_svg(mix, samples));
  log << "plot: wrote " << cfg.paths.plot << " (" << n << " sample futures)\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<ToyScene> scenes = load_scenes(cfg);
  SplitIndices split = split_dataset(scenes, cfg.eval.test_fraction);
  std::vector<ToyScene> train_scenes = pick(scenes, split.train);
  std::vector<ToyScene> test_scenes = pick(scenes, split.test);
  if (train_scenes.empty() || test_scenes.empty())
    throw std::invalid_argument("sweep: empty split");

  std::vector<Trajectory> futures;
  std::vector<Pose> poses;
  for (const ToyScene& s : train_scenes) {
    futures.push_back(s.future);
    poses.push_back(s.history.pose);
  }

  std::string out = "trajpred.sweep,1\nk,distortion,ll,ade";
  for (int m : cfg.eval.m_values) out += ",minade_" + std::to_string(m);
  out += "\n";

  for (int k : cfg.sweep.k_values) {
    KmeansResult km = kmeans_anchors(futures, poses, k, cfg.anchors.seed,
                                     cfg.anchors.max_iters);
    auto anchors = std::make_shared<const AnchorSet>(std::move(km.anchors));
    TrainResult res = train(cfg.train, train_scenes, anchors);

    double ll_sum = 0.0, ade_sum = 0.0;
    std::vector<double> minade_sum(cfg.eval.m_values.size(), 0.0);
    for (const ToyScene& s : test_scenes) {
      TrajectoryMixture mix = predict(res.params, s.history, anchors);
      ll_sum += metric_ll(mix, s.future);
      auto set = map_trajectory_set(mix);
      ade_sum += ade(set[0].second, s.future);
      for (std::size_t mi = 0; mi < cfg.eval.m_values.size(); ++mi)
        minade_sum[mi] +=
            min_ade(set, s.future, std::min<int>(cfg.eval.m_values[mi], k));
    }
    double n = static_cast<double>(test_scenes.size());
    out += std::to_string(k) + "," + fmt_double(km.distortions.back()) + "," +
           fmt_double(ll_sum / n) + "," + fmt_double(ade_sum / n);
    for (double s : minade_sum) out += "," + fmt_double(s / n);
    out += "\n";
    log << "sweep: K=" << k << " ll=" << ll_sum / n << " ade=" << ade_sum / n
        << "\n";
  }
  write_text_file(cfg.paths.sweep, out);
  log << "sweep: wrote " << cfg.paths.sweep << "\n";
  return 0;
}

}  // namespace trajpred

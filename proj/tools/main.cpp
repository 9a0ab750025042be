// trajpred: anchor-based multimodal trajectory prediction on a synthetic
// three-branch dataset. Subcommands cover the full pipeline:
//   gen -> anchors -> train -> eval / occupancy / plot / sweep
// Exit codes: 0 success, 1 usage or config error, 2 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>

#include "trajpred/commands.hpp"
#include "trajpred/model.hpp"

using trajpred::ExperimentConfig;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config_path, "experiment config (INI)")
      ->required();
  sub->add_option("--seed", flags.seed, "override the subcommand's seed");
  sub->add_option("--out", flags.out, "override the subcommand's output path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchor-based multimodal trajectory prediction"};
  app.require_subcommand(1);

  CommonFlags gen_f, anchors_f, train_f, eval_f, occ_f, plot_f, sweep_f;
  std::string anchors_mode, train_loss, eval_methods;
  int anchors_k = -1, example_index = -1;

  CLI::App* gen = app.add_subcommand("gen", "sample the synthetic dataset");
  add_common(gen, gen_f);

  CLI::App* anchors = app.add_subcommand("anchors", "build the anchor set");
  add_common(anchors, anchors_f);
  anchors->add_option("--mode", anchors_mode, "kmeans | enumerate");
  anchors->add_option("--k", anchors_k, "number of k-means anchors");

  CLI::App* train = app.add_subcommand("train", "train a predictor");
  add_common(train, train_f);
  train->add_option("--loss", train_loss,
                    "multipath-hard | multipath-soft | min_of_k | regression");

  CLI::App* eval = app.add_subcommand("eval", "evaluate methods on the test split");
  add_common(eval, eval_f);
  eval->add_option("--methods", eval_methods,
                   "space-separated subset of: linear regression multipath min_of_k");

  CLI::App* occupancy =
      app.add_subcommand("occupancy", "rasterize one example's mixture");
  add_common(occupancy, occ_f);
  occupancy->add_option("--example", example_index, "test example index");

  CLI::App* plot = app.add_subcommand("plot", "render one example as SVG");
  add_common(plot, plot_f);
  plot->add_option("--example", example_index, "test example index");

  CLI::App* sweep = app.add_subcommand("sweep", "train/evaluate across K values");
  add_common(sweep, sweep_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = trajpred::load_config(gen_f.config_path);
      if (gen_f.seed) cfg.toy.seed = *gen_f.seed;
      if (gen_f.out) cfg.paths.dataset = *gen_f.out;
      return trajpred::cmd_gen(cfg, std::cout);
    }
    if (anchors->parsed()) {
      ExperimentConfig cfg = trajpred::load_config(anchors_f.config_path);
      if (anchors_f.seed) cfg.anchors.seed = *anchors_f.seed;
      if (anchors_f.out) cfg.paths.anchors = *anchors_f.out;
      if (!anchors_mode.empty()) cfg.anchors.mode = anchors_mode;
      if (anchors_k > 0) cfg.anchors.k = anchors_k;
      return trajpred::cmd_anchors(cfg, std::cout);
    }
    if (train->parsed()) {
      ExperimentConfig cfg = trajpred::load_config(train_f.config_path);
      if (train_f.seed) cfg.train.seed = *train_f.seed;
      if (train_f.out) cfg.paths.checkpoint = *train_f.out;
      if (!train_loss.empty())
        cfg.train.loss = trajpred::loss_from_string(train_loss);
      return trajpred::cmd_train(cfg, std::cout);
    }
    if (eval->parsed()) {
      ExperimentConfig cfg = trajpred::load_config(eval_f.config_path);
      if (eval_f.out) cfg.paths.report = *eval_f.out;
      if (!eval_methods.empty()) {
        cfg.eval.methods.clear();
        std::istringstream is(eval_methods);
        std::string tok;
        while (is >> tok) cfg.eval.methods.push_back(tok);
      }
      return trajpred::cmd_eval(cfg, std::cout);
    }
    if (occupancy->parsed()) {
      ExperimentConfig cfg = trajpred::load_config(occ_f.config_path);
      if (occ_f.out) cfg.paths.grids = *occ_f.out;
      if (example_index >= 0) cfg.grid.example_index = example_index;
      return trajpred::cmd_occupancy(cfg, std::cout);
    }
    if (plot->parsed()) {
      ExperimentConfig cfg = trajpred::load_config(plot_f.config_path);
      if (plot_f.out) cfg.paths.plot = *plot_f.out;
      if (example_index >= 0) cfg.plot.example_index = example_index;
      return trajpred::cmd_plot(cfg, std::cout);
    }
    if (sweep->parsed()) {
      ExperimentConfig cfg = trajpred::load_config(sweep_f.config_path);
      if (sweep_f.seed) cfg.train.seed = *sweep_f.seed;
      if (sweep_f.out) cfg.paths.sweep = *sweep_f.out;
      return trajpred::cmd_sweep(cfg, std::cout);
    }
  } catch (const trajpred::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

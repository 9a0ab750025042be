#pragma once

// Experiment configuration: one INI-style file drives every CLI subcommand.
// parse_config is strict (unknown sections/keys are errors) and
// write_config emits a canonical form, so configs round-trip losslessly.

#include <cstdint>
#include <string>
#include <vector>

#include "trajpred/model.hpp"
#include "trajpred/synthgen.hpp"

namespace trajpred {

struct PathsConfig {
  std::string dataset{"out/toy.dataset"};
  std::string anchors{"out/anchors.txt"};      // per-K suffix inserted
  std::string checkpoint{"out/model.ckpt"};    // per-method suffix inserted
  std::string report{"out/report.csv"};
  std::string grids{"out/grids.txt"};
  std::string plot{"out/plot.svg"};
  std::string sweep{"out/sweep.csv"};
};

struct AnchorsSection {
  std::string mode{"kmeans"};  // kmeans | enumerate
  int k{3};
  std::uint64_t seed{13};
  int max_iters{100};
  // enumerate mode only:
  int n_orientations{16};
  std::vector<double> distances{1.2, 2.4, 3.6, 4.8};
  bool include_stationary{true};
};

struct SubsampleSection {
  bool enabled{false};
  int curvature_bins{11};
  int distance_bins{11};
  double cap_fraction{0.05};
  std::uint64_t seed{17};
};

struct EvalSection {
  std::vector<std::string> methods{"linear", "regression", "multipath"};
  std::vector<int> m_values{1, 5};
  double test_fraction{0.1};
};

struct GridSection {
  double cell_size{0.25};
  double padding_sigmas{6.0};
  int example_index{0};
  std::string method{"multipath"};
};

struct PlotSection {
  int example_index{0};
  int n_samples{40};
  std::string method{"multipath"};
};

struct SweepSection {
  std::vector<int> k_values{1, 3};
};

struct ExperimentConfig {
  PathsConfig paths;
  ToyConfig toy;
  AnchorsSection anchors;
  SubsampleSection subsample;
  TrainConfig train;
  EvalSection eval;
  GridSection grid;
  PlotSection plot;
  SweepSection sweep;
};

// Throws std::runtime_error naming the bad line/key.
ExperimentConfig parse_config(const std::string& text);
std::string write_config(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path);

// "out/anchors.txt" + "k3" -> "out/anchors.k3.txt" (suffix inserted before
// the final extension; appended when there is none).
std::string path_with_tag(const std::string& path, const std::string& tag);

// Method name a loss trains ("multipath-hard" -> "multipath", ...).
std::string method_for_loss(LossKind loss);

std::string anchors_path(const ExperimentConfig& cfg, int k);
std::string checkpoint_path(const ExperimentConfig& cfg,
                            const std::string& method);

}  // namespace trajpred

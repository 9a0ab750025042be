#pragma once

// Synthetic three-branch dataset. Every scene starts from the same
// deterministic straight approach (so the observed context carries no
// information about the coming maneuver); the future follows one of three
// headings (left +45deg, middle 0, right -45deg) drawn from a fixed prior,
// with a sinusoidal lateral wiggle of random frequency and phase.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trajpred/geom.hpp"
#include "trajpred/mixture.hpp"

namespace trajpred {

struct ToyConfig {
  int n{50000};           // dataset size
  int T{12};              // future waypoints
  int H{5};               // past waypoints (including t = 0)
  double dt{0.4};         // seconds per step
  double speed{1.0};      // longitudinal speed, m/s
  double amplitude{0.5};  // lateral wiggle amplitude, meters
  double omega_max{2.0};  // wiggle frequency ~ U(0, omega_max), rad/s
  std::array<double, 3> branch_probs{0.3, 0.5, 0.2};  // left, middle, right
  std::array<double, 3> branch_headings{M_PI / 4.0, 0.0, -M_PI / 4.0};
  std::uint64_t seed{7};
};

// Throws std::invalid_argument on non-positive sizes/steps or a prior that
// is not a probability vector.
void validate(const ToyConfig& cfg);

struct ToyScene {
  PastHistory history;
  Trajectory future;   // world frame, length T
  int branch{0};       // 0 = left, 1 = middle, 2 = right
  std::uint64_t seed;  // per-scene stream seed (recorded for reproducibility)
};

extern const std::array<const char*, 3> kBranchNames;  // left, middle, right
int branch_from_name(const std::string& name);

// One scene from its own seed; bit-deterministic.
ToyScene sample_scene(const ToyConfig& cfg, std::uint64_t scene_seed);

// cfg.n scenes with per-scene seeds derived from cfg.seed.
std::vector<ToyScene> generate_dataset(const ToyConfig& cfg);

struct SplitIndices {
  std::vector<std::size_t> train, test;
};

// Deterministic split keyed on the per-scene seed hash, independent of
// dataset order and size.
SplitIndices split_dataset(std::span<const ToyScene> scenes,
                           double test_fraction);

// Class-optimal reference: per branch and timestep, the maximum-likelihood
// bivariate Gaussian under the same scale clamps and correlation squashing
// the model uses (when the sample correlation exceeds the squashing limit,
// the constrained optimum pins rho at the boundary and contracts the
// scales), with moments estimated from mc_samples Monte-Carlo rollouts and
// modes mixed by the branch prior. Up to Monte-Carlo error this is the best
// any mixture of this family - hence any trained predictor - can score.
struct OracleEstimate {
  TrajectoryMixture mixture;
  double metric_ll{0.0};  // mean metric_ll of the reference on eval_scenes
  double std_error{0.0};  // standard error of that mean
  bool degenerate{false};  // some branch collapsed to a deterministic path
};

TrajectoryMixture fit_reference_mixture(const ToyConfig& cfg, int mc_samples,
                                        std::uint64_t seed,
                                        bool* degenerate = nullptr);

OracleEstimate oracle_metric_ll(const ToyConfig& cfg,
                                std::span<const ToyScene> eval_scenes,
                                int mc_samples, std::uint64_t seed);

}  // namespace trajpred

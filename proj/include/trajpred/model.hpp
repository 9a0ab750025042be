#pragma once

// The learned predictor: a small tanh MLP over agent-frame history features
// whose head emits mode logits plus per-(mode, timestep) Gaussian
// parameters. Training is plain Adam with linear warmup and cosine decay,
// bit-deterministic given the config seed. Gradients are analytic;
// unit tests check them against central differences.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajpred/anchors.hpp"
#include "trajpred/geom.hpp"
#include "trajpred/mixture.hpp"
#include "trajpred/synthgen.hpp"

namespace trajpred {

// Raised when optimization or evaluation produces non-finite numbers; the
// CLI maps it to its own exit code.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LossKind { MultipathHard, MultipathSoft, MinOfK, Regression };

std::string to_string(LossKind kind);
LossKind loss_from_string(const std::string& name);

struct MlpConfig {
  int input_dim{0};
  std::vector<int> hidden{64, 64};
  int K{0};
  int T{0};
  bool with_sigma{true};

  int output_dim() const { return K + K * T * (with_sigma ? 5 : 2); }
};

struct MlpParams {
  MlpConfig cfg;
  std::vector<Eigen::MatrixXd> W;  // W[l]: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> b;

  int num_params() const;
  Eigen::VectorXd to_flat() const;
  void from_flat(const Eigen::VectorXd& flat);
};

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer, seeded.
MlpParams init_params(const MlpConfig& cfg, std::uint64_t seed);

// Feature vector: agent-frame past waypoints (H x 2, flattened in time
// order) followed by their finite-difference velocities ((H-1) x 2, divided
// by dt). Length 2H + 2(H-1).
Eigen::VectorXd features(const PastHistory& history, double dt);
int feature_dim(int H);

// Raw head output for input x (length output_dim).
Eigen::VectorXd forward_raw(const MlpParams& params, const Eigen::VectorXd& x);

// Interprets a raw head output as a mixture over the given anchors. When
// with_sigma is false the Gaussian is fixed to unit isotropic.
TrajectoryMixture build_mixture(const Eigen::VectorXd& raw,
                                std::shared_ptr<const AnchorSet> anchors,
                                const Pose& frame, bool with_sigma);

// Full path: features -> MLP -> mixture in the history's frame.
TrajectoryMixture predict(const MlpParams& params, const PastHistory& history,
                          std::shared_ptr<const AnchorSet> anchors);

struct LossConfig {
  LossKind kind{LossKind::MultipathHard};
  double soft_temperature{1.0};
};

// Precomputed per-example supervision (anchors are fixed, so this is done
// once before the training loop).
struct ExampleTarget {
  Eigen::VectorXd x;        // feature vector
  Waypoints canon_future;   // ground truth in the agent frame, T x 2
  int hard_index{0};        // nearest anchor
  Eigen::VectorXd soft_weights;  // soft assignment (empty unless soft loss)
};

ExampleTarget make_target(const ToyScene& scene, const AnchorSet& anchors,
                          const LossConfig& loss);

// Loss of one example plus (optionally) its gradient with respect to the
// flattened parameters. Throws NumericalError on a non-finite loss.
double example_loss(const MlpParams& params, const ExampleTarget& target,
                    const AnchorSet& anchors, const LossConfig& loss,
                    Eigen::VectorXd* grad_flat = nullptr);

// Mean loss and gradient over the batch selected by `example_ids` (indices
// into `targets`). Throws NumericalError carrying the offending example id.
double batch_loss(const MlpParams& params,
                  std::span<const ExampleTarget> targets,
                  std::span<const std::size_t> example_ids,
                  const AnchorSet& anchors, const LossConfig& loss,
                  Eigen::VectorXd* grad_flat = nullptr);

struct TrainConfig {
  LossKind loss{LossKind::MultipathHard};
  bool with_sigma{true};
  std::vector<int> hidden{64, 64};
  int batch_size{32};
  int total_steps{30000};
  double lr_peak{1e-3};
  double warmup_fraction{0.05};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_eps{1e-8};
  double soft_temperature{1.0};
  std::uint64_t seed{1};
};

// Linear warmup to lr_peak over floor(warmup_fraction * total) steps, then
// cosine decay reaching exactly 0 at the final step.
double lr_schedule(const TrainConfig& cfg, int step);

struct TrainLogEntry {
  int step;
  double lr;
  double loss;
};

struct TrainResult {
  MlpParams params;
  std::vector<TrainLogEntry> log;
};

// Deterministic training run: init from cfg.seed, shuffle once per epoch,
// full batches only.
TrainResult train(const TrainConfig& cfg, std::span<const ToyScene> scenes,
                  std::shared_ptr<const AnchorSet> anchors);

// Constant-velocity ordinary least squares on the past, the weakest
// baseline: each coordinate is fit linearly in time.
struct LinearFit {
  Point2 intercept{0.0, 0.0};  // position at t = 0
  Point2 slope{0.0, 0.0};      // velocity, m/s
};

LinearFit linear_fit(const PastHistory& history, double dt);
Trajectory linear_predict(const LinearFit& fit, int T, double dt);

}  // namespace trajpred

#include "trajpred/synthgen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "trajpred/util.hpp"

namespace trajpred {

const std::array<const char*, 3> kBranchNames{"left", "middle", "right"};

int branch_from_name(const std::string& name) {
  for (int b = 0; b < 3; ++b)
    if (name == kBranchNames[b]) return b;
  throw std::invalid_argument("unknown branch label: " + name);
}

void validate(const ToyConfig& cfg) {
  if (cfg.n < 0) throw std::invalid_argument("toy: n must be >= 0");
  if (cfg.T < 1) throw std::invalid_argument("toy: T must be >= 1");
  if (cfg.H < 1) throw std::invalid_argument("toy: H must be >= 1");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("toy: dt must be > 0");
  if (!(cfg.speed >= 0.0)) throw std::invalid_argument("toy: speed must be >= 0");
  if (!(cfg.amplitude >= 0.0))
    throw std::invalid_argument("toy: amplitude must be >= 0");
  if (!(cfg.omega_max >= 0.0))
    throw std::invalid_argument("toy: omega_max must be >= 0");
  double total = 0.0;
  for (double p : cfg.branch_probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("toy: negative branch prob");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("toy: branch_probs must sum to 1");
}

namespace {

// Lateral offset of the wiggle at time s; starts at 0 by construction.
inline double lateral(double amplitude, double omega, double phi, double s) {
  return amplitude * (std::sin(omega * s + phi) - std::sin(phi));
}

}  // namespace

ToyScene sample_scene(const ToyConfig& cfg, std::uint64_t scene_seed) {
  validate(cfg);
  std::mt19937_64 rng(scene_seed);

  double pick = u01(rng);
  int branch = 2;
  double acc = 0.0;
  for (int b = 0; b < 3; ++b) {
    acc += cfg.branch_probs[b];
    if (pick < acc) {
      branch = b;
      break;
    }
  }
  double omega = uniform(rng, 0.0, cfg.omega_max);
  double phi = uniform(rng, -M_PI, M_PI);

  // Straight constant-speed approach ending at the origin with heading 0.
  Waypoints past(cfg.H, 2);
  for (int i = 0; i < cfg.H; ++i) {
    double t = static_cast<double>(i - (cfg.H - 1));
    past.row(i) = Eigen::RowVector2d(cfg.speed * t * cfg.dt, 0.0);
  }

  Eigen::Rotation2Dd rot(cfg.branch_headings[branch]);
  Waypoints future(cfg.T, 2);
  for (int t = 1; t <= cfg.T; ++t) {
    double s = t * cfg.dt;
    Point2 local(cfg.speed * s, lateral(cfg.amplitude, omega, phi, s));
    future.row(t - 1) = (rot * local).transpose();
  }

  ToyScene scene;
  scene.history = make_history(past);
  scene.future = Trajectory{future, cfg.dt};
  scene.branch = branch;
  scene.seed = scene_seed;
  return scene;
}

std::vector<ToyScene> generate_dataset(const ToyConfig& cfg) {
  validate(cfg);
  std::vector<ToyScene> scenes;
  scenes.reserve(cfg.n);
  for (int i = 0; i < cfg.n; ++i)
    scenes.push_back(sample_scene(cfg, derive_seed(cfg.seed, i)));
  return scenes;
}

SplitIndices split_dataset(std::span<const ToyScene> scenes,
                           double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split: test_fraction must be in [0, 1)");
  SplitIndices out;
  constexpr std::uint64_t kSplitSalt = 0x7470737000000001ull;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    double u = static_cast<double>(splitmix64(scenes[i].seed ^ kSplitSalt) >> 11) *
               0x1.0p-53;
    (u < test_fraction ? out.test : out.train).push_back(i);
  }
  return out;
}

TrajectoryMixture fit_reference_mixture(const ToyConfig& cfg, int mc_samples,
                                        std::uint64_t seed, bool* degenerate) {
  validate(cfg);
  if (mc_samples < 2)
    throw std::invalid_argument("oracle: mc_samples must be >= 2");
  const int T = cfg.T;
  bool any_degenerate = false;

  auto anchors = std::make_shared<AnchorSet>();
  Eigen::VectorXd logits(3);
  Eigen::MatrixXd params = Eigen::MatrixXd::Zero(3 * T, 5);

  std::mt19937_64 rng(seed);
  for (int b = 0; b < 3; ++b) {
    // Per-step first and second moments of the branch distribution in the
    // agent frame, from Monte-Carlo rollouts of (omega, phi).
    Eigen::Rotation2Dd rot(cfg.branch_headings[b]);
    std::vector<std::pair<double, double>> draws(
        static_cast<std::size_t>(mc_samples));
    for (auto& d : draws)
      d = {uniform(rng, 0.0, cfg.omega_max), uniform(rng, -M_PI, M_PI)};
    auto point_at = [&](const std::pair<double, double>& d, int t) {
      double s = (t + 1) * cfg.dt;
      return Point2(rot * Point2(cfg.speed * s,
                                 lateral(cfg.amplitude, d.first, d.second, s)));
    };

    // Two-pass (centered) moments: a deterministic branch yields exact
    // zeros instead of cancellation noise.
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(T, 2);
    for (const auto& d : draws)
      for (int t = 0; t < T; ++t) sum.row(t) += point_at(d, t).transpose();
    Eigen::MatrixXd mean = sum / static_cast<double>(mc_samples);
    Eigen::VectorXd sxx = Eigen::VectorXd::Zero(T), syy = sxx, sxy = sxx;
    for (const auto& d : draws)
      for (int t = 0; t < T; ++t) {
        Point2 r = point_at(d, t) - Point2(mean.row(t));
        sxx[t] += r.x() * r.x();
        syy[t] += r.y() * r.y();
        sxy[t] += r.x() * r.y();
      }

    Waypoints mean_path(T, 2);
    double branch_total_var = 0.0;
    for (int t = 0; t < T; ++t) {
      double n = mc_samples;
      Point2 mu = mean.row(t);
      double vx = sxx[t] / n;
      double vy = syy[t] / n;
      double cxy = sxy[t] / n;
      branch_total_var += vx + vy;
      mean_path.row(t) = mu.transpose();

      // Maximum-likelihood Gaussian under the squashed-correlation family.
      // With sample correlation r inside (-rho_max, rho_max) this is the
      // moment fit; when |r| exceeds rho_max the optimum pins rho at the
      // boundary and the scales contract: sigma^2 = m / alpha with
      // alpha = (1 - rho^2) / (1 - rho * r).
      double r_hat = 0.0;
      if (vx > 0.0 && vy > 0.0) r_hat = cxy / std::sqrt(vx * vy);
      double rho_star = std::clamp(r_hat, -kRhoMax, kRhoMax);
      double alpha = 1.0;
      if (std::abs(r_hat) > kRhoMax)
        alpha = (1.0 - rho_star * rho_star) / (1.0 - rho_star * r_hat);
      double log_sx = std::clamp(0.5 * std::log(std::max(vx / alpha, 1e-300)),
                                 -kLogScaleLimit, kLogScaleLimit);
      double log_sy = std::clamp(0.5 * std::log(std::max(vy / alpha, 1e-300)),
                                 -kLogScaleLimit, kLogScaleLimit);
      double arg = std::clamp(rho_star / kRhoMax, -1.0 + 1e-12, 1.0 - 1e-12);
      Eigen::Index row = static_cast<Eigen::Index>(b) * T + t;
      params.row(row) << 0.0, 0.0, log_sx, log_sy, std::atanh(arg);
    }
    if (branch_total_var < 1e-12) any_degenerate = true;
    anchors->anchors.push_back(Trajectory{mean_path, cfg.dt});
    logits[b] = std::log(std::max(cfg.branch_probs[b], 1e-300));
  }

  if (degenerate) *degenerate = any_degenerate;
  TrajectoryMixture mix;
  mix.logits = logits;
  mix.params = params;
  mix.anchors = anchors;
  mix.frame = Pose{};  // toy scenes live in the identity agent frame
  return mix;
}

OracleEstimate oracle_metric_ll(const ToyConfig& cfg,
                                std::span<const ToyScene> eval_scenes,
                                int mc_samples, std::uint64_t seed) {
  if (eval_scenes.empty())
    throw std::invalid_argument("oracle: eval_scenes must be non-empty");
  OracleEstimate est;
  est.mixture = fit_reference_mixture(cfg, mc_samples, seed, &est.degenerate);
  double sum = 0.0, sum_sq = 0.0;
  for (const ToyScene& s : eval_scenes) {
    // Evaluate in the scene's own frame so the reference and a trained
    // model are scored identically.
    TrajectoryMixture framed = est.mixture;
    framed.frame = s.history.pose;
    double v = metric_ll(framed, s.future);
    sum += v;
    sum_sq += v * v;
  }
  double n = static_cast<double>(eval_scenes.size());
  est.metric_ll = sum / n;
  double var = std::max(0.0, sum_sq / n - est.metric_ll * est.metric_ll);
  est.std_error = std::sqrt(var / n);
  return est;
}

}  // namespace trajpred

#include "trajpred/model.hpp"

#include <cmath>
#include <random>

#include "trajpred/util.hpp"

namespace trajpred {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::MultipathHard: return "multipath-hard";
    case LossKind::MultipathSoft: return "multipath-soft";
    case LossKind::MinOfK: return "min_of_k";
    case LossKind::Regression: return "regression";
  }
  throw std::invalid_argument("unknown loss kind");
}

LossKind loss_from_string(const std::string& name) {
  if (name == "multipath-hard") return LossKind::MultipathHard;
  if (name == "multipath-soft") return LossKind::MultipathSoft;
  if (name == "min_of_k") return LossKind::MinOfK;
  if (name == "regression") return LossKind::Regression;
  throw std::invalid_argument("unknown loss: " + name);
}

namespace {

std::vector<int> layer_dims(const MlpConfig& cfg) {
  std::vector<int> dims;
  dims.push_back(cfg.input_dim);
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(cfg.output_dim());
  return dims;
}

}  // namespace

int MlpParams::num_params() const {
  int n = 0;
  for (std::size_t l = 0; l < W.size(); ++l)
    n += static_cast<int>(W[l].size() + b[l].size());
  return n;
}

Eigen::VectorXd MlpParams::to_flat() const {
  Eigen::VectorXd flat(num_params());
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    flat.segment(off, W[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(W[l].data(), W[l].size());
    off += W[l].size();
    flat.segment(off, b[l].size()) = b[l];
    off += b[l].size();
  }
  return flat;
}

void MlpParams::from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != num_params())
    throw std::invalid_argument("from_flat: size mismatch");
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(W[l].data(), W[l].size()) =
        flat.segment(off, W[l].size());
    off += W[l].size();
    b[l] = flat.segment(off, b[l].size());
    off += b[l].size();
  }
}

MlpParams init_params(const MlpConfig& cfg, std::uint64_t seed) {
  if (cfg.input_dim < 1 || cfg.K < 1 || cfg.T < 1)
    throw std::invalid_argument("init_params: bad MlpConfig");
  for (int h : cfg.hidden)
    if (h < 1) throw std::invalid_argument("init_params: bad hidden width");
  std::vector<int> dims = layer_dims(cfg);
  MlpParams p;
  p.cfg = cfg;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    double s = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    Eigen::MatrixXd W(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < W.size(); ++i)
      W.data()[i] = uniform(rng, -s, s);
    Eigen::VectorXd b(dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = uniform(rng, -s, s);
    p.W.push_back(std::move(W));
    p.b.push_back(std::move(b));
  }
  return p;
}

int feature_dim(int H) { return 2 * H + 2 * (H - 1); }

Eigen::VectorXd features(const PastHistory& history, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("features: dt must be > 0");
  const Eigen::Index H = history.points.rows();
  if (H < 1) throw std::invalid_argument("features: empty history");
  Waypoints canon = to_agent_frame(history.points, history.pose);
  Eigen::VectorXd x(feature_dim(static_cast<int>(H)));
  for (Eigen::Index i = 0; i < H; ++i) x.segment<2>(2 * i) = canon.row(i);
  for (Eigen::Index i = 0; i + 1 < H; ++i)
    x.segment<2>(2 * H + 2 * i) = (canon.row(i + 1) - canon.row(i)) / dt;
  return x;
}

namespace {

// Forward pass keeping every activation for backprop. acts[0] = x,
// acts[l] = tanh output after hidden layer l; returns the raw head output.
Eigen::VectorXd forward_cached(const MlpParams& p, const Eigen::VectorXd& x,
                               std::vector<Eigen::VectorXd>& acts) {
  acts.clear();
  acts.push_back(x);
  const std::size_t L = p.W.size();
  for (std::size_t l = 0; l + 1 < L; ++l)
    acts.push_back((p.W[l] * acts.back() + p.b[l]).array().tanh().matrix());
  return p.W[L - 1] * acts.back() + p.b[L - 1];
}

// Backprop of dL/dy into the flat gradient layout used by to_flat().
void backward_into(const MlpParams& p, const std::vector<Eigen::VectorXd>& acts,
                   const Eigen::VectorXd& g_y, Eigen::VectorXd& grad) {
  const std::size_t L = p.W.size();
  Eigen::VectorXd delta = g_y;
  // Walk offsets from the back.
  std::vector<Eigen::Index> w_off(L), b_off(L);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    w_off[l] = off;
    off += p.W[l].size();
    b_off[l] = off;
    off += p.b[l].size();
  }
  for (std::size_t li = L; li-- > 0;) {
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + w_off[li], p.W[li].rows(),
                                   p.W[li].cols());
    dW.noalias() += delta * acts[li].transpose();
    grad.segment(b_off[li], p.b[li].size()) += delta;
    if (li > 0) {
      Eigen::VectorXd da = p.W[li].transpose() * delta;
      delta = da.cwiseProduct(
          (1.0 - acts[li].array().square()).matrix());
    }
  }
}

struct StepGrad {
  double mu_x{0}, mu_y{0}, log_sx{0}, log_sy{0}, rho_raw{0};
};

// Negative log density of one step and its gradient with respect to the raw
// parameters (clamped log scales have zero gradient outside the clamp).
double step_nll(const GaussianParams2D& g, const Point2& anchor_pt,
                const Point2& target, bool with_sigma, StepGrad* out) {
  if (!with_sigma) {
    double dx = target.x() - anchor_pt.x() - g.mu_x;
    double dy = target.y() - anchor_pt.y() - g.mu_y;
    if (out) {
      out->mu_x = -dx;
      out->mu_y = -dy;
    }
    return std::log(2.0 * M_PI) + 0.5 * (dx * dx + dy * dy);
  }
  double sx = sigma_from_log(g.log_sx);
  double sy = sigma_from_log(g.log_sy);
  double th = std::tanh(g.rho_raw);
  double rho = kRhoMax * th;
  double c = 1.0 - rho * rho;
  double u = (target.x() - anchor_pt.x() - g.mu_x) / sx;
  double v = (target.y() - anchor_pt.y() - g.mu_y) / sy;
  double q = u * u - 2.0 * rho * u * v + v * v;
  double nll = std::log(2.0 * M_PI) + std::log(sx) + std::log(sy) +
               0.5 * std::log(c) + q / (2.0 * c);
  if (out) {
    double gx = (u - rho * v) / c;  // dL/du
    double gy = (v - rho * u) / c;
    out->mu_x = -gx / sx;
    out->mu_y = -gy / sy;
    bool in_x = std::abs(g.log_sx) < kLogScaleLimit;
    bool in_y = std::abs(g.log_sy) < kLogScaleLimit;
    out->log_sx = in_x ? (1.0 - u * gx) : 0.0;
    out->log_sy = in_y ? (1.0 - v * gy) : 0.0;
    double d_rho = -rho / c - u * v / c + rho * q / (c * c);
    out->rho_raw = d_rho * kRhoMax * (1.0 - th * th);
  }
  return nll;
}

}  // namespace

TrajectoryMixture build_mixture(const Eigen::VectorXd& raw,
                                std::shared_ptr<const AnchorSet> anchors,
                                const Pose& frame, bool with_sigma) {
  if (!anchors) throw std::invalid_argument("build_mixture: null anchors");
  const int K = anchors->count();
  const int T = anchors->horizon();
  const int P = with_sigma ? 5 : 2;
  if (raw.size() != K + K * T * P)
    throw std::invalid_argument("build_mixture: raw size mismatch");
  TrajectoryMixture mix;
  mix.logits = raw.head(K);
  mix.params = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K) * T, 5);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) {
      Eigen::Index row = static_cast<Eigen::Index>(k) * T + t;
      Eigen::Index base = K + (static_cast<Eigen::Index>(k) * T + t) * P;
      mix.params(row, 0) = raw[base];
      mix.params(row, 1) = raw[base + 1];
      if (with_sigma) {
        mix.params(row, 2) = raw[base + 2];
        mix.params(row, 3) = raw[base + 3];
        mix.params(row, 4) = raw[base + 4];
      }
    }
  mix.anchors = std::move(anchors);
  mix.frame = frame;
  return mix;
}

Eigen::VectorXd forward_raw(const MlpParams& params,
                            const Eigen::VectorXd& x) {
  if (x.size() != params.cfg.input_dim)
    throw std::invalid_argument("forward_raw: input dim mismatch");
  std::vector<Eigen::VectorXd> acts;
  return forward_cached(params, x, acts);
}

TrajectoryMixture predict(const MlpParams& params, const PastHistory& history,
                          std::shared_ptr<const AnchorSet> anchors) {
  if (!anchors) throw std::invalid_argument("predict: null anchors");
  Eigen::VectorXd x = features(history, anchors->dt());
  return build_mixture(forward_raw(params, x), std::move(anchors),
                       history.pose, params.cfg.with_sigma);
}

ExampleTarget make_target(const ToyScene& scene, const AnchorSet& anchors,
                          const LossConfig& loss) {
  ExampleTarget t;
  t.x = features(scene.history, anchors.dt());
  t.canon_future = to_agent_frame(scene.future.points, scene.history.pose);
  t.hard_index = assign_anchor(scene.future, scene.history.pose, anchors).index;
  if (loss.kind == LossKind::MultipathSoft)
    t.soft_weights = soft_assign(scene.future, scene.history.pose, anchors,
                                 loss.soft_temperature);
  return t;
}

double example_loss(const MlpParams& params, const ExampleTarget& target,
                    const AnchorSet& anchors, const LossConfig& loss,
                    Eigen::VectorXd* grad_flat) {
  const MlpConfig& cfg = params.cfg;
  const int K = cfg.K;
  const int T = cfg.T;
  const int P = cfg.with_sigma ? 5 : 2;
  if (anchors.count() != K || anchors.horizon() != T)
    throw std::invalid_argument("example_loss: anchors do not match config");
  if (loss.kind == LossKind::Regression && K != 1)
    throw std::invalid_argument("regression loss requires K == 1");

  std::vector<Eigen::VectorXd> acts;
  Eigen::VectorXd y = forward_cached(params, target.x, acts);
  Eigen::VectorXd g_y;
  if (grad_flat) g_y = Eigen::VectorXd::Zero(y.size());

  Eigen::VectorXd logits = y.head(K);
  Eigen::VectorXd pi = (logits.array() - logits.maxCoeff()).exp();
  pi /= pi.sum();
  Eigen::VectorXd log_pi = pi.array().log();

  auto gauss_at = [&](int k, int t) {
    Eigen::Index base = K + (static_cast<Eigen::Index>(k) * T + t) * P;
    GaussianParams2D g;
    g.mu_x = y[base];
    g.mu_y = y[base + 1];
    if (cfg.with_sigma) {
      g.log_sx = y[base + 2];
      g.log_sy = y[base + 3];
      g.rho_raw = y[base + 4];
    }
    return g;
  };

  // NLL of mode k; writes parameter gradients scaled by `scale` into g_y.
  auto mode_nll = [&](int k, double scale) {
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
      StepGrad sg;
      GaussianParams2D g = gauss_at(k, t);
      Point2 anchor_pt = anchors.anchors[k].points.row(t);
      Point2 tgt = target.canon_future.row(t);
      acc += step_nll(g, anchor_pt, tgt, cfg.with_sigma,
                      grad_flat ? &sg : nullptr);
      if (grad_flat) {
        Eigen::Index base = K + (static_cast<Eigen::Index>(k) * T + t) * P;
        g_y[base] += scale * sg.mu_x;
        g_y[base + 1] += scale * sg.mu_y;
        if (cfg.with_sigma) {
          g_y[base + 2] += scale * sg.log_sx;
          g_y[base + 3] += scale * sg.log_sy;
          g_y[base + 4] += scale * sg.rho_raw;
        }
      }
    }
    return acc;
  };

  double L = 0.0;
  switch (loss.kind) {
    case LossKind::MultipathHard:
    case LossKind::Regression: {
      int k = target.hard_index;
      L = -log_pi[k] + mode_nll(k, 1.0);
      if (grad_flat) {
        g_y.head(K) += pi;
        g_y[k] -= 1.0;
      }
      break;
    }
    case LossKind::MultipathSoft: {
      if (target.soft_weights.size() != K)
        throw std::invalid_argument("soft loss requires soft weights");
      for (int k = 0; k < K; ++k) {
        double w = target.soft_weights[k];
        if (w == 0.0) continue;
        L += w * (-log_pi[k] + mode_nll(k, w));
      }
      if (grad_flat) g_y.head(K) += pi - target.soft_weights;
      break;
    }
    case LossKind::MinOfK: {
      // Mode whose mu-adjusted mean path is closest in squared distance.
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      std::vector<Eigen::MatrixXd> residuals(K);
      for (int k = 0; k < K; ++k) {
        Eigen::MatrixXd r(T, 2);
        for (int t = 0; t < T; ++t) {
          GaussianParams2D g = gauss_at(k, t);
          r.row(t) = target.canon_future.row(t) -
                     anchors.anchors[k].points.row(t) -
                     Eigen::RowVector2d(g.mu_x, g.mu_y);
        }
        double d = r.squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
        residuals[k] = std::move(r);
      }
      if (cfg.with_sigma) {
        L = -log_pi[best] + mode_nll(best, 1.0);
        if (grad_flat) {
          g_y.head(K) += pi;
          g_y[best] -= 1.0;
        }
      } else {
        L = best_d;
        if (grad_flat)
          for (int t = 0; t < T; ++t) {
            Eigen::Index base =
                K + (static_cast<Eigen::Index>(best) * T + t) * P;
            g_y[base] += -2.0 * residuals[best](t, 0);
            g_y[base + 1] += -2.0 * residuals[best](t, 1);
          }
      }
      break;
    }
  }

  if (grad_flat) {
    grad_flat->setZero(params.num_params());
    backward_into(params, acts, g_y, *grad_flat);
  }
  return L;
}

double batch_loss(const MlpParams& params,
                  std::span<const ExampleTarget> targets,
                  std::span<const std::size_t> example_ids,
                  const AnchorSet& anchors, const LossConfig& loss,
                  Eigen::VectorXd* grad_flat) {
  if (example_ids.empty())
    throw std::invalid_argument("batch_loss: empty batch");
  if (grad_flat) grad_flat->setZero(params.num_params());
  double total = 0.0;
  Eigen::VectorXd g;
  for (std::size_t id : example_ids) {
    double L = example_loss(params, targets[id], anchors, loss,
                            grad_flat ? &g : nullptr);
    if (!std::isfinite(L))
      throw NumericalError("non-finite loss at example " + std::to_string(id));
    total += L;
    if (grad_flat) *grad_flat += g;
  }
  double inv = 1.0 / static_cast<double>(example_ids.size());
  if (grad_flat) *grad_flat *= inv;
  return total * inv;
}

double lr_schedule(const TrainConfig& cfg, int step) {
  if (step < 0 || step >= cfg.total_steps)
    throw std::invalid_argument("lr_schedule: step out of range");
  int warm = static_cast<int>(cfg.warmup_fraction * cfg.total_steps);
  if (step < warm)
    return cfg.lr_peak * static_cast<double>(step + 1) / warm;
  int denom = std::max(1, cfg.total_steps - 1 - warm);
  return cfg.lr_peak * 0.5 *
         (1.0 + std::cos(M_PI * static_cast<double>(step - warm) / denom));
}

TrainResult train(const TrainConfig& cfg, std::span<const ToyScene> scenes,
                  std::shared_ptr<const AnchorSet> anchors) {
  if (!anchors) throw std::invalid_argument("train: null anchors");
  validate(*anchors);
  if (scenes.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 ||
      static_cast<std::size_t>(cfg.batch_size) > scenes.size())
    throw std::invalid_argument("train: bad batch_size");
  if (cfg.total_steps < 0)
    throw std::invalid_argument("train: total_steps must be >= 0");
  if (cfg.loss == LossKind::Regression && anchors->count() != 1)
    throw std::invalid_argument("train: regression requires K == 1 anchors");

  const int H = static_cast<int>(scenes[0].history.points.rows());
  MlpConfig mcfg;
  mcfg.input_dim = feature_dim(H);
  mcfg.hidden = cfg.hidden;
  mcfg.K = anchors->count();
  mcfg.T = anchors->horizon();
  mcfg.with_sigma = cfg.with_sigma;

  LossConfig loss{cfg.loss, cfg.soft_temperature};
  std::vector<ExampleTarget> targets;
  targets.reserve(scenes.size());
  for (const ToyScene& s : scenes) targets.push_back(make_target(s, *anchors, loss));

  TrainResult result;
  result.params = init_params(mcfg, derive_seed(cfg.seed, 1));
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 2));

  Eigen::VectorXd theta = result.params.to_flat();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd grad(theta.size());

  std::vector<std::size_t> order(scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t pos = order.size();  // trigger a shuffle at step 0

  result.log.reserve(cfg.total_steps);
  for (int step = 0; step < cfg.total_steps; ++step) {
    if (pos + cfg.batch_size > order.size()) {
      shuffle(order, shuffle_rng);
      pos = 0;
    }
    std::span<const std::size_t> batch(order.data() + pos, cfg.batch_size);
    pos += cfg.batch_size;

    double L = batch_loss(result.params, targets, batch, *anchors, loss, &grad);
    double lr = lr_schedule(cfg, step);
    double t = step + 1;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v.array() +
        (1.0 - cfg.adam_beta2) * grad.array().square();
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    theta.array() -= lr * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + cfg.adam_eps);
    result.params.from_flat(theta);
    result.log.push_back({step, lr, L});
  }
  return result;
}

LinearFit linear_fit(const PastHistory& history, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("linear_fit: dt must be > 0");
  const Eigen::Index H = history.points.rows();
  if (H < 1) throw std::invalid_argument("linear_fit: empty history");
  // Times relative to the last observation: -(H-1)dt .. 0.
  double t_mean = 0.0;
  for (Eigen::Index i = 0; i < H; ++i)
    t_mean += static_cast<double>(i - (H - 1)) * dt;
  t_mean /= static_cast<double>(H);
  Eigen::RowVector2d p_mean = history.points.colwise().mean();
  double stt = 0.0;
  Eigen::RowVector2d stp = Eigen::RowVector2d::Zero();
  for (Eigen::Index i = 0; i < H; ++i) {
    double t = static_cast<double>(i - (H - 1)) * dt - t_mean;
    stt += t * t;
    stp += t * (history.points.row(i) - p_mean);
  }
  LinearFit fit;
  if (stt > 0.0) fit.slope = (stp / stt).transpose();
  fit.intercept = (p_mean - fit.slope.transpose() * t_mean).transpose();
  return fit;
}

Trajectory linear_predict(const LinearFit& fit, int T, double dt) {
  if (T < 1) throw std::invalid_argument("linear_predict: T must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("linear_predict: dt must be > 0");
  Waypoints pts(T, 2);
  for (int t = 1; t <= T; ++t)
    pts.row(t - 1) = (fit.intercept + fit.slope * (t * dt)).transpose();
  return Trajectory{pts, dt};
}

}  // namespace trajpred

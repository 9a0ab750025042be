#include "trajpred/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajpred {

double sigma_from_log(double log_s) {
  return std::exp(std::clamp(log_s, -kLogScaleLimit, kLogScaleLimit));
}

double rho_from_raw(double rho_raw) { return kRhoMax * std::tanh(rho_raw); }

Eigen::Matrix2d covariance(const GaussianParams2D& g) {
  double sx = sigma_from_log(g.log_sx);
  double sy = sigma_from_log(g.log_sy);
  double rho = rho_from_raw(g.rho_raw);
  Eigen::Matrix2d cov;
  cov << sx * sx, rho * sx * sy, rho * sx * sy, sy * sy;
  return cov;
}

double step_log_density(const GaussianParams2D& g, const Point2& anchor_pt,
                        const Point2& query) {
  double sx = sigma_from_log(g.log_sx);
  double sy = sigma_from_log(g.log_sy);
  double rho = rho_from_raw(g.rho_raw);
  double u = (query.x() - anchor_pt.x() - g.mu_x) / sx;
  double v = (query.y() - anchor_pt.y() - g.mu_y) / sy;
  double c = 1.0 - rho * rho;
  return -std::log(2.0 * M_PI) - std::log(sx) - std::log(sy) -
         0.5 * std::log(c) - (u * u - 2.0 * rho * u * v + v * v) / (2.0 * c);
}

double logsumexp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf stays -inf
  return m + std::log((v.array() - m).exp().sum());
}

GaussianParams2D TrajectoryMixture::gaussian(int k, int t) const {
  const Eigen::Index row = static_cast<Eigen::Index>(k) * horizon() + t;
  return GaussianParams2D{params(row, 0), params(row, 1), params(row, 2),
                          params(row, 3), params(row, 4)};
}

void validate(const TrajectoryMixture& mix) {
  if (!mix.anchors) throw std::invalid_argument("mixture: missing anchors");
  validate(*mix.anchors);
  const int K = mix.anchors->count();
  const int T = mix.anchors->horizon();
  if (mix.logits.size() != K)
    throw std::invalid_argument("mixture: logits size != K");
  if (mix.params.rows() != static_cast<Eigen::Index>(K) * T ||
      mix.params.cols() != 5)
    throw std::invalid_argument("mixture: params must be (K*T) x 5");
  if (!mix.logits.allFinite() || !mix.params.allFinite())
    throw std::invalid_argument("mixture: non-finite parameter");
}

Eigen::VectorXd mixture_weights(const TrajectoryMixture& mix) {
  Eigen::VectorXd w = (mix.logits.array() - mix.logits.maxCoeff()).exp();
  return w / w.sum();
}

double log_likelihood(const TrajectoryMixture& mix,
                      const Trajectory& gt_world) {
  validate(mix);
  const int K = mix.num_modes();
  const int T = mix.horizon();
  if (gt_world.length() != T)
    throw std::invalid_argument("log_likelihood: ground truth length != T");
  Waypoints canon = to_agent_frame(gt_world.points, mix.frame);
  Eigen::VectorXd log_pi =
      mix.logits.array() - logsumexp(mix.logits);
  Eigen::VectorXd per_mode(K);
  for (int k = 0; k < K; ++k) {
    double acc = log_pi[k];
    for (int t = 0; t < T; ++t)
      acc += step_log_density(mix.gaussian(k, t),
                              mix.anchors->anchors[k].points.row(t),
                              canon.row(t));
    per_mode[k] = acc;
  }
  return logsumexp(per_mode);
}

double metric_ll(const TrajectoryMixture& mix, const Trajectory& gt_world) {
  return log_likelihood(mix, gt_world) / (2.0 * mix.horizon());
}

std::vector<std::pair<double, Trajectory>> map_trajectory_set(
    const TrajectoryMixture& mix, int top_k) {
  validate(mix);
  const int K = mix.num_modes();
  const int T = mix.horizon();
  Eigen::VectorXd w = mixture_weights(mix);
  std::vector<int> order(K);
  for (int k = 0; k < K; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return w[a] > w[b]; });
  int keep = (top_k <= 0 || top_k > K) ? K : top_k;
  std::vector<std::pair<double, Trajectory>> out;
  out.reserve(keep);
  for (int i = 0; i < keep; ++i) {
    int k = order[i];
    Waypoints pts(T, 2);
    for (int t = 0; t < T; ++t) {
      GaussianParams2D g = mix.gaussian(k, t);
      pts.row(t) = mix.anchors->anchors[k].points.row(t) +
                   Eigen::RowVector2d(g.mu_x, g.mu_y);
    }
    out.emplace_back(w[k],
                     from_agent_frame(Trajectory{pts, mix.anchors->dt()},
                                      mix.frame));
  }
  return out;
}

OccupancyGrid occupancy(const TrajectoryMixture& mix, const GridSpec& spec) {
  validate(mix);
  if (!(spec.cell_size > 0.0))
    throw std::invalid_argument("occupancy: cell_size must be > 0");
  if (spec.width < 1 || spec.height < 1)
    throw std::invalid_argument("occupancy: grid dims must be >= 1");
  const int K = mix.num_modes();
  const int T = mix.horizon();
  Eigen::VectorXd log_pi = mix.logits.array() - logsumexp(mix.logits);
  const double area = spec.cell_size * spec.cell_size;

  OccupancyGrid grid;
  grid.spec = spec;
  grid.planes.assign(T, Eigen::MatrixXd::Zero(spec.height, spec.width));
  Eigen::VectorXd acc(K);
  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd& plane = grid.planes[t];
    for (int iy = 0; iy < spec.height; ++iy) {
      for (int ix = 0; ix < spec.width; ++ix) {
        // Cell centers, evaluated in the mixture's own frame.
        Point2 world = spec.origin +
                       Point2((ix + 0.5) * spec.cell_size,
                              (iy + 0.5) * spec.cell_size);
        Point2 q = to_agent_frame(world, mix.frame);
        for (int k = 0; k < K; ++k)
          acc[k] = log_pi[k] +
                   step_log_density(mix.gaussian(k, t),
                                    mix.anchors->anchors[k].points.row(t), q);
        plane(iy, ix) = std::exp(logsumexp(acc)) * area;
      }
    }
  }
  return grid;
}

GridSpec fit_grid(const TrajectoryMixture& mix, double sigma_padding,
                  double cell_size) {
  validate(mix);
  if (!(cell_size > 0.0))
    throw std::invalid_argument("fit_grid: cell_size must be > 0");
  const int K = mix.num_modes();
  const int T = mix.horizon();
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < T; ++t) {
      GaussianParams2D g = mix.gaussian(k, t);
      Point2 mean_local = mix.anchors->anchors[k].points.row(t).transpose() +
                          Point2(g.mu_x, g.mu_y);
      Point2 mean = from_agent_frame(mean_local, mix.frame);
      double pad = sigma_padding * std::max(sigma_from_log(g.log_sx),
                                            sigma_from_log(g.log_sy));
      lo_x = std::min(lo_x, mean.x() - pad);
      hi_x = std::max(hi_x, mean.x() + pad);
      lo_y = std::min(lo_y, mean.y() - pad);
      hi_y = std::max(hi_y, mean.y() + pad);
    }
  }
  GridSpec spec;
  spec.cell_size = cell_size;
  spec.origin = Point2(lo_x, lo_y);
  spec.width = std::max(1, static_cast<int>(std::ceil((hi_x - lo_x) / cell_size)));
  spec.height = std::max(1, static_cast<int>(std::ceil((hi_y - lo_y) / cell_size)));
  return spec;
}

}  // namespace trajpred

#pragma once

// Output distribution of the predictor: a mixture over K anchor modes where
// each mode is a chain of per-timestep bivariate Gaussians centered on the
// anchor waypoint plus a learned offset. Everything here lives in the agent
// frame stored in `frame`; ground truth arrives in world coordinates and is
// canonicalized before evaluation.

#include <Eigen/Dense>
#include <memory>
#include <utility>
#include <vector>

#include "trajpred/anchors.hpp"
#include "trajpred/geom.hpp"

namespace trajpred {

// Raw (unsquashed) parameters of one bivariate Gaussian. Effective scales
// and correlation come from the squashers below, which keep the covariance
// valid for any finite raw value.
struct GaussianParams2D {
  double mu_x{0.0}, mu_y{0.0};      // mean offset from anchor waypoint, meters
  double log_sx{0.0}, log_sy{0.0};  // raw log scales
  double rho_raw{0.0};              // raw correlation parameter
};

inline constexpr double kLogScaleLimit = 5.0;  // clamp for raw log scales
inline constexpr double kRhoMax = 0.99;        // |rho| stays below this

double sigma_from_log(double log_s);      // exp(clamp(log_s, -limit, limit))
double rho_from_raw(double rho_raw);      // kRhoMax * tanh(rho_raw)
Eigen::Matrix2d covariance(const GaussianParams2D& g);

// log N(query | anchor_pt + mu, Sigma) in closed form.
double step_log_density(const GaussianParams2D& g, const Point2& anchor_pt,
                        const Point2& query);

// Stable log(sum(exp(v))).
double logsumexp(const Eigen::VectorXd& v);

struct TrajectoryMixture {
  Eigen::VectorXd logits;  // K, softmax-normalized into mode weights
  // (K*T) x 5, row k*T+t = (mu_x, mu_y, log_sx, log_sy, rho_raw).
  Eigen::MatrixXd params;
  std::shared_ptr<const AnchorSet> anchors;  // K anchors, horizon T
  Pose frame;  // world pose of the agent frame the mixture lives in

  int num_modes() const { return static_cast<int>(logits.size()); }
  int horizon() const { return anchors->horizon(); }
  GaussianParams2D gaussian(int k, int t) const;
};

// Throws std::invalid_argument when shapes disagree or values are non-finite.
void validate(const TrajectoryMixture& mix);

// softmax(logits); strictly positive, sums to 1.
Eigen::VectorXd mixture_weights(const TrajectoryMixture& mix);

// log p(gt | mixture) where gt is a world-frame trajectory of length T:
// logsumexp over modes of log pi_k + sum_t step log density.
double log_likelihood(const TrajectoryMixture& mix, const Trajectory& gt_world);

// log_likelihood scaled by 1/(2T): nats per scalar dimension.
double metric_ll(const TrajectoryMixture& mix, const Trajectory& gt_world);

// Mode means as world-frame trajectories paired with their weights, sorted
// by descending weight (ties broken by lower mode index), truncated to
// top_k (top_k <= 0 or > K means all K).
std::vector<std::pair<double, Trajectory>> map_trajectory_set(
    const TrajectoryMixture& mix, int top_k = 0);

struct GridSpec {
  Point2 origin{0.0, 0.0};  // world coordinates of cell (0,0)'s lower-left corner
  double cell_size{0.5};    // meters, > 0
  int width{0}, height{0};  // cells along x / y
};

struct OccupancyGrid {
  GridSpec spec;
  // One height x width density plane per future timestep; entry (iy, ix) is
  // the mixture density at the cell center times the cell area.
  std::vector<Eigen::MatrixXd> planes;
};

// Rasterizes the mixture marginal at each timestep via the midpoint rule.
OccupancyGrid occupancy(const TrajectoryMixture& mix, const GridSpec& spec);

// Smallest axis-aligned grid covering every mode mean at every timestep
// padded by `sigma_padding` effective standard deviations.
GridSpec fit_grid(const TrajectoryMixture& mix, double sigma_padding,
                  double cell_size);

}  // namespace trajpred

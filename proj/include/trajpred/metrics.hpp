#pragma once

// Distance metrics and evaluation report assembly. A method's output for
// one example is a weighted trajectory set; "the" prediction for single-
// trajectory metrics is the highest-weight member.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajpred/geom.hpp"
#include "trajpred/synthgen.hpp"

namespace trajpred {

// Mean / final Euclidean displacement between equal-length trajectories.
double ade(const Trajectory& pred, const Trajectory& gt);
double fde(const Trajectory& pred, const Trajectory& gt);

using WeightedTrajectories = std::vector<std::pair<double, Trajectory>>;

// Minimum ADE over the M highest-weight members (ties by lower index).
// Throws std::invalid_argument when M < 1 or M > set size.
double min_ade(const WeightedTrajectories& set, const Trajectory& gt, int M);

// Same with mean *squared* displacement.
double min_msd(const WeightedTrajectories& set, const Trajectory& gt, int M);

// Maneuver class of a ground-truth future from its agent-frame endpoint:
// distance gates first, then bearing (positive bearing = left).
enum class EndpointCategory {
  Stationary,   // endpoint closer than 4 m
  Slow,         // closer than 8 m
  Straight,     // |bearing| <= 5 deg
  SlightLeft,   // 5 < bearing <= 30 deg
  Left,         // bearing > 30 deg
  SlightRight,  // -30 <= bearing < -5 deg
  Right,        // bearing < -30 deg
};

inline constexpr int kNumCategories = 7;
std::string to_string(EndpointCategory c);

EndpointCategory endpoint_category(const Trajectory& gt, const Pose& gt_pose);

// Per-example output of one method on one example.
struct PredictionSet {
  WeightedTrajectories trajectories;     // at least one entry
  std::optional<double> metric_ll;       // absent for non-probabilistic methods
};

struct MethodOutput {
  std::string method;
  std::vector<PredictionSet> predictions;  // aligned with the eval scenes
};

struct MinStat {
  int m_requested{0};
  int m_used{0};  // min(M, smallest set size); bracketed in reports if < m_requested
  double min_ade_mean{0}, min_ade_std{0};
  double min_msd_mean{0}, min_msd_std{0};
};

struct ReportRow {
  std::string method;
  std::string category;  // "overall" or an EndpointCategory name
  int count{0};
  std::optional<double> ll_mean, ll_std;
  double ade_mean{0}, ade_std{0};
  double fde_mean{0}, fde_std{0};
  std::vector<MinStat> min_stats;  // one per requested M (overall rows only)
};

struct PerStepRow {
  std::string method;
  Eigen::VectorXd ade_t;  // length T, mean displacement at each step
};

struct Report {
  std::vector<int> m_values;
  std::vector<ReportRow> rows;       // overall first, then per-category
  std::vector<PerStepRow> per_step;
};

// Aggregates per-method metrics over the scenes (means and population
// standard deviations).
Report make_report(std::span<const MethodOutput> methods,
                   std::span<const ToyScene> scenes,
                   std::span<const int> m_values);

}  // namespace trajpred

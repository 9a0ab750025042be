#include "trajpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace trajpred {

namespace {

void check_lengths(const Trajectory& pred, const Trajectory& gt) {
  if (pred.length() != gt.length() || pred.length() < 1)
    throw std::invalid_argument("metric: trajectory length mismatch");
}

// Indices of the M largest weights, descending, ties by lower index.
std::vector<int> top_m(const WeightedTrajectories& set, int M) {
  if (M < 1 || static_cast<std::size_t>(M) > set.size())
    throw std::invalid_argument("metric: M out of range");
  std::vector<int> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return set[a].first > set[b].first;
  });
  order.resize(M);
  return order;
}

}  // namespace

double ade(const Trajectory& pred, const Trajectory& gt) {
  check_lengths(pred, gt);
  return (pred.points - gt.points).rowwise().norm().mean();
}

double fde(const Trajectory& pred, const Trajectory& gt) {
  check_lengths(pred, gt);
  return (pred.points.bottomRows(1) - gt.points.bottomRows(1)).norm();
}

double min_ade(const WeightedTrajectories& set, const Trajectory& gt, int M) {
  double best = std::numeric_limits<double>::infinity();
  for (int i : top_m(set, M)) best = std::min(best, ade(set[i].second, gt));
  return best;
}

double min_msd(const WeightedTrajectories& set, const Trajectory& gt, int M) {
  double best = std::numeric_limits<double>::infinity();
  for (int i : top_m(set, M)) {
    const Trajectory& pred = set[i].second;
    check_lengths(pred, gt);
    double msd = (pred.points - gt.points).rowwise().squaredNorm().mean();
    best = std::min(best, msd);
  }
  return best;
}

std::string to_string(EndpointCategory c) {
  switch (c) {
    case EndpointCategory::Stationary: return "stationary";
    case EndpointCategory::Slow: return "slow";
    case EndpointCategory::Straight: return "straight";
    case EndpointCategory::SlightLeft: return "slight_left";
    case EndpointCategory::Left: return "left";
    case EndpointCategory::SlightRight: return "slight_right";
    case EndpointCategory::Right: return "right";
  }
  throw std::invalid_argument("unknown category");
}

EndpointCategory endpoint_category(const Trajectory& gt, const Pose& gt_pose) {
  if (gt.length() < 1) throw std::invalid_argument("category: empty trajectory");
  Point2 end = to_agent_frame(Point2(gt.points.row(gt.length() - 1)), gt_pose);
  double dist = end.norm();
  if (dist < 4.0) return EndpointCategory::Stationary;
  if (dist < 8.0) return EndpointCategory::Slow;
  double bearing_deg = std::atan2(end.y(), end.x()) * 180.0 / M_PI;
  if (std::abs(bearing_deg) <= 5.0) return EndpointCategory::Straight;
  if (bearing_deg > 30.0) return EndpointCategory::Left;
  if (bearing_deg > 5.0) return EndpointCategory::SlightLeft;
  if (bearing_deg < -30.0) return EndpointCategory::Right;
  return EndpointCategory::SlightRight;
}

namespace {

struct Accum {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  int count() const { return static_cast<int>(values.size()); }
  double mean() const {
    return values.empty()
               ? 0.0
               : std::accumulate(values.begin(), values.end(), 0.0) /
                     static_cast<double>(values.size());
  }
  double stddev() const {  // population
    if (values.empty()) return 0.0;
    double m = mean(), acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size()));
  }
};

}  // namespace

Report make_report(std::span<const MethodOutput> methods,
                   std::span<const ToyScene> scenes,
                   std::span<const int> m_values) {
  Report report;
  report.m_values.assign(m_values.begin(), m_values.end());
  if (scenes.empty()) throw std::invalid_argument("report: no scenes");
  const int T = scenes[0].future.length();

  std::vector<EndpointCategory> cats(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i)
    cats[i] = endpoint_category(scenes[i].future, scenes[i].history.pose);

  for (const MethodOutput& mo : methods) {
    if (mo.predictions.size() != scenes.size())
      throw std::invalid_argument("report: prediction count mismatch for " +
                                  mo.method);
    int min_set = std::numeric_limits<int>::max();
    for (const PredictionSet& p : mo.predictions) {
      if (p.trajectories.empty())
        throw std::invalid_argument("report: empty prediction set");
      min_set = std::min(min_set,
                         static_cast<int>(p.trajectories.size()));
    }

    Accum a_ll, a_ade, a_fde;
    std::vector<Accum> a_minade(m_values.size()), a_minmsd(m_values.size());
    std::vector<Accum> c_ade(kNumCategories), c_fde(kNumCategories);
    Eigen::VectorXd step_sum = Eigen::VectorXd::Zero(T);

    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const Trajectory& gt = scenes[i].future;
      const PredictionSet& p = mo.predictions[i];
      // Highest-weight member; prediction sets are not assumed sorted.
      int best = 0;
      for (std::size_t j = 1; j < p.trajectories.size(); ++j)
        if (p.trajectories[j].first > p.trajectories[best].first)
          best = static_cast<int>(j);
      const Trajectory& top = p.trajectories[best].second;

      double e_ade = ade(top, gt);
      double e_fde = fde(top, gt);
      a_ade.add(e_ade);
      a_fde.add(e_fde);
      if (p.metric_ll) a_ll.add(*p.metric_ll);
      int c = static_cast<int>(cats[i]);
      c_ade[c].add(e_ade);
      c_fde[c].add(e_fde);
      step_sum += (top.points - gt.points).rowwise().norm();
      for (std::size_t mi = 0; mi < m_values.size(); ++mi) {
        int m_used = std::min<int>(m_values[mi], min_set);
        a_minade[mi].add(min_ade(p.trajectories, gt, m_used));
        a_minmsd[mi].add(min_msd(p.trajectories, gt, m_used));
      }
    }

    ReportRow overall;
    overall.method = mo.method;
    overall.category = "overall";
    overall.count = static_cast<int>(scenes.size());
    if (a_ll.count() > 0) {
      overall.ll_mean = a_ll.mean();
      overall.ll_std = a_ll.stddev();
    }
    overall.ade_mean = a_ade.mean();
    overall.ade_std = a_ade.stddev();
    overall.fde_mean = a_fde.mean();
    overall.fde_std = a_fde.stddev();
    for (std::size_t mi = 0; mi < m_values.size(); ++mi) {
      MinStat ms;
      ms.m_requested = m_values[mi];
      ms.m_used = std::min<int>(m_values[mi], min_set);
      ms.min_ade_mean = a_minade[mi].mean();
      ms.min_ade_std = a_minade[mi].stddev();
      ms.min_msd_mean = a_minmsd[mi].mean();
      ms.min_msd_std = a_minmsd[mi].stddev();
      overall.min_stats.push_back(ms);
    }
    report.rows.push_back(std::move(overall));

    for (int c = 0; c < kNumCategories; ++c) {
      if (c_ade[c].count() == 0) continue;
      ReportRow row;
      row.method = mo.method;
      row.category = to_string(static_cast<EndpointCategory>(c));
      row.count = c_ade[c].count();
      row.ade_mean = c_ade[c].mean();
      row.ade_std = c_ade[c].stddev();
      row.fde_mean = c_fde[c].mean();
      row.fde_std = c_fde[c].stddev();
      report.rows.push_back(std::move(row));
    }

    PerStepRow ps;
    ps.method = mo.method;
    ps.ade_t = step_sum / static_cast<double>(scenes.size());
    report.per_step.push_back(std::move(ps));
  }
  return report;
}

}  // namespace trajpred

#include "trajpred/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "trajpred/util.hpp"

namespace trajpred {

void validate(const AnchorSet& set) {
  if (set.anchors.empty()) throw std::invalid_argument("empty anchor set");
  const int T = set.anchors[0].length();
  const double dt = set.anchors[0].dt;
  if (T < 1) throw std::invalid_argument("anchor horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("anchor dt must be > 0");
  for (const auto& a : set.anchors) {
    if (a.length() != T) throw std::invalid_argument("anchor length mismatch");
    if (a.dt != dt) throw std::invalid_argument("anchor dt mismatch");
    if (!a.points.allFinite())
      throw std::invalid_argument("anchor has non-finite waypoint");
  }
}

namespace {

// Canonicalize all futures once; clustering operates on flat row vectors.
Eigen::MatrixXd canonical_rows(std::span<const Trajectory> futures,
                               std::span<const Pose> poses) {
  const Eigen::Index n = static_cast<Eigen::Index>(futures.size());
  const Eigen::Index T = futures.empty() ? 0 : futures[0].points.rows();
  Eigen::MatrixXd rows(n, 2 * T);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (futures[i].points.rows() != T)
      throw std::invalid_argument("future length mismatch");
    Waypoints c = to_agent_frame(futures[i].points, poses[i]);
    rows.row(i) = Eigen::Map<const Eigen::VectorXd>(c.data(), 2 * T);
  }
  return rows;
}

Eigen::VectorXd nearest_sq_dist(const Eigen::MatrixXd& rows,
                                const Eigen::MatrixXd& centers,
                                Eigen::VectorXi* arg = nullptr) {
  const Eigen::Index n = rows.rows();
  Eigen::VectorXd best(n);
  if (arg) arg->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double bd = std::numeric_limits<double>::infinity();
    int bk = 0;
    for (Eigen::Index k = 0; k < centers.rows(); ++k) {
      double d = (rows.row(i) - centers.row(k)).squaredNorm();
      if (d < bd) {
        bd = d;
        bk = static_cast<int>(k);
      }
    }
    best[i] = bd;
    if (arg) (*arg)[i] = bk;
  }
  return best;
}

Eigen::MatrixXd seed_kmeanspp(const Eigen::MatrixXd& rows, int K,
                              std::mt19937_64& rng) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd centers(K, rows.cols());
  centers.row(0) = rows.row(static_cast<Eigen::Index>(uniform_index(rng, n)));
  for (int k = 1; k < K; ++k) {
    Eigen::VectorXd d2 =
        nearest_sq_dist(rows, centers.topRows(k));
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = u01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    }  // all points coincide with chosen centers: reuse index 0
    centers.row(k) = rows.row(pick);
  }
  return centers;
}

}  // namespace

KmeansResult kmeans_anchors(std::span<const Trajectory> futures,
                            std::span<const Pose> poses, int K,
                            std::uint64_t seed, int max_iters) {
  if (futures.empty()) throw std::invalid_argument("kmeans: empty dataset");
  if (futures.size() != poses.size())
    throw std::invalid_argument("kmeans: futures/poses size mismatch");
  if (K < 1 || static_cast<std::size_t>(K) > futures.size())
    throw std::invalid_argument("kmeans: K must be in [1, N]");
  const double dt = futures[0].dt;
  const Eigen::Index T = futures[0].points.rows();

  Eigen::MatrixXd rows = canonical_rows(futures, poses);
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centers = seed_kmeanspp(rows, K, rng);

  KmeansResult result;
  Eigen::VectorXi assign(rows.rows());
  Eigen::VectorXi prev = -Eigen::VectorXi::Ones(rows.rows());
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::VectorXd d2 = nearest_sq_dist(rows, centers, &assign);

    // Empty clusters grab the point farthest from its current centroid.
    std::vector<bool> taken(rows.rows(), false);
    for (int k = 0; k < K; ++k) {
      if ((assign.array() == k).any()) continue;
      Eigen::Index far = -1;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        if (!taken[i] && d2[i] > fd) {
          fd = d2[i];
          far = i;
        }
      }
      taken[far] = true;
      assign[far] = k;
      d2[far] = 0.0;
    }

    // Update step: centroid = mean of assigned rows.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, rows.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      sums.row(assign[i]) += rows.row(i);
      counts[assign[i]] += 1.0;
    }
    for (int k = 0; k < K; ++k) centers.row(k) = sums.row(k) / counts[k];

    result.distortions.push_back(nearest_sq_dist(rows, centers).sum());
    result.iterations = iter + 1;
    if ((assign.array() == prev.array()).all()) break;
    prev = assign;
  }

  result.anchors.anchors.reserve(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd flat = centers.row(k);
    Waypoints pts = Eigen::Map<const Waypoints>(flat.data(), T, 2);
    result.anchors.anchors.push_back(Trajectory{pts, dt});
  }
  return result;
}

AnchorSet enumerate_anchors(int n_orientations,
                            std::span<const double> final_distances, int T,
                            double dt, bool include_stationary) {
  if (n_orientations < 1)
    throw std::invalid_argument("enumerate: n_orientations must be >= 1");
  if (T < 1) throw std::invalid_argument("enumerate: T must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("enumerate: dt must be > 0");
  AnchorSet set;
  for (int o = 0; o < n_orientations; ++o) {
    double theta = 2.0 * M_PI * o / n_orientations;
    Point2 dir(std::cos(theta), std::sin(theta));
    for (double dist : final_distances) {
      Waypoints pts(T, 2);
      for (int t = 0; t < T; ++t)
        pts.row(t) = dir.transpose() * (dist * (t + 1) / T);
      set.anchors.push_back(Trajectory{pts, dt});
    }
  }
  if (include_stationary)
    set.anchors.push_back(Trajectory{Waypoints::Zero(T, 2), dt});
  validate(set);
  return set;
}

AnchorAssignment assign_anchor(const Trajectory& gt, const Pose& gt_pose,
                               const AnchorSet& set) {
  validate(set);
  Waypoints canon = to_agent_frame(gt.points, gt_pose);
  AnchorAssignment best{0, std::numeric_limits<double>::infinity()};
  for (int k = 0; k < set.count(); ++k) {
    double d = canonical_squared_distance(canon, set.anchors[k].points);
    if (d < best.distance) best = {k, d};
  }
  return best;
}

Eigen::VectorXd soft_assign(const Trajectory& gt, const Pose& gt_pose,
                            const AnchorSet& set, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("soft_assign: temperature must be > 0");
  validate(set);
  Waypoints canon = to_agent_frame(gt.points, gt_pose);
  Eigen::VectorXd neg(set.count());
  for (int k = 0; k < set.count(); ++k)
    neg[k] = -canonical_squared_distance(canon, set.anchors[k].points) /
             temperature;
  Eigen::VectorXd w = (neg.array() - neg.maxCoeff()).exp();
  return w / w.sum();
}

std::vector<std::size_t> stratified_subsample(
    std::span<const Trajectory> futures, std::span<const Pose> poses,
    int n_curvature_bins, int n_distance_bins, double cap_fraction,
    std::uint64_t seed) {
  if (futures.size() != poses.size())
    throw std::invalid_argument("subsample: futures/poses size mismatch");
  if (n_curvature_bins < 1 || n_distance_bins < 1)
    throw std::invalid_argument("subsample: bin counts must be >= 1");
  if (!(cap_fraction > 0.0 && cap_fraction <= 1.0))
    throw std::invalid_argument("subsample: cap_fraction must be in (0, 1]");
  const std::size_t n = futures.size();
  if (n == 0) return {};

  // Signed Menger curvature through (first, middle, last) waypoint and
  // polyline arc length; both rigid-motion invariant.
  std::vector<double> curv(n), dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Waypoints& p = futures[i].points;
    Waypoints c = to_agent_frame(p, poses[i]);
    const Eigen::Index T = c.rows();
    double arc = 0.0;
    for (Eigen::Index t = 0; t + 1 < T; ++t)
      arc += (c.row(t + 1) - c.row(t)).norm();
    dist[i] = arc;
    double kappa = 0.0;
    if (T >= 3) {
      Point2 a = c.row(0), b = c.row(T / 2), e = c.row(T - 1);
      double cross = (b.x() - a.x()) * (e.y() - a.y()) -
                     (b.y() - a.y()) * (e.x() - a.x());
      double den = (b - a).norm() * (e - a).norm() * (e - b).norm();
      if (den > 0.0) kappa = 2.0 * cross / den;
    }
    curv[i] = kappa;
  }

  auto bin_of = [](double v, double lo, double hi, int bins) {
    if (hi <= lo) return 0;
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
  };
  auto minmax_c = std::minmax_element(curv.begin(), curv.end());
  auto minmax_d = std::minmax_element(dist.begin(), dist.end());

  std::vector<std::vector<std::size_t>> bins(
      static_cast<std::size_t>(n_curvature_bins) * n_distance_bins);
  for (std::size_t i = 0; i < n; ++i) {
    int bc = bin_of(curv[i], *minmax_c.first, *minmax_c.second,
                    n_curvature_bins);
    int bd = bin_of(dist[i], *minmax_d.first, *minmax_d.second,
                    n_distance_bins);
    bins[static_cast<std::size_t>(bc) * n_distance_bins + bd].push_back(i);
  }

  // With a single populated bin the cap can never bind (the bin is always
  // 100% of the result), so balancing is a no-op.
  std::size_t populated = 0;
  for (const auto& b : bins)
    if (!b.empty()) ++populated;
  if (populated <= 1) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }

  std::mt19937_64 rng(seed);
  for (auto& b : bins) shuffle(b, rng);  // kept prefix is a random subset

  // Iterate the cap to a fixpoint: each pass trims bins above
  // max(1, floor(cap * current_total)).
  std::vector<std::size_t> sizes(bins.size());
  for (std::size_t b = 0; b < bins.size(); ++b) sizes[b] = bins[b].size();
  for (;;) {
    std::size_t total = std::accumulate(sizes.begin(), sizes.end(),
                                        std::size_t{0});
    std::size_t cap = std::max<std::size_t>(
        1, static_cast<std::size_t>(cap_fraction * static_cast<double>(total)));
    bool changed = false;
    for (auto& s : sizes)
      if (s > cap) {
        s = cap;
        changed = true;
      }
    if (!changed) break;
  }

  std::vector<std::size_t> kept;
  for (std::size_t b = 0; b < bins.size(); ++b)
    kept.insert(kept.end(), bins[b].begin(), bins[b].begin() + sizes[b]);
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace trajpred

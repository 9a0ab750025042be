#pragma once

// Fixed anchor trajectories: the discrete support of the mixture. Anchors
// live in the canonical agent frame and are produced either by k-means on
// canonicalized training futures (under the rigid-motion-invariant squared
// distance) or by enumeration over headings and distances.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "trajpred/geom.hpp"

namespace trajpred {

struct AnchorSet {
  std::vector<Trajectory> anchors;  // K trajectories, equal length and dt

  int count() const { return static_cast<int>(anchors.size()); }
  int horizon() const { return anchors.empty() ? 0 : anchors[0].length(); }
  double dt() const { return anchors.empty() ? 0.0 : anchors[0].dt; }
};

// Throws std::invalid_argument when lengths/dts disagree or K == 0.
void validate(const AnchorSet& set);

struct KmeansResult {
  AnchorSet anchors;
  // Total distortion (sum over examples of squared distance to the nearest
  // centroid) after each Lloyd iteration; non-increasing.
  std::vector<double> distortions;
  int iterations{0};
};

// Lloyd's algorithm with k-means++ seeding on agent-frame futures.
// `futures[i]` is canonicalized with `poses[i]` before clustering. Stops
// when assignments stop changing or after max_iters. K in [1, N] required.
KmeansResult kmeans_anchors(std::span<const Trajectory> futures,
                            std::span<const Pose> poses, int K,
                            std::uint64_t seed, int max_iters = 100);

// Constant-speed straight anchors: n_orientations headings uniformly
// covering a full turn, each paired with every final distance; waypoints
// advance linearly to the endpoint. Optionally adds an all-zero anchor.
// K = n_orientations * |final_distances| (+1 with the stationary anchor).
AnchorSet enumerate_anchors(int n_orientations,
                            std::span<const double> final_distances, int T,
                            double dt, bool include_stationary);

struct AnchorAssignment {
  int index{0};        // nearest anchor, ties broken by lower index
  double distance{0};  // squared canonical distance to it
};

// Nearest anchor to a world-frame ground truth future.
AnchorAssignment assign_anchor(const Trajectory& gt, const Pose& gt_pose,
                               const AnchorSet& set);

// Softmax over negative squared distances scaled by 1/temperature.
// temperature > 0 required. Sums to 1; argmax matches assign_anchor.
Eigen::VectorXd soft_assign(const Trajectory& gt, const Pose& gt_pose,
                            const AnchorSet& set, double temperature);

// Balances a dataset by binning futures on (signed curvature, arc length)
// and capping every bin at cap_fraction of the current total, iterating
// until no bin exceeds the cap. Bins are an n_curvature x n_distance
// uniform lattice over the observed value ranges. Returns kept indices in
// ascending order; over-full bins are thinned by a seeded shuffle.
std::vector<std::size_t> stratified_subsample(
    std::span<const Trajectory> futures, std::span<const Pose> poses,
    int n_curvature_bins, int n_distance_bins, double cap_fraction,
    std::uint64_t seed);

}  // namespace trajpred

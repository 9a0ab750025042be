#pragma once

// Minimal SVG rendering of a predicted mixture against data: sample
// ground-truth futures, anchor paths, and per-mode mean trajectories with
// one-standard-deviation ellipses.

#include <Eigen/Dense>
#include <span>
#include <string>

#include "trajpred/mixture.hpp"
#include "trajpred/synthgen.hpp"

namespace trajpred {

struct EllipseAxes {
  double r1{0};     // major semi-axis (sqrt of larger eigenvalue)
  double r2{0};     // minor semi-axis
  double angle{0};  // radians, direction of the major axis
};

// Principal axes of a 2x2 covariance, closed form.
EllipseAxes ellipse_axes(const Eigen::Matrix2d& cov);

std::string render_svg(const TrajectoryMixture& mix,
                       std::span<const ToyScene> samples, int width_px = 640);

}  // namespace trajpred

#pragma once

// Planar trajectory types and frame transforms. A trajectory is a T x 2
// matrix of waypoints sampled at a fixed timestep; an agent's pose anchors
// the canonical frame in which every model quantity lives: translate the
// pose position to the origin and rotate the heading onto +x.

#include <Eigen/Dense>
#include <stdexcept>

namespace trajpred {

using Point2 = Eigen::Vector2d;
// Rows are waypoints in chronological order.
using Waypoints = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

struct Pose {
  Point2 position{0.0, 0.0};
  double heading{0.0};  // radians, (-pi, pi]
};

inline Pose make_pose(const Point2& position, double heading) {
  return Pose{position, wrap_angle(heading)};
}

struct Trajectory {
  Waypoints points;  // T x 2
  double dt{0.1};    // seconds between consecutive waypoints, > 0

  int length() const { return static_cast<int>(points.rows()); }
};

// Observed past of one agent. Waypoints cover times t <= 0 in chronological
// order; the last row sits at pose.position and the pose heading is the
// direction of the final step (0 if the agent did not move).
struct PastHistory {
  Waypoints points;  // H x 2
  Pose pose;
};

// Heading implied by the last two rows; 0 for a single point or when the
// last two points coincide.
double heading_from_points(const Waypoints& pts);

// Builds a PastHistory whose pose is derived from the waypoints themselves.
PastHistory make_history(const Waypoints& pts);

// World -> agent frame of `pose` (translate then rotate by -heading).
Waypoints to_agent_frame(const Waypoints& pts, const Pose& pose);
Point2 to_agent_frame(const Point2& p, const Pose& pose);
Trajectory to_agent_frame(const Trajectory& traj, const Pose& pose);

// Agent frame of `pose` -> world (rotate by +heading then translate).
Waypoints from_agent_frame(const Waypoints& pts, const Pose& pose);
Point2 from_agent_frame(const Point2& p, const Pose& pose);
Trajectory from_agent_frame(const Trajectory& traj, const Pose& pose);

// Squared distance between two trajectories after each is moved into its
// own agent frame: sum_t ||canon(u)_t - canon(v)_t||^2. Rigid motions
// applied jointly to a trajectory and its pose leave this unchanged.
// Throws std::invalid_argument on length mismatch.
double trajectory_distance(const Trajectory& u, const Pose& u_pose,
                           const Trajectory& v, const Pose& v_pose);

// Same on pre-canonicalized waypoint matrices (no further transform).
double canonical_squared_distance(const Waypoints& u, const Waypoints& v);

}  // namespace trajpred

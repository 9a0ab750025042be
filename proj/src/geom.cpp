#include "trajpred/geom.hpp"

#include <cmath>

namespace trajpred {

double wrap_angle(double a) {
  // Reduce to [-pi, pi) then flip the open end so the result is (-pi, pi].
  double w = std::remainder(a, 2.0 * M_PI);
  if (w == -M_PI) w = M_PI;
  return w;
}

double heading_from_points(const Waypoints& pts) {
  if (pts.rows() < 2) return 0.0;
  Point2 d = pts.row(pts.rows() - 1) - pts.row(pts.rows() - 2);
  if (d.squaredNorm() == 0.0) return 0.0;
  return std::atan2(d.y(), d.x());
}

PastHistory make_history(const Waypoints& pts) {
  if (pts.rows() < 1) throw std::invalid_argument("history needs >= 1 waypoint");
  PastHistory h;
  h.points = pts;
  h.pose = make_pose(pts.row(pts.rows() - 1), heading_from_points(pts));
  return h;
}

Waypoints to_agent_frame(const Waypoints& pts, const Pose& pose) {
  Eigen::Rotation2Dd rot(-pose.heading);
  Waypoints out = pts;
  out.rowwise() -= pose.position.transpose();
  return out * rot.toRotationMatrix().transpose();
}

Point2 to_agent_frame(const Point2& p, const Pose& pose) {
  return Eigen::Rotation2Dd(-pose.heading) * (p - pose.position);
}

Trajectory to_agent_frame(const Trajectory& traj, const Pose& pose) {
  return Trajectory{to_agent_frame(traj.points, pose), traj.dt};
}

Waypoints from_agent_frame(const Waypoints& pts, const Pose& pose) {
  Eigen::Rotation2Dd rot(pose.heading);
  Waypoints out = pts * rot.toRotationMatrix().transpose();
  out.rowwise() += pose.position.transpose();
  return out;
}

Point2 from_agent_frame(const Point2& p, const Pose& pose) {
  return Eigen::Rotation2Dd(pose.heading) * p + pose.position;
}

Trajectory from_agent_frame(const Trajectory& traj, const Pose& pose) {
  return Trajectory{from_agent_frame(traj.points, pose), traj.dt};
}

double canonical_squared_distance(const Waypoints& u, const Waypoints& v) {
  if (u.rows() != v.rows())
    throw std::invalid_argument("trajectory length mismatch");
  return (u - v).squaredNorm();
}

double trajectory_distance(const Trajectory& u, const Pose& u_pose,
                           const Trajectory& v, const Pose& v_pose) {
  return canonical_squared_distance(to_agent_frame(u.points, u_pose),
                                    to_agent_frame(v.points, v_pose));
}

}  // namespace trajpred

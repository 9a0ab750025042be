#include "trajpred/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace trajpred {

EllipseAxes ellipse_axes(const Eigen::Matrix2d& cov) {
  double a = cov(0, 0), b = cov(0, 1), c = cov(1, 1);
  double mid = 0.5 * (a + c);
  double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  EllipseAxes e;
  e.r1 = std::sqrt(std::max(0.0, mid + disc));
  e.r2 = std::sqrt(std::max(0.0, mid - disc));
  e.angle = 0.5 * std::atan2(2.0 * b, a - c);
  return e;
}

namespace {

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const char* kModeColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                             "#ff7f0e", "#17becf", "#e377c2", "#8c564b"};

}  // namespace

std::string render_svg(const TrajectoryMixture& mix,
                       std::span<const ToyScene> samples, int width_px) {
  validate(mix);
  const int K = mix.num_modes();
  const int T = mix.horizon();

  // World-frame geometry to draw.
  std::vector<Waypoints> sample_paths, anchor_paths, mean_paths;
  for (const ToyScene& s : samples) sample_paths.push_back(s.future.points);
  for (const Trajectory& a : mix.anchors->anchors)
    anchor_paths.push_back(from_agent_frame(a.points, mix.frame));
  auto map_set = map_trajectory_set(mix);  // sorted by weight desc
  for (const auto& [w, traj] : map_set) mean_paths.push_back(traj.points);

  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  bool first = true;
  auto grow = [&](const Waypoints& pts) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (first) {
        lo_x = hi_x = pts(i, 0);
        lo_y = hi_y = pts(i, 1);
        first = false;
      }
      lo_x = std::min(lo_x, pts(i, 0));
      hi_x = std::max(hi_x, pts(i, 0));
      lo_y = std::min(lo_y, pts(i, 1));
      hi_y = std::max(hi_y, pts(i, 1));
    }
  };
  for (const auto& p : sample_paths) grow(p);
  for (const auto& p : anchor_paths) grow(p);
  for (const auto& p : mean_paths) grow(p);
  const double pad = 1.0;
  lo_x -= pad; lo_y -= pad; hi_x += pad; hi_y += pad;
  double scale = width_px / std::max(hi_x - lo_x, 1e-9);
  int height_px = static_cast<int>(std::ceil((hi_y - lo_y) * scale));

  auto px = [&](double x) { return (x - lo_x) * scale; };
  auto py = [&](double y) { return (hi_y - y) * scale; };  // y grows upward

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width_px) + "\" height=\"" + std::to_string(height_px) +
         "\" viewBox=\"0 0 " + std::to_string(width_px) + " " +
         std::to_string(height_px) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto polyline = [&](const Waypoints& pts, const std::string& style) {
    svg += "<polyline fill=\"none\" " + style + " points=\"";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (i) svg += ' ';
      svg += f2(px(pts(i, 0))) + "," + f2(py(pts(i, 1)));
    }
    svg += "\"/>\n";
  };

  for (const auto& p : sample_paths)
    polyline(p, "stroke=\"#cccccc\" stroke-width=\"1\"");
  for (const auto& p : anchor_paths)
    polyline(p, "stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"4 3\"");

  // Modes in weight order so color i = i-th most likely.
  auto weights = mixture_weights(mix);
  std::vector<int> order(K);
  for (int k = 0; k < K; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return weights[a] > weights[b]; });
  for (int i = 0; i < K; ++i) {
    int k = order[i];
    const char* color = kModeColors[i % 8];
    for (int t = 0; t < T; ++t) {
      GaussianParams2D g = mix.gaussian(k, t);
      Point2 center_local =
          mix.anchors->anchors[k].points.row(t).transpose() +
          Point2(g.mu_x, g.mu_y);
      Point2 center = from_agent_frame(center_local, mix.frame);
      EllipseAxes axes = ellipse_axes(covariance(g));
      // Rotate the axes with the frame; SVG y points down, so flip sign.
      double ang = axes.angle + mix.frame.heading;
      double deg = -ang * 180.0 / M_PI;
      svg += "<ellipse cx=\"" + f2(px(center.x())) + "\" cy=\"" +
             f2(py(center.y())) + "\" rx=\"" + f2(axes.r1 * scale) +
             "\" ry=\"" + f2(axes.r2 * scale) + "\" transform=\"rotate(" +
             f2(deg) + " " + f2(px(center.x())) + " " + f2(py(center.y())) +
             ")\" fill=\"" + color + "\" fill-opacity=\"0.12\" stroke=\"" +
             color + "\" stroke-opacity=\"0.5\" stroke-width=\"0.5\"/>\n";
    }
    polyline(mean_paths[i],
             "stroke=\"" + std::string(color) + "\" stroke-width=\"2\"");
    // Weight label at the endpoint.
    const Waypoints& mp = mean_paths[i];
    svg += "<text x=\"" + f2(px(mp(mp.rows() - 1, 0)) + 4) + "\" y=\"" +
           f2(py(mp(mp.rows() - 1, 1))) + "\" font-size=\"12\" fill=\"" +
           color + "\">pi=" + f2(map_set[i].first) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace trajpred

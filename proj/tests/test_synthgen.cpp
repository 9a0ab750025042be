#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trajpred/geom.hpp"
#include "trajpred/mixture.hpp"
#include "trajpred/synthgen.hpp"

using namespace trajpred;

TEST_CASE("toy config validation") {
  ToyConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  ToyConfig bad = cfg;
  bad.T = 0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg;
  bad.H = 0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg;
  bad.dt = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg;
  bad.branch_probs = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg;
  bad.branch_probs = {1.2, -0.2, 0.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("branch names round trip") {
  CHECK(std::string(kBranchNames[0]) == "left");
  CHECK(std::string(kBranchNames[1]) == "middle");
  CHECK(std::string(kBranchNames[2]) == "right");
  for (int b = 0; b < 3; ++b) CHECK(branch_from_name(kBranchNames[b]) == b);
  CHECK_THROWS_AS(branch_from_name("sideways"), std::invalid_argument);
}

TEST_CASE("sample_scene is bit-deterministic in its seed") {
  ToyConfig cfg;
  ToyScene a = sample_scene(cfg, 42);
  ToyScene b = sample_scene(cfg, 42);
  CHECK(a.branch == b.branch);
  CHECK(a.seed == 42);
  CHECK((a.future.points - b.future.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.history.points - b.history.points).cwiseAbs().maxCoeff() == 0.0);

  ToyScene c = sample_scene(cfg, 43);
  CHECK((a.future.points - c.future.points).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("history is a straight approach ending at the origin pose") {
  ToyConfig cfg;
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    ToyScene s = sample_scene(cfg, seed);
    REQUIRE(s.history.points.rows() == cfg.H);
    CHECK(s.history.pose.position.norm() == 0.0);
    CHECK(s.history.pose.heading == 0.0);
    // Last sample is the agent position; earlier ones trail along -x at
    // constant speed; no lateral component in the past.
    for (int i = 0; i < cfg.H; ++i) {
      double expect_x = -cfg.speed * cfg.dt * (cfg.H - 1 - i);
      CHECK(s.history.points(i, 0) == doctest::Approx(expect_x).epsilon(1e-15));
      CHECK(s.history.points(i, 1) == 0.0);
    }
  }
}

TEST_CASE("future decomposes into exact longitudinal advance plus bounded "
          "wiggle") {
  ToyConfig cfg;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ToyScene s = sample_scene(cfg, seed);
    REQUIRE(s.future.length() == cfg.T);
    CHECK(s.future.dt == cfg.dt);
    double theta = cfg.branch_headings[static_cast<std::size_t>(s.branch)];
    Eigen::Rotation2Dd undo(-theta);
    for (int t = 0; t < cfg.T; ++t) {
      Point2 p = undo * Point2(s.future.points.row(t));
      CHECK(p.x() == doctest::Approx(cfg.speed * cfg.dt * (t + 1))
                         .epsilon(1e-12));
      CHECK(std::abs(p.y()) <= 2.0 * cfg.amplitude + 1e-12);
    }
  }
}

TEST_CASE("first future step stays within the kinematic envelope") {
  ToyConfig cfg;
  double lon = cfg.speed * cfg.dt;
  double lat = cfg.amplitude * std::min(2.0, cfg.omega_max * cfg.speed * cfg.dt);
  double upper = std::hypot(lon, lat);
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    ToyScene s = sample_scene(cfg, seed);
    double step = Point2(s.future.points.row(0)).norm();
    CHECK(step >= lon - 1e-12);  // longitudinal advance is exact
    CHECK(step <= upper + 1e-12);
  }
}

TEST_CASE("branch frequencies follow the prior") {
  ToyConfig cfg;
  cfg.n = 20000;
  std::vector<ToyScene> scenes = generate_dataset(cfg);
  REQUIRE(scenes.size() == 20000);
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (const auto& s : scenes) counts[s.branch] += 1.0;
  Eigen::Vector3d freq = counts / 20000.0;
  for (int b = 0; b < 3; ++b)
    CHECK(std::abs(freq[b] - cfg.branch_probs[static_cast<std::size_t>(b)]) <
          0.02);

  // Dataset generation is reproducible and scenes carry distinct seeds.
  std::vector<ToyScene> again = generate_dataset(cfg);
  for (int i : {0, 77, 19999}) {
    CHECK(scenes[static_cast<std::size_t>(i)].seed ==
          again[static_cast<std::size_t>(i)].seed);
    CHECK((scenes[static_cast<std::size_t>(i)].future.points -
           again[static_cast<std::size_t>(i)].future.points)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(scenes[0].seed != scenes[1].seed);
}

TEST_CASE("split_dataset: deterministic, order-independent, near fraction") {
  ToyConfig cfg;
  cfg.n = 20000;
  std::vector<ToyScene> scenes = generate_dataset(cfg);
  SplitIndices split = split_dataset(scenes, 0.1);
  CHECK(split.train.size() + split.test.size() == scenes.size());
  double frac =
      static_cast<double>(split.test.size()) / static_cast<double>(cfg.n);
  CHECK(std::abs(frac - 0.1) < 0.015);

  // Disjoint and exhaustive.
  std::vector<char> seen(scenes.size(), 0);
  for (std::size_t i : split.train) seen[i] += 1;
  for (std::size_t i : split.test) seen[i] += 1;
  CHECK(std::all_of(seen.begin(), seen.end(), [](char c) { return c == 1; }));

  // Membership is keyed on the scene seed, so a reordered dataset sends
  // each scene to the same side.
  std::vector<ToyScene> reversed(scenes.rbegin(), scenes.rend());
  SplitIndices rsplit = split_dataset(reversed, 0.1);
  std::vector<std::uint64_t> test_seeds, rtest_seeds;
  for (std::size_t i : split.test) test_seeds.push_back(scenes[i].seed);
  for (std::size_t i : rsplit.test) rtest_seeds.push_back(reversed[i].seed);
  std::sort(test_seeds.begin(), test_seeds.end());
  std::sort(rtest_seeds.begin(), rtest_seeds.end());
  CHECK(test_seeds == rtest_seeds);

  CHECK(split_dataset(scenes, 0.0).test.empty());
  CHECK_THROWS_AS(split_dataset(scenes, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(scenes, 1.0), std::invalid_argument);
}

TEST_CASE("reference mixture: prior weights, zero offsets, identity frame") {
  ToyConfig cfg;
  bool degenerate = true;
  TrajectoryMixture ref = fit_reference_mixture(cfg, 4000, 11, &degenerate);
  CHECK(!degenerate);
  REQUIRE(ref.num_modes() == 3);
  REQUIRE(ref.horizon() == cfg.T);
  CHECK(ref.frame.position.norm() == 0.0);
  CHECK(ref.frame.heading == 0.0);

  Eigen::VectorXd w = mixture_weights(ref);
  for (int b = 0; b < 3; ++b)
    CHECK(w[b] == doctest::Approx(cfg.branch_probs[static_cast<std::size_t>(b)])
                      .epsilon(1e-12));
  // Anchors absorb the branch means; learned offsets are zero by design.
  CHECK(ref.params.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ref.params.col(1).cwiseAbs().maxCoeff() == 0.0);

  // Each anchor's endpoint sits in its branch direction.
  for (int b = 0; b < 3; ++b) {
    Point2 end = ref.anchors->anchors[static_cast<std::size_t>(b)].points.row(
        cfg.T - 1);
    double bearing = std::atan2(end.y(), end.x());
    CHECK(std::abs(wrap_angle(
              bearing -
              cfg.branch_headings[static_cast<std::size_t>(b)])) < 0.15);
  }
}

TEST_CASE("deterministic branches flip the degenerate flag") {
  ToyConfig cfg;
  cfg.amplitude = 0.0;  // no lateral noise: every branch path is fixed
  bool degenerate = false;
  TrajectoryMixture ref = fit_reference_mixture(cfg, 2000, 3, &degenerate);
  CHECK(degenerate);
  // Scales clamp at the lower squashing limit instead of collapsing.
  CHECK(ref.params.col(2).minCoeff() >= -kLogScaleLimit);
  CHECK(ref.params.col(3).minCoeff() >= -kLogScaleLimit);
}

TEST_CASE("oracle estimate: reproducible, MC-stable, errors on bad input") {
  ToyConfig cfg;
  cfg.n = 2000;
  std::vector<ToyScene> scenes = generate_dataset(cfg);
  std::vector<ToyScene> eval(scenes.begin(), scenes.begin() + 400);

  OracleEstimate a = oracle_metric_ll(cfg, eval, 4000, 21);
  OracleEstimate b = oracle_metric_ll(cfg, eval, 4000, 21);
  CHECK(a.metric_ll == b.metric_ll);
  CHECK(a.std_error == b.std_error);
  CHECK(std::isfinite(a.metric_ll));
  CHECK(a.std_error > 0.0);
  CHECK(!a.degenerate);

  // Doubling the Monte-Carlo budget moves the estimate by at most a few
  // standard errors of the evaluation mean.
  OracleEstimate c = oracle_metric_ll(cfg, eval, 8000, 22);
  CHECK(std::abs(a.metric_ll - c.metric_ll) <
        3.0 * (a.std_error + c.std_error));

  std::vector<ToyScene> empty;
  CHECK_THROWS_AS(oracle_metric_ll(cfg, empty, 4000, 21),
                  std::invalid_argument);
  CHECK_THROWS_AS(oracle_metric_ll(cfg, eval, 1, 21), std::invalid_argument);
}

TEST_CASE("reference mixture is locally optimal against hand perturbations") {
  ToyConfig cfg;
  cfg.n = 3000;
  std::vector<ToyScene> scenes = generate_dataset(cfg);
  std::vector<ToyScene> eval(scenes.begin(), scenes.begin() + 1500);
  TrajectoryMixture ref = fit_reference_mixture(cfg, 20000, 5);

  auto mean_ll = [&](const TrajectoryMixture& mix) {
    double total = 0.0;
    for (const auto& s : eval) {
      TrajectoryMixture framed = mix;
      framed.frame = s.history.pose;
      total += metric_ll(framed, s.future);
    }
    return total / static_cast<double>(eval.size());
  };

  double base = mean_ll(ref);
  // Inflated scales, shifted means, and a flattened prior all score worse.
  TrajectoryMixture wide = ref;
  wide.params.col(2).array() += 0.5;
  wide.params.col(3).array() += 0.5;
  CHECK(mean_ll(wide) < base);

  TrajectoryMixture shifted = ref;
  shifted.params.col(0).array() += 0.25;
  CHECK(mean_ll(shifted) < base);

  TrajectoryMixture flat = ref;
  flat.logits.setZero();
  CHECK(mean_ll(flat) < base);

  TrajectoryMixture narrow = ref;
  narrow.params.col(2).array() -= 0.5;
  narrow.params.col(3).array() -= 0.5;
  CHECK(mean_ll(narrow) < base);
}

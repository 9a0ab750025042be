#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "trajpred/anchors.hpp"
#include "trajpred/geom.hpp"
#include "trajpred/mixture.hpp"
#include "trajpred/model.hpp"
#include "trajpred/synthgen.hpp"

using namespace trajpred;

namespace {

std::shared_ptr<AnchorSet> spread_anchors(int K, int T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  auto set = std::make_shared<AnchorSet>();
  for (int k = 0; k < K; ++k) {
    Waypoints p(T, 2);
    for (int t = 0; t < T; ++t) p.row(t) << u(rng), u(rng);
    set->anchors.push_back(Trajectory{p, 0.4});
  }
  return set;
}

ExampleTarget hand_target(int input_dim, int K, int T, std::uint64_t seed,
                          bool soft) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  ExampleTarget tgt;
  tgt.x.resize(input_dim);
  for (int i = 0; i < input_dim; ++i) tgt.x[i] = u(rng);
  tgt.canon_future.resize(T, 2);
  for (int t = 0; t < T; ++t) tgt.canon_future.row(t) << u(rng), u(rng);
  tgt.hard_index = static_cast<int>(seed % K);
  if (soft) {
    tgt.soft_weights.resize(K);
    for (int k = 0; k < K; ++k) tgt.soft_weights[k] = std::exp(u(rng));
    tgt.soft_weights /= tgt.soft_weights.sum();
  }
  return tgt;
}

double numeric_partial(const MlpParams& params, const ExampleTarget& tgt,
                       const AnchorSet& anchors, const LossConfig& loss,
                       int i, double h) {
  Eigen::VectorXd flat = params.to_flat();
  MlpParams p = params;
  flat[i] += h;
  p.from_flat(flat);
  double up = example_loss(p, tgt, anchors, loss);
  flat[i] -= 2.0 * h;
  p.from_flat(flat);
  double dn = example_loss(p, tgt, anchors, loss);
  return (up - dn) / (2.0 * h);
}

// Largest relative disagreement between analytic and central-difference
// gradients over every coordinate.
double gradcheck(const MlpParams& params, const ExampleTarget& tgt,
                 const AnchorSet& anchors, const LossConfig& loss) {
  Eigen::VectorXd grad;
  example_loss(params, tgt, anchors, loss, &grad);
  REQUIRE(grad.size() == params.num_params());
  double worst = 0.0;
  for (int i = 0; i < grad.size(); ++i) {
    double num = numeric_partial(params, tgt, anchors, loss, i, 1e-5);
    double rel = std::abs(grad[i] - num) /
                 std::max(1.0, std::abs(grad[i]) + std::abs(num));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST_CASE("flat parameter round trip and init bounds") {
  MlpConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden = {8, 7};
  cfg.K = 3;
  cfg.T = 3;
  MlpParams p = init_params(cfg, 42);
  Eigen::VectorXd flat = p.to_flat();
  CHECK(flat.size() == p.num_params());

  MlpParams q = init_params(cfg, 43);
  q.from_flat(flat);
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    CHECK((q.W[l] - p.W[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((q.b[l] - p.b[l]).cwiseAbs().maxCoeff() == 0.0);
  }

  // Same seed reproduces, different seed does not.
  CHECK((init_params(cfg, 42).to_flat() - flat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((init_params(cfg, 43).to_flat() - flat).cwiseAbs().maxCoeff() > 0.0);

  // Per-layer uniform bounds 1/sqrt(fan_in).
  std::vector<int> fan{6, 8, 7};
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    double s = 1.0 / std::sqrt(static_cast<double>(fan[l]));
    CHECK(p.W[l].cwiseAbs().maxCoeff() <= s);
    CHECK(p.b[l].cwiseAbs().maxCoeff() <= s);
  }

  Eigen::VectorXd bad(flat.size() + 1);
  CHECK_THROWS_AS(p.from_flat(bad), std::invalid_argument);
  MlpConfig zero = cfg;
  zero.K = 0;
  CHECK_THROWS_AS(init_params(zero, 1), std::invalid_argument);
}

TEST_CASE("features: interleaved canonical waypoints plus velocities") {
  Waypoints pts(3, 2);
  pts << 0.0, 0.0, 1.0, 0.5, 2.0, 1.0;
  PastHistory hist{pts, make_pose(Point2(0, 0), 0.0)};
  Eigen::VectorXd x = features(hist, 0.5);
  REQUIRE(x.size() == feature_dim(3));
  REQUIRE(x.size() == 10);
  Eigen::VectorXd expect(10);
  expect << 0, 0, 1, 0.5, 2, 1, 2, 1, 2, 1;  // velocities = diff / 0.5
  CHECK((x - expect).cwiseAbs().maxCoeff() < 1e-14);

  // Canonicalization happens inside: same geometry in a moved frame gives
  // identical features.
  Eigen::Rotation2Dd rot(1.2);
  Waypoints moved = (pts * rot.toRotationMatrix().transpose()).eval();
  moved.rowwise() += Eigen::RowVector2d(3.0, -4.0);
  PastHistory hist2{moved, make_pose(rot * Point2(0, 0) + Point2(3, -4), 1.2)};
  CHECK((features(hist2, 0.5) - x).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(features(hist, 0.0), std::invalid_argument);
  PastHistory empty{Waypoints(0, 2), make_pose(Point2(0, 0), 0.0)};
  CHECK_THROWS_AS(features(empty, 0.5), std::invalid_argument);
}

TEST_CASE("analytic gradients match central differences for every loss") {
  const int input_dim = 6, T = 3;
  auto anchors3 = spread_anchors(3, T, 7);
  auto anchors1 = spread_anchors(1, T, 8);

  struct Case {
    LossKind kind;
    bool with_sigma;
    int K;
  };
  std::vector<Case> cases{
      {LossKind::MultipathHard, true, 3},  {LossKind::MultipathHard, false, 3},
      {LossKind::MultipathSoft, true, 3},  {LossKind::MultipathSoft, false, 3},
      {LossKind::MinOfK, true, 3},         {LossKind::MinOfK, false, 3},
      {LossKind::Regression, true, 1},     {LossKind::Regression, false, 1},
  };
  for (const Case& c : cases) {
    for (std::uint64_t seed : {11ull, 29ull}) {
      MlpConfig cfg;
      cfg.input_dim = input_dim;
      cfg.hidden = {8, 7};
      cfg.K = c.K;
      cfg.T = T;
      cfg.with_sigma = c.with_sigma;
      MlpParams params = init_params(cfg, seed);
      ExampleTarget tgt = hand_target(input_dim, c.K, T, seed + 3,
                                      c.kind == LossKind::MultipathSoft);
      LossConfig loss{c.kind, 1.0};
      const AnchorSet& set = (c.K == 1) ? *anchors1 : *anchors3;
      double worst = gradcheck(params, tgt, set, loss);
      INFO("loss=", to_string(c.kind), " with_sigma=", c.with_sigma,
           " seed=", seed);
      CHECK(worst < 1e-6);
    }
  }

  // Linear model (no hidden layers) exercises the degenerate backprop path.
  MlpConfig lin;
  lin.input_dim = input_dim;
  lin.hidden = {};
  lin.K = 3;
  lin.T = T;
  MlpParams params = init_params(lin, 5);
  ExampleTarget tgt = hand_target(input_dim, 3, T, 17, false);
  CHECK(gradcheck(params, tgt, *anchors3,
                  LossConfig{LossKind::MultipathHard, 1.0}) < 1e-6);
}

TEST_CASE("hard loss at an exact anchor hit with zero parameters") {
  const int K = 3, T = 4;
  auto anchors = spread_anchors(K, T, 3);
  MlpConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden = {5};
  cfg.K = K;
  cfg.T = T;
  MlpParams params = init_params(cfg, 1);
  params.from_flat(Eigen::VectorXd::Zero(params.num_params()));

  ExampleTarget tgt;
  tgt.x = Eigen::VectorXd::Zero(4);
  tgt.hard_index = 1;
  tgt.canon_future = anchors->anchors[1].points;

  // Uniform weights and unit Gaussians: -log(1/K) + T log(2 pi).
  double expect = std::log(3.0) + 4.0 * std::log(2.0 * M_PI);
  CHECK(example_loss(params, tgt, *anchors,
                     LossConfig{LossKind::MultipathHard, 1.0}) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("soft loss with one-hot weights equals the hard loss") {
  const int K = 4, T = 3, input_dim = 6;
  auto anchors = spread_anchors(K, T, 9);
  MlpConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden = {8};
  cfg.K = K;
  cfg.T = T;
  MlpParams params = init_params(cfg, 2);

  ExampleTarget tgt = hand_target(input_dim, K, T, 12, false);
  tgt.hard_index = 2;
  ExampleTarget one_hot = tgt;
  one_hot.soft_weights = Eigen::VectorXd::Zero(K);
  one_hot.soft_weights[2] = 1.0;

  Eigen::VectorXd g_hard, g_soft;
  double hard = example_loss(params, tgt, *anchors,
                             LossConfig{LossKind::MultipathHard, 1.0}, &g_hard);
  double soft = example_loss(params, one_hot, *anchors,
                             LossConfig{LossKind::MultipathSoft, 1.0}, &g_soft);
  CHECK(soft == doctest::Approx(hard).epsilon(1e-14));
  CHECK((g_hard - g_soft).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("regression is the hard loss specialized to a single anchor") {
  const int T = 3, input_dim = 6;
  auto anchors = spread_anchors(1, T, 15);
  MlpConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden = {8};
  cfg.K = 1;
  cfg.T = T;
  MlpParams params = init_params(cfg, 6);
  ExampleTarget tgt = hand_target(input_dim, 1, T, 20, false);
  tgt.hard_index = 0;

  Eigen::VectorXd g_hard, g_reg;
  double hard = example_loss(params, tgt, *anchors,
                             LossConfig{LossKind::MultipathHard, 1.0}, &g_hard);
  double reg = example_loss(params, tgt, *anchors,
                            LossConfig{LossKind::Regression, 1.0}, &g_reg);
  CHECK(reg == doctest::Approx(hard).epsilon(1e-14));
  CHECK((g_hard - g_reg).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("min_of_k: squared-distance value without sigma, NLL with") {
  const int K = 3, T = 3;
  auto anchors = spread_anchors(K, T, 30);
  MlpConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden = {6};
  cfg.K = K;
  cfg.T = T;
  cfg.with_sigma = false;
  MlpParams params = init_params(cfg, 4);
  params.from_flat(Eigen::VectorXd::Zero(params.num_params()));

  ExampleTarget tgt;
  tgt.x = Eigen::VectorXd::Zero(4);
  tgt.canon_future = anchors->anchors[2].points;
  tgt.canon_future.array() += 0.05;  // nearest to anchor 2 by construction
  tgt.hard_index = 0;                // ignored by min-of-k

  double expect = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k)
    expect = std::min(
        expect, (tgt.canon_future - anchors->anchors[k].points).squaredNorm());
  CHECK(example_loss(params, tgt, *anchors,
                     LossConfig{LossKind::MinOfK, 1.0}) ==
        doctest::Approx(expect).epsilon(1e-12));

  // With sigma the same mode is scored by its Gaussian NLL instead.
  cfg.with_sigma = true;
  MlpParams params_s = init_params(cfg, 4);
  params_s.from_flat(Eigen::VectorXd::Zero(params_s.num_params()));
  double nll = 0.0;
  for (int t = 0; t < T; ++t)
    nll -= step_log_density(GaussianParams2D{},
                            Point2(anchors->anchors[2].points.row(t)),
                            Point2(tgt.canon_future.row(t)));
  CHECK(example_loss(params_s, tgt, *anchors,
                     LossConfig{LossKind::MinOfK, 1.0}) ==
        doctest::Approx(std::log(3.0) + nll).epsilon(1e-12));
}

TEST_CASE("batch_loss averages and reports the offending example") {
  const int K = 2, T = 2, input_dim = 4;
  auto anchors = spread_anchors(K, T, 50);
  MlpConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden = {5};
  cfg.K = K;
  cfg.T = T;
  MlpParams params = init_params(cfg, 3);

  std::vector<ExampleTarget> targets{hand_target(input_dim, K, T, 1, false),
                                     hand_target(input_dim, K, T, 2, false)};
  LossConfig loss{LossKind::MultipathHard, 1.0};
  double a = example_loss(params, targets[0], *anchors, loss);
  double b = example_loss(params, targets[1], *anchors, loss);
  std::vector<std::size_t> ids{0, 1};
  Eigen::VectorXd grad;
  CHECK(batch_loss(params, targets, ids, *anchors, loss, &grad) ==
        doctest::Approx(0.5 * (a + b)).epsilon(1e-14));

  // Gradient is the mean of per-example gradients.
  Eigen::VectorXd ga, gb;
  example_loss(params, targets[0], *anchors, loss, &ga);
  example_loss(params, targets[1], *anchors, loss, &gb);
  CHECK((grad - 0.5 * (ga + gb)).cwiseAbs().maxCoeff() < 1e-14);

  std::vector<std::size_t> none;
  CHECK_THROWS_AS(batch_loss(params, targets, none, *anchors, loss),
                  std::invalid_argument);

  targets[1].x[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    batch_loss(params, targets, ids, *anchors, loss);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("example 1") != std::string::npos);
  }
}

TEST_CASE("lr schedule: linear warmup then cosine to exactly zero") {
  TrainConfig cfg;
  cfg.total_steps = 100;
  cfg.warmup_fraction = 0.05;  // 5 warmup steps
  cfg.lr_peak = 2e-3;

  CHECK(lr_schedule(cfg, 0) == doctest::Approx(2e-3 / 5.0));
  CHECK(lr_schedule(cfg, 3) == doctest::Approx(2e-3 * 4.0 / 5.0));
  CHECK(lr_schedule(cfg, 4) == doctest::Approx(2e-3));  // end of warmup
  CHECK(lr_schedule(cfg, 5) == doctest::Approx(2e-3));  // cos(0)
  CHECK(lr_schedule(cfg, 99) == doctest::Approx(0.0).epsilon(1e-18));
  // Halfway through the decay the cosine sits at half the peak.
  CHECK(lr_schedule(cfg, 52) == doctest::Approx(1e-3).epsilon(1e-6));
  for (int s = 6; s < 100; ++s)
    CHECK(lr_schedule(cfg, s) <= lr_schedule(cfg, s - 1) + 1e-18);
  CHECK_THROWS_AS(lr_schedule(cfg, -1), std::invalid_argument);
  CHECK_THROWS_AS(lr_schedule(cfg, 100), std::invalid_argument);
}

namespace {

ToyConfig tiny_toy() {
  ToyConfig cfg;
  cfg.n = 96;
  cfg.T = 4;
  cfg.H = 3;
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("train is bit-deterministic and reduces the loss") {
  ToyConfig toy = tiny_toy();
  std::vector<ToyScene> scenes = generate_dataset(toy);
  std::vector<Trajectory> futures;
  std::vector<Pose> poses;
  for (const auto& s : scenes) {
    futures.push_back(s.future);
    poses.push_back(s.history.pose);
  }
  auto anchors = std::make_shared<AnchorSet>(
      kmeans_anchors(futures, poses, 3, 5).anchors);

  TrainConfig cfg;
  cfg.loss = LossKind::MultipathHard;
  cfg.hidden = {8};
  cfg.batch_size = 16;
  cfg.total_steps = 60;
  cfg.lr_peak = 5e-3;
  cfg.seed = 9;

  TrainResult a = train(cfg, scenes, anchors);
  TrainResult b = train(cfg, scenes, anchors);
  CHECK((a.params.to_flat() - b.params.to_flat()).cwiseAbs().maxCoeff() ==
        0.0);
  REQUIRE(a.log.size() == 60);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].loss == b.log[i].loss);
    CHECK(a.log[i].lr == lr_schedule(cfg, static_cast<int>(i)));
    CHECK(a.log[i].step == static_cast<int>(i));
  }

  // Averaged late loss sits below averaged early loss.
  auto window = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a.log[i].loss;
    return s / static_cast<double>(hi - lo);
  };
  CHECK(window(50, 60) < window(0, 10));

  // A different seed lands elsewhere.
  TrainConfig other = cfg;
  other.seed = 10;
  CHECK((train(other, scenes, anchors).params.to_flat() - a.params.to_flat())
            .cwiseAbs()
            .maxCoeff() > 0.0);

  TrainConfig bad = cfg;
  bad.loss = LossKind::Regression;
  CHECK_THROWS_AS(train(bad, scenes, anchors), std::invalid_argument);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(bad, scenes, anchors), std::invalid_argument);
  std::vector<ToyScene> empty;
  CHECK_THROWS_AS(train(cfg, empty, anchors), std::invalid_argument);
}

TEST_CASE("linear baseline: exact lines, degenerate histories, OLS oracle") {
  // Points exactly on a line are recovered and extrapolated exactly.
  const double dt = 0.4;
  Point2 a(1.0, -2.0), b(0.7, 0.3);
  Waypoints pts(5, 2);
  for (int i = 0; i < 5; ++i) {
    double t = (i - 4) * dt;
    pts.row(i) = (a + b * t).transpose();
  }
  PastHistory hist{pts, make_pose(Point2(0, 0), 0.0)};
  LinearFit fit = linear_fit(hist, dt);
  CHECK((fit.intercept - a).norm() < 1e-12);
  CHECK((fit.slope - b).norm() < 1e-12);
  Trajectory pred = linear_predict(fit, 3, dt);
  REQUIRE(pred.length() == 3);
  CHECK(pred.dt == dt);
  for (int j = 0; j < 3; ++j)
    CHECK((Point2(pred.points.row(j)) - (a + b * dt * (j + 1))).norm() <
          1e-12);

  // Constant history: zero slope. Single point: intercept only.
  Waypoints flat = Waypoints::Constant(4, 2, 3.5);
  LinearFit cfit = linear_fit({flat, hist.pose}, dt);
  CHECK(cfit.slope.norm() == 0.0);
  CHECK((cfit.intercept - Point2(3.5, 3.5)).norm() < 1e-12);
  Waypoints one(1, 2);
  one << 2.0, -1.0;
  LinearFit sfit = linear_fit({one, hist.pose}, dt);
  CHECK(sfit.slope.norm() == 0.0);
  CHECK((sfit.intercept - Point2(2.0, -1.0)).norm() < 1e-12);

  // Normal-equations oracle on noisy data.
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Waypoints noisy(6, 2);
  for (int i = 0; i < 6; ++i) noisy.row(i) << u(rng), u(rng);
  LinearFit nfit = linear_fit({noisy, hist.pose}, dt);
  Eigen::MatrixXd A(6, 2);
  for (int i = 0; i < 6; ++i) A.row(i) << 1.0, (i - 5) * dt;
  Eigen::MatrixXd sol =
      (A.transpose() * A).ldlt().solve(A.transpose() * noisy);
  CHECK(std::abs(nfit.intercept.x() - sol(0, 0)) < 1e-10);
  CHECK(std::abs(nfit.intercept.y() - sol(0, 1)) < 1e-10);
  CHECK(std::abs(nfit.slope.x() - sol(1, 0)) < 1e-10);
  CHECK(std::abs(nfit.slope.y() - sol(1, 1)) < 1e-10);

  CHECK_THROWS_AS(linear_fit({Waypoints(0, 2), hist.pose}, dt),
                  std::invalid_argument);
  CHECK_THROWS_AS(linear_fit(hist, 0.0), std::invalid_argument);
}

TEST_CASE("predict attaches the history frame; zero params mean uniform") {
  ToyConfig toy = tiny_toy();
  ToyScene scene = sample_scene(toy, 123);
  auto anchors = spread_anchors(3, toy.T, 2);

  MlpConfig cfg;
  cfg.input_dim = feature_dim(toy.H);
  cfg.hidden = {8};
  cfg.K = 3;
  cfg.T = toy.T;
  MlpParams params = init_params(cfg, 1);
  params.from_flat(Eigen::VectorXd::Zero(params.num_params()));

  TrajectoryMixture mix = predict(params, scene.history, anchors);
  CHECK((mix.frame.position - scene.history.pose.position).norm() == 0.0);
  CHECK(mix.frame.heading == scene.history.pose.heading);
  Eigen::VectorXd w = mixture_weights(mix);
  for (int k = 0; k < 3; ++k)
    CHECK(w[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(mix.params.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("make_target mirrors features, canonicalization and assignment") {
  ToyConfig toy = tiny_toy();
  ToyScene scene = sample_scene(toy, 5);
  std::vector<ToyScene> scenes = generate_dataset(toy);
  std::vector<Trajectory> futures;
  std::vector<Pose> poses;
  for (const auto& s : scenes) {
    futures.push_back(s.future);
    poses.push_back(s.history.pose);
  }
  AnchorSet anchors = kmeans_anchors(futures, poses, 3, 5).anchors;

  LossConfig hard{LossKind::MultipathHard, 1.0};
  ExampleTarget tgt = make_target(scene, anchors, hard);
  CHECK((tgt.x - features(scene.history, toy.dt)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((tgt.canon_future -
         to_agent_frame(scene.future.points, scene.history.pose))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(tgt.hard_index ==
        assign_anchor(scene.future, scene.history.pose, anchors).index);
  CHECK(tgt.soft_weights.size() == 0);

  LossConfig soft{LossKind::MultipathSoft, 2.0};
  ExampleTarget stgt = make_target(scene, anchors, soft);
  Eigen::VectorXd expect =
      soft_assign(scene.future, scene.history.pose, anchors, 2.0);
  CHECK((stgt.soft_weights - expect).cwiseAbs().maxCoeff() < 1e-15);
}

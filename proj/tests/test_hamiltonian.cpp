#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "szz/diagnostics.hpp"
#include "szz/hamiltonian_zigzag.hpp"
#include "szz/model.hpp"
#include "szz/oracles.hpp"
#include "szz/random.hpp"

namespace {

// gram ~ 1e-6 and a huge slab make the force essentially the constant +1
szz::SpikeSlabModel constant_force_model() {
  Eigen::MatrixXd design(1, 1);
  design << 0.001;
  Eigen::VectorXd response(1);
  response << -1000.0;  // xty = -1, so the gradient is 1e-6 x + 1
  return szz::SpikeSlabModel(design, response, 1.0, 0.5, 1e12);
}

// posterior precision 1 + 1e-12: a standard normal target to float accuracy
szz::SpikeSlabModel standard_normal_model() {
  Eigen::MatrixXd design(1, 1);
  design << 1.0;
  Eigen::VectorXd response = Eigen::VectorXd::Zero(1);
  return szz::SpikeSlabModel(design, response, 1.0, 0.5, 1e12);
}

szz::SpikeSlabModel random_sparse_model(unsigned seed) {
  szz::Rng rng(seed);
  const int n = 40, p = 10;
  Eigen::MatrixXd design(n, p);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < p; ++c) design(r, c) = rng.normal() / std::sqrt(double(n));
  }
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(p);
  truth[1] = 0.8;
  truth[4] = -0.6;
  Eigen::VectorXd response = design * truth;
  for (int r = 0; r < n; ++r) response[r] += 0.5 * rng.normal();
  return szz::SpikeSlabModel(design, response, 0.25, 0.25, 2.0);
}

// unit-information 1-d model with a universe of width sqrt(2*pi)
szz::SpikeSlabModel null_model_for_walls() {
  Eigen::MatrixXd design(1, 1);
  design << 1.0;
  Eigen::VectorXd response = Eigen::VectorXd::Zero(1);
  return szz::SpikeSlabModel(design, response, 1.0, 0.5, 1.0);
}

// weak diagonal design, slab density 1 at zero, slab_prob 1/4: width exactly 3
szz::SpikeSlabModel two_coordinate_model() {
  Eigen::MatrixXd design(2, 2);
  design << 0.2, 0.0, 0.0, 0.2;
  Eigen::VectorXd response = Eigen::VectorXd::Zero(2);
  return szz::SpikeSlabModel(design, response, 1.0, 0.25, 1.0 / 6.283185307179586);
}

szz::HzzState state_1d(double position, double momentum) {
  szz::HzzState state;
  state.position = Eigen::VectorXd::Constant(1, position);
  state.momentum = Eigen::VectorXd::Constant(1, momentum);
  return state;
}

}  // namespace

TEST_CASE("constant force flips the velocity at the momentum zero") {
  const auto model = constant_force_model();
  const auto geometry = szz::LatentGeometry::flat();

  // p(t) = 1 - t to within 1e-6 corrections: flip near t = 1 at x near 1,
  // then the trajectory retraces itself.
  const auto mid = szz::integrate(model, geometry, state_1d(0.0, 1.0), 1.5);
  CHECK(mid.position[0] == Catch::Approx(0.5).margin(1e-4));
  CHECK(mid.momentum[0] == Catch::Approx(-0.5).margin(1e-4));

  const auto out = szz::integrate(model, geometry, state_1d(0.0, 1.0), 2.0);
  CHECK(out.position[0] == Catch::Approx(0.0).margin(1e-4));
  CHECK(out.momentum[0] == Catch::Approx(-1.0).margin(1e-4));
  CHECK(out.clock == Catch::Approx(2.0));

  const szz::HzzState start = state_1d(0.0, 1.0);
  const double drift = std::abs(szz::hzz_energy(model, geometry, out) -
                                szz::hzz_energy(model, geometry, start));
  CHECK(drift <= 1e-7);
}

TEST_CASE("quadratic momentum path returns to the start after a full cycle") {
  const auto model = standard_normal_model();
  const auto geometry = szz::LatentGeometry::flat();
  const double root2 = std::sqrt(2.0);

  // From (x, p) = (0, 1): p(t) = 1 - t²/2, so the first flip is at √2 with
  // the position at √2; the phase point recurs with period 4√2.
  const auto quarter = szz::integrate(model, geometry, state_1d(0.0, 1.0), root2);
  CHECK(quarter.position[0] == Catch::Approx(root2).margin(1e-6));
  CHECK(std::abs(quarter.momentum[0]) <= 1e-6);

  const auto cycle = szz::integrate(model, geometry, state_1d(0.0, 1.0), 4.0 * root2);
  CHECK(cycle.position[0] == Catch::Approx(0.0).margin(1e-6));
  CHECK(cycle.momentum[0] == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("universe walls leave the momentum untouched") {
  const auto model = null_model_for_walls();
  const auto geometry = szz::LatentGeometry(model);
  const double half = geometry.half_extent;

  // Large momentum, heading into the universe: the coordinate crosses both
  // walls without a flip, so the position moves at exactly unit speed the
  // whole way and the momentum only changes while outside.
  const double duration = 1.0 + 2.0 * half + 0.25;
  const szz::HzzState start = state_1d(half + 1.0, -5.0);
  const auto out = szz::integrate(model, geometry, start, duration);

  CHECK(out.position[0] == Catch::Approx(-half - 0.25).margin(1e-9));
  CHECK(out.momentum[0] < -3.0);  // no flip happened
  const double drift = std::abs(szz::hzz_energy(model, geometry, out) -
                                szz::hzz_energy(model, geometry, start));
  CHECK(drift <= 1e-10);
}

TEST_CASE("energy is conserved over long sparse-model flows") {
  const auto model = random_sparse_model(909001);
  const auto geometry = szz::LatentGeometry(model);
  szz::Rng rng(909002);
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(model.dim());
  truth[1] = 0.8;
  truth[4] = -0.6;
  szz::HzzState state = szz::make_hzz_state(model, geometry, truth, rng);

  const double reference = szz::hzz_energy(model, geometry, state);
  double worst = 0.0;
  for (int leg = 0; leg < 10; ++leg) {
    state = szz::integrate(model, geometry, state, 10.0);
    worst = std::max(worst, std::abs(szz::hzz_energy(model, geometry, state) - reference));
  }
  CHECK(worst <= 1e-8);
  CHECK(state.clock == Catch::Approx(100.0));
}

TEST_CASE("the flow is reversible") {
  const auto model = random_sparse_model(909003);
  const auto geometry = szz::LatentGeometry(model);
  szz::Rng rng(909004);
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(model.dim());
  truth[1] = 0.8;
  truth[4] = -0.6;
  const szz::HzzState start = szz::make_hzz_state(model, geometry, truth, rng);

  auto forward = szz::integrate(model, geometry, start, 7.3);
  forward.momentum = -forward.momentum;
  auto back = szz::integrate(model, geometry, forward, 7.3);
  back.momentum = -back.momentum;

  CHECK((back.position - start.position).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((back.momentum - start.momentum).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("refresh draws new momenta only outside the universes") {
  const auto model = two_coordinate_model();
  const auto geometry = szz::LatentGeometry(model);
  REQUIRE(geometry.half_extent > 1.0);

  szz::HzzState state;
  state.position.resize(2);
  state.momentum.resize(2);
  state.position << 0.5, geometry.half_extent + 4.0;  // inside, outside
  state.momentum << 0.625, -1.75;

  const szz::TravelRange tiny{1e-9, 2e-9};
  szz::Rng rng(777001), mirror(777001);
  const auto next = szz::step(model, geometry, state, tiny, rng);

  // the inside coordinate is force-free and keeps its exact momentum
  CHECK(next.momentum[0] == 0.625);
  // the outside coordinate got the first Laplace draw, then drifted O(1e-9)
  const double draw = mirror.laplace();
  const double travel = mirror.uniform(tiny.lo, tiny.hi);
  CHECK(next.momentum[1] == Catch::Approx(draw).margin(1e-6));
  CHECK(next.momentum[1] != -1.75);
  CHECK(next.clock == Catch::Approx(travel).epsilon(1e-12));
}

TEST_CASE("flat geometry refreshes every coordinate") {
  const auto model = two_coordinate_model();
  const auto geometry = szz::LatentGeometry::flat();

  szz::HzzState state;
  state.position.resize(2);
  state.momentum.resize(2);
  state.position << 0.5, 4.0;
  state.momentum << 0.625, -1.75;

  const szz::TravelRange tiny{1e-9, 2e-9};
  szz::Rng rng(777002), mirror(777002);
  const auto next = szz::step(model, geometry, state, tiny, rng);
  const double first = mirror.laplace();
  const double second = mirror.laplace();
  CHECK(next.momentum[0] == Catch::Approx(first).margin(1e-6));
  CHECK(next.momentum[1] == Catch::Approx(second).margin(1e-6));
}

TEST_CASE("chains are reproducible and validated") {
  const auto model = random_sparse_model(909005);
  const auto geometry = szz::LatentGeometry(model);
  szz::Rng rng(909006);
  const auto start = szz::make_hzz_state(model, geometry, Eigen::VectorXd::Zero(model.dim()), rng);

  const szz::TravelRange travel{2.0, 6.0};
  const auto first = szz::run_chain(model, geometry, start, 40, travel, 424242);
  const auto second = szz::run_chain(model, geometry, start, 40, travel, 424242);
  REQUIRE(first.samples.rows() == 40);
  REQUIRE(first.samples.cols() == model.dim());
  CHECK((first.samples.array() == second.samples.array()).all());
  CHECK((first.samples.row(39).transpose() -
         szz::collapse(first.final_state.position, geometry)).cwiseAbs().maxCoeff() == 0.0);

  const auto other = szz::run_chain(model, geometry, start, 40, travel, 424243);
  CHECK_FALSE((first.samples.array() == other.samples.array()).all());

  CHECK_THROWS_AS(szz::run_chain(model, geometry, start, 0, travel, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(szz::step(model, geometry, start, szz::TravelRange{0.0, 1.0}, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(szz::step(model, geometry, start, szz::TravelRange{3.0, 2.0}, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(szz::integrate(model, szz::LatentGeometry(model, 0.5), start, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(szz::integrate(model, geometry, start, 0.0), std::invalid_argument);
}

TEST_CASE("a tiny event cap reports a cascade") {
  const auto model = standard_normal_model();
  const auto geometry = szz::LatentGeometry::flat();
  szz::HzzLimits limits;
  limits.max_events = 3;
  CHECK_THROWS_AS(szz::integrate(model, geometry, state_1d(0.0, 1.0), 50.0, limits),
                  std::runtime_error);
}

TEST_CASE("chain inclusion frequency matches the conjugate posterior") {
  szz::Rng data_rng(515001);
  const int n = 15;
  Eigen::MatrixXd design(n, 1);
  for (int r = 0; r < n; ++r) design(r, 0) = data_rng.normal();
  Eigen::VectorXd response = 0.35 * design.col(0);
  for (int r = 0; r < n; ++r) response[r] += data_rng.normal();
  const szz::SpikeSlabModel model(design, response, 1.0, 0.25, 1.0);
  const szz::LatentGeometry geometry(model);

  const std::vector<double> g(design.col(0).begin(), design.col(0).end());
  const std::vector<double> y(response.begin(), response.end());
  const double oracle = szz::inclusion_probability_1d(g, y, 1.0, 0.25, 1.0);

  szz::Rng rng(515002);
  const auto start =
      szz::make_hzz_state(model, geometry, Eigen::VectorXd::Constant(1, 0.35), rng);
  const long n_iter = 30000, burn = 500;
  const auto run = szz::run_chain(model, geometry, start, n_iter, szz::TravelRange{2.0, 6.0}, 515003);

  long included = 0;
  for (long iter = burn; iter < n_iter; ++iter) {
    if (run.samples(iter, 0) != 0.0) ++included;
  }
  const double kept = double(n_iter - burn);
  const double frequency = double(included) / kept;
  // conservative effective-sample floor: successive draws decorrelate within
  // a few travel segments
  const double se = std::sqrt(oracle * (1.0 - oracle) / (kept / 4.0));
  CHECK(std::abs(frequency - oracle) <= 3.0 * se + 0.01);
}

TEST_CASE("flat-geometry chains reproduce Gaussian posterior moments") {
  Eigen::MatrixXd design(3, 2);
  design << 1.0, 0.4, 0.0, 1.2, 0.7, -0.3;
  Eigen::VectorXd response(3);
  response << 1.0, -0.5, 0.25;
  const szz::SpikeSlabModel model(design, response, 0.5, 0.5, 2.0);
  const auto geometry = szz::LatentGeometry::flat();

  // exact Gaussian posterior: precision = gram/noise_var + I/slab_var
  const Eigen::MatrixXd precision =
      model.gram / model.noise_var + Eigen::MatrixXd::Identity(2, 2) / model.slab_var;
  const Eigen::VectorXd mean = precision.ldlt().solve(model.xty / model.noise_var);
  const Eigen::MatrixXd covariance = precision.inverse();

  szz::Rng rng(616001);
  auto start = szz::make_hzz_state(model, geometry, mean, rng);
  const long n_iter = 20000;
  const auto run = szz::run_chain(model, geometry, start, n_iter, szz::TravelRange{2.0, 6.0}, 616002);

  for (int i = 0; i < 2; ++i) {
    std::vector<double> column(run.samples.col(i).begin(), run.samples.col(i).end());
    const double ess = szz::ess(column);
    REQUIRE(ess > 100.0);
    const double estimate = run.samples.col(i).mean();
    const double se = std::sqrt(covariance(i, i) / ess);
    CHECK(std::abs(estimate - mean[i]) <= 3.0 * se + 1e-3);

    const double second = run.samples.col(i).array().square().mean();
    const double target = covariance(i, i) + mean[i] * mean[i];
    CHECK(std::abs(second - target) <= 4.0 * se * std::sqrt(target) + 5e-3);
  }
}

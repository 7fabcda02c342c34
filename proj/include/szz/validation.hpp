#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "szz/data.hpp"
#include "szz/diagnostics.hpp"
#include "szz/experiment.hpp"
#include "szz/hamiltonian_zigzag.hpp"
#include "szz/latent_zigzag.hpp"
#include "szz/model.hpp"
#include "szz/oracles.hpp"
#include "szz/random.hpp"
#include "szz/sticky_zigzag.hpp"
#include "szz/trajectory.hpp"

namespace szz {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string fmt(double value, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << value;
  return out.str();
}

inline SpikeSlabModel one_dim_null_model() {
  Eigen::MatrixXd design(1, 1);
  design << 1.0;
  Eigen::VectorXd response = Eigen::VectorXd::Zero(1);
  return SpikeSlabModel(design, response, 1.0, 0.5, 1.0);  // width sqrt(2*pi)
}

inline SpikeSlabModel width_two_model() {
  Eigen::MatrixXd design(2, 1);
  design << 0.2, 0.2;
  Eigen::VectorXd response = Eigen::VectorXd::Zero(2);
  return SpikeSlabModel(design, response, 1.0, 1.0 / 3.0, 1.0 / 6.283185307179586);
}

inline LatentState validation_latent_start(const LatentGeometry& geometry, double position,
                                           double velocity) {
  LatentState state;
  state.position = Eigen::VectorXd::Constant(1, position);
  state.velocity = Eigen::VectorXd::Constant(1, velocity);
  (void)geometry;
  return state;
}

}  // namespace detail

// 1. The leave-probability series against its Dirichlet Monte Carlo
//    counterpart, plus the large-m exponential limit.
inline CriterionResult criterion_series_vs_monte_carlo() {
  CriterionResult result{1, "series matches dirichlet monte carlo", false, "", 0.0};
  double worst_z = 0.0;
  bool ok = true;
  std::uint64_t seed = 110001;
  for (double s : {0.5, 1.0}) {
    for (int m : {1, 5, 20}) {
      const double series = lemma1_series(s, 1.0, m);
      const auto mc = dirichlet_mc(s, 1.0, m, 1'000'000, seed++);
      const double z = std::abs(series - mc.estimate) / mc.standard_error;
      worst_z = std::max(worst_z, z);
      ok = ok && z <= 3.0;
    }
  }
  const double limit_gap = std::abs(lemma1_series(1.0, 1.0, 200) - std::exp(-1.0));
  ok = ok && limit_gap <= 0.01;
  result.pass = ok;
  result.detail = "worst |z| " + detail::fmt(worst_z) + " (<= 3), limit gap " +
                  detail::fmt(limit_gap) + " (<= 0.01)";
  return result;
}

// 2. Sticking durations of the original sampler are exponential with mean w.
inline CriterionResult criterion_exponential_sticking() {
  CriterionResult result{2, "exponential sticking durations", false, "", 0.0};
  const auto model = detail::one_dim_null_model();
  const LatentGeometry geometry(model);

  EngineOptions options;
  options.horizon = 60000.0;
  options.seed = 220001;
  Rng init(220002);
  const auto start = make_sticky_state(Eigen::VectorXd::Constant(1, 1.0), init);
  const auto run = simulate_sticky(model, geometry, start, options);
  auto durations = sticking_durations(run.trajectory).durations;
  if (durations.size() < 10000) {
    result.detail = "only " + std::to_string(durations.size()) + " durations";
    return result;
  }
  durations.resize(10000);
  const auto gof = ks_exponential(durations, geometry.width, 0.01);
  result.pass = gof.pass;
  result.detail = "KS " + detail::fmt(gof.statistic) + " vs threshold " +
                  detail::fmt(gof.threshold) + " at n 10000";
  return result;
}

// 3. At unit scale with no refresh, every latent sojourn is the deterministic
//    traversal time w.
inline CriterionResult criterion_deterministic_sticking() {
  CriterionResult result{3, "deterministic sticking at unit scale", false, "", 0.0};
  const auto model = detail::width_two_model();
  const LatentGeometry geometry(model);

  EngineOptions options;
  options.horizon = 3000.0;
  options.seed = 330001;
  const auto run = simulate_latent(model, geometry,
                                   detail::validation_latent_start(geometry, -2.0, 1.0), options);
  const auto visits = sticking_durations(run.latent);
  double worst = 0.0;
  for (double duration : visits.durations) {
    worst = std::max(worst, std::abs(duration - geometry.scale * geometry.width));
  }
  result.pass = visits.durations.size() >= 100 && worst <= 1e-9;
  result.detail = std::to_string(visits.durations.size()) + " sojourns, worst |gap| " +
                  detail::fmt(worst) + " (<= 1e-9)";
  return result;
}

// 4. Raising the refresh rate drives the sojourn law toward Exp(w): the KS
//    distance decreases along r in {1, 10, 100}/w for most seeds.
inline CriterionResult criterion_refresh_limit() {
  CriterionResult result{4, "refresh rate drives sojourns toward exponential", false, "", 0.0};
  const auto model = detail::one_dim_null_model();
  const LatentGeometry geometry(model);
  const double w = geometry.width;

  int monotone_seeds = 0;
  const int n_seeds = 5;
  std::string chains;
  for (int k = 0; k < n_seeds; ++k) {
    std::vector<double> distances;
    for (double rate : {1.0 / w, 10.0 / w, 100.0 / w}) {
      EngineOptions options;
      options.horizon = 15000.0;
      options.seed = 440001 + std::uint64_t(k);
      options.stream = std::uint64_t(10.0 * rate * w);
      const auto run =
          simulate_latent(model, geometry, detail::validation_latent_start(geometry, 1.0, 1.0),
                          options, rate);
      auto durations = sticking_durations(run.latent).durations;
      if (durations.size() < 1000) {
        result.detail = "seed " + std::to_string(k) + ": only " +
                        std::to_string(durations.size()) + " sojourns";
        return result;
      }
      durations.resize(1000);
      distances.push_back(ks_exponential(durations, w, 0.01).statistic);
    }
    const bool monotone = distances[0] > distances[1] && distances[1] > distances[2];
    monotone_seeds += monotone ? 1 : 0;
    chains += (chains.empty() ? "" : "; ") + detail::fmt(distances[0], 3) + ">" +
              detail::fmt(distances[1], 3) + ">" + detail::fmt(distances[2], 3) +
              (monotone ? "" : " (not monotone)");
  }
  result.pass = monotone_seeds * 2 > n_seeds;
  result.detail = std::to_string(monotone_seeds) + "/5 seeds monotone: " + chains;
  return result;
}

// 5. All three samplers recover the conjugate 1-d inclusion probability.
inline CriterionResult criterion_conjugate_inclusion() {
  CriterionResult result{5, "conjugate posterior inclusion", false, "", 0.0};
  struct Setting {
    int n;
    double signal;
    double slab_prob;
    std::uint64_t seed;
  };
  const Setting settings[] = {{15, 0.35, 0.25, 550001},
                              {10, 0.0, 0.5, 550002},
                              {25, 0.8, 0.10, 550003}};
  double worst = 0.0;
  bool ok = true;
  std::string notes;
  for (const auto& setting : settings) {
    Rng data_rng(setting.seed);
    Eigen::MatrixXd design(setting.n, 1);
    for (int r = 0; r < setting.n; ++r) design(r, 0) = data_rng.normal();
    Eigen::VectorXd response = setting.signal * design.col(0);
    for (int r = 0; r < setting.n; ++r) response[r] += data_rng.normal();
    const SpikeSlabModel model(design, response, 1.0, setting.slab_prob, 1.0);
    const LatentGeometry geometry(model);

    const std::vector<double> g(design.col(0).begin(), design.col(0).end());
    const std::vector<double> y(response.begin(), response.end());
    const double oracle = inclusion_probability_1d(g, y, 1.0, setting.slab_prob, 1.0);

    const double horizon = 20000.0;
    EngineOptions options;
    options.horizon = horizon;
    options.seed = setting.seed + 10;
    Rng init(setting.seed + 20);
    const auto sticky_run = simulate_sticky(
        model, geometry, make_sticky_state(Eigen::VectorXd::Constant(1, 0.5), init), options);
    const double sticky_est =
        1.0 - time_average(sticky_run.trajectory, Functional::zero_indicator, 0);
    const double sticky_se =
        batch_means(sticky_run.trajectory, 0, Functional::zero_indicator, 40).standard_error;

    options.seed = setting.seed + 30;
    const auto latent_run = simulate_latent(
        model, geometry, detail::validation_latent_start(geometry, geometry.half_extent + 0.5, -1.0),
        options);
    const double latent_est =
        1.0 - time_average(latent_run.collapsed, Functional::zero_indicator, 0);
    const double latent_se =
        batch_means(latent_run.collapsed, 0, Functional::zero_indicator, 40).standard_error;

    Rng hzz_init(setting.seed + 40);
    const auto hzz_start =
        make_hzz_state(model, geometry, Eigen::VectorXd::Constant(1, setting.signal), hzz_init);
    const long n_iter = 20000, burn = 500;
    const auto chain = run_chain(model, geometry, hzz_start, n_iter, TravelRange{2.0, 6.0},
                                 setting.seed + 50);
    long included = 0;
    for (long iter = burn; iter < n_iter; ++iter) {
      if (chain.samples(iter, 0) != 0.0) ++included;
    }
    const double kept = double(n_iter - burn);
    const double hzz_est = double(included) / kept;
    const double hzz_se = std::sqrt(std::max(hzz_est * (1.0 - hzz_est), 0.01) / (kept / 5.0));

    const double gaps[3] = {std::abs(sticky_est - oracle) / (3.0 * sticky_se + 0.01),
                            std::abs(latent_est - oracle) / (3.0 * latent_se + 0.01),
                            std::abs(hzz_est - oracle) / (3.0 * hzz_se + 0.01)};
    for (double gap : gaps) {
      worst = std::max(worst, gap);
      ok = ok && gap <= 1.0;
    }
    notes += (notes.empty() ? "oracle " : "; oracle ") + detail::fmt(oracle, 3) + " est " +
             detail::fmt(sticky_est, 3) + "/" + detail::fmt(latent_est, 3) + "/" +
             detail::fmt(hzz_est, 3);
  }
  result.pass = ok;
  result.detail = "worst normalized gap " + detail::fmt(worst) + " (<= 1): " + notes;
  return result;
}

// 6. The Hamiltonian flow conserves energy to 1e-8 and retraces itself under
//    momentum reversal to 1e-6.
inline CriterionResult criterion_energy_conservation() {
  CriterionResult result{6, "hamiltonian energy conservation and reversibility", false, "", 0.0};
  Rng model_rng(660001);
  const int n = 40, p = 10;
  Eigen::MatrixXd design(n, p);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < p; ++c) design(r, c) = model_rng.normal() / std::sqrt(double(n));
  }
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(p);
  truth[2] = 0.9;
  truth[7] = -0.7;
  Eigen::VectorXd response = design * truth;
  for (int r = 0; r < n; ++r) response[r] += 0.5 * model_rng.normal();
  const SpikeSlabModel model(design, response, 0.25, 0.25, 2.0);
  const LatentGeometry geometry(model);

  Rng rng(660002);
  double worst_energy = 0.0, worst_reverse = 0.0;
  for (int round = 0; round < 1000; ++round) {
    HzzState state;
    state.position.resize(p);
    state.momentum.resize(p);
    for (int i = 0; i < p; ++i) {
      state.position[i] = rng.uniform(-geometry.half_extent - 2.0, geometry.half_extent + 2.0);
      state.momentum[i] = rng.laplace();
    }
    const double duration = rng.uniform(2.0, 6.0);
    const double before = hzz_energy(model, geometry, state);
    const auto forward = integrate(model, geometry, state, duration);
    worst_energy = std::max(worst_energy,
                            std::abs(hzz_energy(model, geometry, forward) - before));
    if (round % 20 == 0) {
      HzzState reversed = forward;
      reversed.momentum = -reversed.momentum;
      auto back = integrate(model, geometry, reversed, duration);
      back.momentum = -back.momentum;
      worst_reverse = std::max(
          worst_reverse,
          std::max((back.position - state.position).cwiseAbs().maxCoeff(),
                   (back.momentum - state.momentum).cwiseAbs().maxCoeff()));
    }
  }
  result.pass = worst_energy <= 1e-8 && worst_reverse <= 1e-6;
  result.detail = "worst |dH| " + detail::fmt(worst_energy) + " (<= 1e-8), worst reversal gap " +
                  detail::fmt(worst_reverse) + " (<= 1e-6) over 1000 flows";
  return result;
}

// 7. Paired across seeds on an independent-coordinate model, the latent
//    sampler's regenerative asymptotic variance for a coordinate mean beats
//    the original's in a clear majority of pairs.
inline CriterionResult criterion_variance_ordering() {
  CriterionResult result{7, "latent variance dominance on orthogonal designs", false, "", 0.0};
  const int p = 5;
  Eigen::MatrixXd design = 1.5 * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(p);
  truth[0] = 0.7;
  Rng data_rng(770001);
  Eigen::VectorXd response = design * truth;
  for (int r = 0; r < p; ++r) response[r] += data_rng.normal();
  const SpikeSlabModel model(design, response, 1.0, 0.3, 1.0);
  const LatentGeometry geometry(model);

  const double x0 = 0.5, v0 = 1.0;
  int wins = 0, pairs = 0;
  std::string failures;
  for (int k = 0; k < 20; ++k) {
    const std::uint64_t seed = 770100 + std::uint64_t(k);
    EngineOptions options;
    options.horizon = 10000.0;
    options.seed = seed;
    options.stream = 0;
    Rng init(seed, 9);
    const auto sticky_run =
        simulate_sticky(model, geometry, initial_sticky_state(geometry, truth, init), options);

    options.stream = 1;
    Rng latent_init(seed, 10);
    const auto latent_run = simulate_latent(
        model, geometry, initial_latent_state(geometry, truth, latent_init), options);

    try {
      const double var_original =
          regenerative_variance(sticky_run.trajectory, 0, x0, v0, Functional::identity);
      const double var_latent =
          regenerative_variance(latent_run.collapsed, 0, x0, v0, Functional::identity);
      ++pairs;
      wins += var_latent < var_original ? 1 : 0;
    } catch (const std::exception& error) {
      failures += std::string(failures.empty() ? "" : "; ") + "pair " + std::to_string(k) +
                  ": " + error.what();
    }
  }
  result.pass = pairs == 20 && wins >= 15;
  result.detail = std::to_string(wins) + "/" + std::to_string(pairs) +
                  " pairs favor latent (need >= 15/20)" +
                  (failures.empty() ? "" : "; " + failures);
  return result;
}

// 8. Desk-scale benchmark: latent min-ESS per unit cost dominates the original
//    across the correlation sweep, and the Hamiltonian sampler leads at the
//    strongest correlation.  Cost is the event count (per-event wall cost is
//    within +-5% across the three engines here, while container wall clocks
//    drift by far more than the inter-sampler margins), so the ordering is
//    reproducible for a fixed seed.  The Hamiltonian travel range was tuned
//    over tau in {4..8} (Unif(tau/2, 3 tau/2)) for overall throughput with the
//    moderate-correlation case as the primary instrument; runs are long enough
//    that every per-run ESS clears 200.
inline CriterionResult criterion_benchmark_ordering() {
  CriterionResult result{8, "benchmark throughput ordering", false, "", 0.0};
  ExperimentConfig base;
  base.n_blocks = 10;
  base.block_size = 20;
  base.n_obs = 200;
  base.n_signals = 10;
  base.slab_prob = 0.01;
  base.snr_target = 0.15;
  base.horizon = 100000.0;
  base.spacing = 2.0;
  base.n_replicates = 5;
  base.seed = 880001;
  base.deterministic_timing = true;

  const auto throughput = [](const ExperimentConfig& config, double& floor) {
    const auto outcome = run_experiment(config);
    for (const auto& replicate : outcome.replicates)
      floor = std::min(floor, replicate.ess_values.minCoeff());
    return outcome.report.ess_per_second;
  };

  bool ok = true;
  std::string notes;
  double ess_floor = std::numeric_limits<double>::infinity();
  double ratio_latent_at_99 = 0.0, ratio_hzz_at_99 = 0.0;
  for (double alpha : {0.5, 0.9, 0.99}) {
    ExperimentConfig config = base;
    config.alpha = alpha;
    config.sampler = SamplerKind::original;
    const double original = throughput(config, ess_floor);
    config.sampler = SamplerKind::latent;
    const double latent = throughput(config, ess_floor);
    ok = ok && latent >= original;
    notes += (notes.empty() ? "alpha " : "; alpha ") + detail::fmt(alpha, 3) + ": latent/original " +
             detail::fmt(latent / original, 3);
    if (alpha == 0.99) {
      ratio_latent_at_99 = latent / original;
      config.sampler = SamplerKind::hamiltonian;
      config.travel_lo = 2.5;
      config.travel_hi = 7.5;
      config.n_iterations = 19200;
      const double hamiltonian = throughput(config, ess_floor);
      ratio_hzz_at_99 = hamiltonian / original;
      notes += ", hamiltonian/original " + detail::fmt(ratio_hzz_at_99, 3);
    }
  }
  ok = ok && ratio_hzz_at_99 > ratio_latent_at_99;
  ok = ok && ess_floor >= 200.0;
  result.pass = ok;
  result.detail = notes + "; per-run ESS floor " + detail::fmt(ess_floor, 1);
  return result;
}

// 9. Scaled universes: the exit-thinning acceptance rate matches the scale,
//    and shrinking the scale recovers the exponential sticking law and a
//    symmetric exit side.
inline CriterionResult criterion_scaled_universes() {
  CriterionResult result{9, "scaled universe acceptance and exit laws", false, "", 0.0};
  const auto model = detail::one_dim_null_model();
  const double w = LatentGeometry(model).width;

  // half-scale: every exit attempt is a fair coin
  const LatentGeometry half_geometry(model, 0.5);
  EngineOptions options;
  options.horizon = 30000.0;
  options.seed = 990001;
  const auto half_run = simulate_latent(
      model, half_geometry,
      detail::validation_latent_start(half_geometry, half_geometry.half_extent + 0.5, -1.0),
      options);
  long exits = 0, rejects = 0;
  for (const auto& event : half_run.latent.events) {
    if (event.kind == TrajEvent::exit) ++exits;
    if (event.kind == TrajEvent::exit_reject) ++rejects;
  }
  const double attempts = double(exits + rejects);
  const double accept_rate = double(exits) / attempts;
  const double accept_se = std::sqrt(0.25 / attempts);
  const bool accept_ok = attempts >= 10000.0 && std::abs(accept_rate - 0.5) <= 3.0 * accept_se;

  auto half_durations = sticking_durations(half_run.latent).durations;

  // scale 0.05: the exit side approaches a fair coin and the sojourn law
  // approaches Exp(w)
  const LatentGeometry small_geometry(model, 0.05);
  options.seed = 990002;
  options.horizon = 30000.0;
  const auto small_run = simulate_latent(
      model, small_geometry,
      detail::validation_latent_start(small_geometry, small_geometry.half_extent + 0.5, -1.0),
      options);
  const auto small_visits = sticking_durations(small_run.latent);
  const long n_side = std::min<long>(4000, small_visits.exits_same_side +
                                               small_visits.exits_opposite_side);
  long opposite = 0, seen = 0;
  {
    // recount on the first n_side completed visits for a fixed-size test
    long same = 0;
    const auto& events = small_run.latent.events;
    double entry_velocity = 0.0;
    bool inside = false;
    for (const auto& event : events) {
      if (seen == n_side) break;
      if (event.kind == TrajEvent::enter) {
        inside = true;
        entry_velocity = event.velocity;
      } else if (event.kind == TrajEvent::exit && inside) {
        inside = false;
        ++seen;
        if (event.velocity == entry_velocity) {
          ++opposite;
        } else {
          ++same;
        }
      }
    }
    (void)same;
  }
  const double side_z = (double(opposite) / double(seen) - 0.5) /
                        std::sqrt(0.25 / double(seen));
  const bool side_ok = seen >= 3000 && std::abs(side_z) <= 2.576;  // two-sided at 0.01

  auto small_durations = small_visits.durations;
  const std::size_t n_ks = std::min<std::size_t>(
      {half_durations.size(), small_durations.size(), std::size_t(2000)});
  half_durations.resize(n_ks);
  small_durations.resize(n_ks);
  const double ks_half = ks_exponential(half_durations, w, 0.01).statistic;
  const double ks_small = ks_exponential(small_durations, w, 0.01).statistic;
  const bool ks_ok = ks_small < ks_half;

  result.pass = accept_ok && side_ok && ks_ok;
  result.detail = "accept rate " + detail::fmt(accept_rate, 3) + " over " +
                  detail::fmt(attempts, 6) + " attempts; exit-side z " + detail::fmt(side_z, 3) +
                  " at n " + std::to_string(seen) + "; KS small/half " + detail::fmt(ks_small, 3) +
                  " < " + detail::fmt(ks_half, 3);
  return result;
}

// 10. The original and latent samplers agree on coordinate means of a shared
//     correlated 5-d posterior.
inline CriterionResult criterion_cross_sampler_agreement() {
  CriterionResult result{10, "cross-sampler agreement", false, "", 0.0};
  Rng data_rng(101001);
  const int n = 30, p = 5;
  Eigen::MatrixXd design(n, p);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < p; ++c) design(r, c) = data_rng.normal() / std::sqrt(double(n));
  }
  Eigen::VectorXd truth(p);
  truth << 0.8, -0.5, 0.0, 0.0, 0.0;
  Eigen::VectorXd response = design * truth;
  for (int r = 0; r < n; ++r) response[r] += 0.7 * data_rng.normal();
  const SpikeSlabModel model(design, response, 0.5, 0.3, 1.0);
  const LatentGeometry geometry(model);

  EngineOptions options;
  options.horizon = 20000.0;
  options.seed = 101002;
  Rng sticky_init(101003);
  const auto sticky_run = simulate_sticky(
      model, geometry, initial_sticky_state(geometry, truth, sticky_init), options);

  options.seed = 101004;
  Rng latent_init(101005);
  const auto latent_run = simulate_latent(
      model, geometry, initial_latent_state(geometry, truth, latent_init), options);

  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < p; ++i) {
    const double mean_original = time_average(sticky_run.trajectory, Functional::identity, i);
    const double mean_latent = time_average(latent_run.collapsed, Functional::identity, i);
    const double se_original =
        batch_means(sticky_run.trajectory, i, Functional::identity, 40).standard_error;
    const double se_latent =
        batch_means(latent_run.collapsed, i, Functional::identity, 40).standard_error;
    const double band =
        3.0 * std::sqrt(se_original * se_original + se_latent * se_latent) + 1e-3;
    const double gap = std::abs(mean_original - mean_latent) / band;
    worst = std::max(worst, gap);
    ok = ok && gap <= 1.0;
  }
  result.pass = ok;
  result.detail = "worst normalized mean gap " + detail::fmt(worst) + " (<= 1) across " +
                  std::to_string(p) + " coordinates";
  return result;
}

// Runs every criterion, or a single one when `only` is a 1-based index.
inline std::vector<CriterionResult> run_acceptance_battery(int only = 0) {
  using Runner = CriterionResult (*)();
  const Runner runners[] = {
      criterion_series_vs_monte_carlo, criterion_exponential_sticking,
      criterion_deterministic_sticking, criterion_refresh_limit,
      criterion_conjugate_inclusion,    criterion_energy_conservation,
      criterion_variance_ordering,      criterion_benchmark_ordering,
      criterion_scaled_universes,       criterion_cross_sampler_agreement};
  std::vector<CriterionResult> results;
  int index = 0;
  for (Runner runner : runners) {
    ++index;
    if (only != 0 && index != only) continue;
    const auto started = std::chrono::steady_clock::now();
    CriterionResult result;
    try {
      result = runner();
    } catch (const std::exception& error) {
      result.index = index;
      result.name = "criterion crashed";
      result.pass = false;
      result.detail = error.what();
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace szz

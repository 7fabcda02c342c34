#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "szz/events.hpp"
#include "szz/model.hpp"
#include "szz/random.hpp"
#include "szz/trajectory.hpp"

namespace szz {

// Hamiltonian zig-zag state on the latent coordinates. Velocity is derived,
// v = sign(p), so only position and momentum are stored.
struct HzzState {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
  double clock = 0.0;
};

struct TravelRange {
  double lo = 2.0;
  double hi = 6.0;
};

struct HzzLimits {
  long max_events = 10'000'000;  // flips + wall crossings per flow segment
  long rebuild_interval = 512;
};

namespace detail {

inline void check_hzz_state(const HzzState& state, Eigen::Index dim) {
  if (state.position.size() != dim || state.momentum.size() != dim) {
    throw std::invalid_argument("state dimension mismatch");
  }
  if (!state.position.allFinite() || !state.momentum.allFinite()) {
    throw std::invalid_argument("non-finite state");
  }
}

inline Eigen::VectorXd collapsed_positions(const LatentGeometry& geometry,
                                           const Eigen::VectorXd& x) {
  if (geometry.is_flat()) return x;
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = collapse_coordinate(x[i], geometry);
  return out;
}

inline Eigen::VectorXd masked_signs(const LatentGeometry& geometry, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& momentum) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool frozen = !geometry.is_flat() && geometry.inside(x[i]);
    out[i] = frozen ? 0.0 : (momentum[i] < 0.0 ? -1.0 : 1.0);
  }
  return out;
}

// Persistent flow state: anchored positions, momenta, derived velocities, the
// frozen set, the incremental gradient, and cached absolute wall-crossing
// times. A chain reuses one instance across travel segments so the quadratic
// gradient setup happens once. Each coordinate moves linearly between its own
// events, so positions are anchored at the coordinate's last event and
// reconstructed on demand, and its wall time is refreshed only there; the
// scheduler reduces over the wall cache and walks only the unfrozen
// coordinates.
class HzzFlow {
 public:
  HzzFlow(const SpikeSlabModel& model, const LatentGeometry& geometry, const HzzState& initial)
      : walls_(!geometry.is_flat()),
        half_(geometry.half_extent),
        thresholds_{-geometry.half_extent, geometry.half_extent},
        anchor_pos_(initial.position),
        anchor_tau_(Eigen::VectorXd::Zero(model.dim())),
        momentum_(initial.momentum),
        velocity_(model.dim()),
        wall_abs_(model.dim()),
        inside_(static_cast<std::size_t>(model.dim()), 0),
        grad_(model, collapsed_positions(geometry, initial.position),
              masked_signs(geometry, initial.position, initial.momentum)) {
    if (walls_ && geometry.scale != 1.0) {
      throw std::invalid_argument("hamiltonian flow supports unit scale only");
    }
    for (Eigen::Index i = 0; i < anchor_pos_.size(); ++i) {
      velocity_[i] = momentum_[i] < 0.0 ? -1.0 : 1.0;
      inside_[static_cast<std::size_t>(i)] = walls_ && geometry.inside(anchor_pos_[i]) ? 1 : 0;
      if (!inside_[static_cast<std::size_t>(i)]) outside_sorted_.push_back(i);
      recompute_wall(i);
    }
  }

  // Advances the flow by duration; the event cap covers this segment only.
  void run(double duration, const HzzLimits& limits) {
    const double end = tau_ + duration;
    const long cap_from = n_events_;
    while (true) {
      EventTime next{end - tau_, EventKind::horizon, -1};
      if (walls_) {
        // strict < keeps the lowest coordinate at exact wall-time ties, so
        // the reduction selects the same event as a per-coordinate scan
        Eigen::Index wall_i = 0;
        double wall_at = wall_abs_[0];
        for (Eigen::Index i = 1; i < wall_abs_.size(); ++i) {
          if (wall_abs_[i] < wall_at) {
            wall_at = wall_abs_[i];
            wall_i = i;
          }
        }
        const EventTime wall{std::max(0.0, wall_at - tau_), EventKind::boundary, int(wall_i)};
        if (sooner(wall, next)) next = wall;
      }
      for (const Eigen::Index i : outside_sorted_) {
        const EventTime flip{
            momentum_zero_time(momentum_[i], grad_.intercept(i), grad_.slope(i)),
            EventKind::bounce, int(i)};
        if (sooner(flip, next)) next = flip;
      }

      const double dt = next.time;
      for (const Eigen::Index i : outside_sorted_) {
        momentum_[i] -= (grad_.intercept(i) + 0.5 * grad_.slope(i) * dt) * dt;
      }
      grad_.advance(dt);
      tau_ += dt;
      if (next.kind == EventKind::horizon) break;

      const Eigen::Index i = next.coordinate;
      const auto c = static_cast<std::size_t>(i);
      if (next.kind == EventKind::bounce) {
        anchor_pos_[i] += velocity_[i] * (tau_ - anchor_tau_[i]);
        anchor_tau_[i] = tau_;
        momentum_[i] = 0.0;
        const double force_origin = grad_.intercept(i);
        double flipped = force_origin > 0.0 ? -1.0 : 1.0;
        if (force_origin == 0.0) flipped = -velocity_[i];
        velocity_[i] = flipped;
        grad_.set_velocity(i, flipped);
      } else {  // wall crossing, momentum continuous
        const double v = velocity_[i];
        anchor_tau_[i] = tau_;
        if (inside_[c]) {
          anchor_pos_[i] = v * half_;
          inside_[c] = 0;
          outside_sorted_.insert(
              std::lower_bound(outside_sorted_.begin(), outside_sorted_.end(), i), i);
          grad_.snap_position(i, 0.0);
          grad_.set_velocity(i, v);
        } else {
          anchor_pos_[i] = -v * half_;
          inside_[c] = 1;
          outside_sorted_.erase(
              std::lower_bound(outside_sorted_.begin(), outside_sorted_.end(), i));
          grad_.snap_position(i, 0.0);
          grad_.set_velocity(i, 0.0);
        }
      }
      recompute_wall(i);
      if (++n_events_ - cap_from > limits.max_events) {
        throw std::runtime_error("event cascade exceeded cap");
      }
      grad_.rebuild_every(limits.rebuild_interval);
    }
  }

  // Momentum redraw between segments; frozen coordinates keep theirs, and the
  // derived velocity, anchor, gradient slope, and wall cache follow a sign
  // change.
  void set_momentum(Eigen::Index i, double value) {
    momentum_[i] = value;
    if (inside_[static_cast<std::size_t>(i)]) return;
    const double v = value < 0.0 ? -1.0 : 1.0;
    if (v != velocity_[i]) {
      anchor_pos_[i] += velocity_[i] * (tau_ - anchor_tau_[i]);
      anchor_tau_[i] = tau_;
      velocity_[i] = v;
      grad_.set_velocity(i, v);
      recompute_wall(i);
    }
  }

  bool frozen(Eigen::Index i) const { return inside_[static_cast<std::size_t>(i)] != 0; }
  double position(Eigen::Index i) const {
    return anchor_pos_[i] + velocity_[i] * (tau_ - anchor_tau_[i]);
  }
  Eigen::VectorXd positions() const {
    Eigen::VectorXd out(anchor_pos_.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = position(i);
    return out;
  }
  const Eigen::VectorXd& momentum() const { return momentum_; }
  long events() const { return n_events_; }

 private:
  // at equal times a wall crossing is processed before a flip
  static bool sooner(const EventTime& x, const EventTime& y) {
    if (x.time != y.time) return x.time < y.time;
    if (x.kind != y.kind) {
      return static_cast<int>(x.kind) > static_cast<int>(y.kind);  // boundary > bounce
    }
    return x.coordinate < y.coordinate;
  }

  void recompute_wall(Eigen::Index i) {
    wall_abs_[i] =
        walls_ ? anchor_tau_[i] + boundary_hit(anchor_pos_[i], velocity_[i], thresholds_)
               : kNever;
  }

  bool walls_;
  double half_;
  double thresholds_[2];
  Eigen::VectorXd anchor_pos_, anchor_tau_, momentum_, velocity_, wall_abs_;
  std::vector<char> inside_;
  std::vector<Eigen::Index> outside_sorted_;
  GradientState grad_;
  double tau_ = 0.0;
  long n_events_ = 0;
};

}  // namespace detail

// Exact Hamiltonian flow for kinetic energy sum |p_i|: positions move at unit
// speed per coordinate, momenta follow p_i(t) = p_i - a_i t - b_i t^2/2 with
// the gradient exactly linear between events. Events are momentum sign
// changes (velocity flips) and universe-wall crossings (silent slope
// changes; momentum passes through unchanged because the density is
// continuous at unit scale). Only unit scale is supported. Deterministic:
// consumes no randomness.
inline HzzState integrate(const SpikeSlabModel& model, const LatentGeometry& geometry,
                          const HzzState& initial, double duration,
                          const HzzLimits& limits = {}, long* event_count = nullptr) {
  detail::check_hzz_state(initial, model.dim());
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  detail::HzzFlow flow(model, geometry, initial);
  flow.run(duration, limits);
  if (event_count != nullptr) *event_count += flow.events();
  HzzState out;
  out.position = flow.positions();
  out.momentum = flow.momentum();
  out.clock = initial.clock + duration;
  return out;
}

// Total energy of the flow; conserved exactly by the continuous dynamics.
inline double hzz_energy(const SpikeSlabModel& model, const LatentGeometry& geometry,
                         const HzzState& state) {
  return latent_potential(model, geometry, state.position) + state.momentum.lpNorm<1>();
}

// One chain iteration: refresh the momenta of every coordinate outside its
// universe (fresh unit Laplace draws, coordinates in transit keep theirs),
// draw a travel time uniformly, and run the exact flow for that long.
inline HzzState step(const SpikeSlabModel& model, const LatentGeometry& geometry,
                     const HzzState& state, const TravelRange& travel, Rng& rng,
                     const HzzLimits& limits = {}, long* event_count = nullptr) {
  if (!(travel.lo > 0.0) || !(travel.hi > travel.lo)) {
    throw std::invalid_argument("travel range needs 0 < lo < hi");
  }
  detail::check_hzz_state(state, model.dim());
  HzzState refreshed = state;
  for (Eigen::Index i = 0; i < model.dim(); ++i) {
    const bool in_universe = !geometry.is_flat() && geometry.inside(state.position[i]);
    if (!in_universe) refreshed.momentum[i] = rng.laplace();
  }
  const double duration = rng.uniform(travel.lo, travel.hi);
  return integrate(model, geometry, refreshed, duration, limits, event_count);
}

struct ChainRun {
  Eigen::MatrixXd samples;  // collapsed positions, one row per iteration
  HzzState final_state;
  long n_events = 0;        // velocity flips plus wall crossings
  double wall_seconds = 0.0;
};

inline ChainRun run_chain(const SpikeSlabModel& model, const LatentGeometry& geometry,
                          const HzzState& initial, long n_iterations,
                          const TravelRange& travel, std::uint64_t seed,
                          std::uint64_t stream = 0, const HzzLimits& limits = {}) {
  if (n_iterations < 1) throw std::invalid_argument("need at least one iteration");
  if (!(travel.lo > 0.0) || !(travel.hi > travel.lo)) {
    throw std::invalid_argument("travel range needs 0 < lo < hi");
  }
  detail::check_hzz_state(initial, model.dim());
  Rng rng(seed, stream);
  detail::HzzFlow flow(model, geometry, initial);
  ChainRun run;
  run.samples.resize(n_iterations, model.dim());
  double elapsed = 0.0;
  const auto started = std::chrono::steady_clock::now();
  for (long iter = 0; iter < n_iterations; ++iter) {
    for (Eigen::Index i = 0; i < model.dim(); ++i) {
      if (!flow.frozen(i)) flow.set_momentum(i, rng.laplace());
    }
    const double duration = rng.uniform(travel.lo, travel.hi);
    flow.run(duration, limits);
    elapsed += duration;
    for (Eigen::Index i = 0; i < model.dim(); ++i) {
      const double x = flow.position(i);
      run.samples(iter, i) = geometry.is_flat() ? x : collapse_coordinate(x, geometry);
    }
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  run.n_events = flow.events();
  run.final_state.position = flow.positions();
  run.final_state.momentum = flow.momentum();
  run.final_state.clock = initial.clock + elapsed;
  return run;
}

// Chain start per the benchmark protocol: coordinates with zero truth start
// uniform inside their universe, signal coordinates at their true value with
// a small Gaussian perturbation; momenta are unit Laplace.
inline HzzState make_hzz_state(const SpikeSlabModel& model, const LatentGeometry& geometry,
                               const Eigen::VectorXd& truth, Rng& rng) {
  if (truth.size() != model.dim()) throw std::invalid_argument("truth dimension mismatch");
  HzzState state;
  state.position.resize(model.dim());
  state.momentum.resize(model.dim());
  for (Eigen::Index i = 0; i < model.dim(); ++i) {
    if (truth[i] == 0.0 && !geometry.is_flat()) {
      state.position[i] = rng.uniform(-geometry.half_extent, geometry.half_extent);
    } else {
      state.position[i] = uncollapse_coordinate(truth[i] + rng.normal(0.0, 0.001), geometry);
    }
    state.momentum[i] = rng.laplace();
  }
  return state;
}

}  // namespace szz

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
#include "szz/sticky_zigzag.hpp"
#include "szz/trajectory.hpp"

namespace szz {

// Latent zig-zag state: every coordinate always moves; coordinates inside
// their universe are the collapsed sampler's stuck coordinates.
struct LatentState {
  Eigen::VectorXd position;  // latent coordinates
  Eigen::VectorXd velocity;
  double clock = 0.0;
};

struct LatentRun {
  Trajectory latent;
  Trajectory collapsed;        // latent log mapped through the collapse
  Eigen::MatrixXd samples;     // collapsed positions on the online grid
  Eigen::VectorXd sample_times;
  long n_events = 0;
  double wall_seconds = 0.0;
};

namespace detail {

inline void check_latent_state(const LatentState& state, Eigen::Index dim) {
  if (state.position.size() != dim || state.velocity.size() != dim) {
    throw std::invalid_argument("state dimension mismatch");
  }
  if (!state.position.allFinite()) throw std::invalid_argument("non-finite position");
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (state.velocity[i] != 1.0 && state.velocity[i] != -1.0) {
      throw std::invalid_argument("velocity entries must be ±1");
    }
  }
}

}  // namespace detail

// Zig-zag on the latent density: plateaus have exactly zero gradient, so
// coordinates cross their universe ballistically; universe walls are silent
// slope changes at scale 1 and thinning barriers otherwise (enter accepted
// with probability min{1, 1/scale}, exit with min{1, scale}, refusal
// reflecting the velocity); an optional rate inside each universe redraws the
// coordinate uniformly across it.
inline LatentRun simulate_latent(const SpikeSlabModel& model, const LatentGeometry& geometry,
                                 const LatentState& initial, const EngineOptions& options,
                                 double refresh_rate = 0.0) {
  const Eigen::Index p = model.dim();
  detail::check_latent_state(initial, p);
  if (!(options.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(refresh_rate >= 0.0) || !std::isfinite(refresh_rate)) {
    throw std::invalid_argument("refresh rate must be nonnegative");
  }
  if (geometry.is_flat()) throw std::invalid_argument("latent sampler needs a spike geometry");
  const double half = geometry.half_extent;
  const double scale = geometry.scale;

  Rng rng(options.seed, options.stream);
  // Each latent coordinate moves linearly between its own events, so instead
  // of advancing a live position vector every event, positions are anchored
  // at the coordinate's last event and reconstructed on demand; the absolute
  // wall-crossing time is cached the same way.
  Eigen::VectorXd anchor_pos = initial.position;
  Eigen::VectorXd anchor_tau = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd velocity = initial.velocity;
  std::vector<char> inside(std::size_t(p), 0);
  Eigen::VectorXd collapsed_start(p), effective(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    inside[std::size_t(i)] = geometry.inside(anchor_pos[i]) ? 1 : 0;
    collapsed_start[i] = collapse_coordinate(anchor_pos[i], geometry);
    effective[i] = inside[std::size_t(i)] ? 0.0 : velocity[i];
  }
  GradientState grad(model, collapsed_start, effective);

  LatentRun run;
  run.latent.space = Space::latent;
  run.latent.horizon = options.horizon;
  run.latent.initial_position = initial.position;
  run.latent.initial_velocity = velocity;
  run.latent.initial_frozen.assign(inside.begin(), inside.end());
  run.latent.events_recorded = options.record_events;
  detail::SampleGrid sample_grid(options.sample_spacing, options.horizon, p);

  const double thresholds[2] = {-half, half};
  double clock = 0.0;
  Eigen::VectorXd wall_abs(p);
  const auto recompute_wall = [&](Eigen::Index i) {
    wall_abs[i] = anchor_tau[i] + boundary_hit(anchor_pos[i], velocity[i], thresholds);
  };
  std::vector<Eigen::Index> outside_sorted;
  for (Eigen::Index i = 0; i < p; ++i) {
    recompute_wall(i);
    if (!inside[std::size_t(i)]) outside_sorted.push_back(i);
  }
  const auto started = std::chrono::steady_clock::now();
  while (true) {
    EventTime next{options.horizon - clock, EventKind::horizon, -1};
    if (refresh_rate > 0.0) {
      // refresh candidates interleave with bounce draws in index order
      for (Eigen::Index i = 0; i < p; ++i) {
        if (!inside[std::size_t(i)]) {
          const double v = velocity[i];
          const double bounce_at =
              first_arrival_linear(v * grad.intercept(i), v * grad.slope(i), rng.exponential());
          const EventTime bounce{bounce_at, EventKind::bounce, int(i)};
          if (earlier(bounce, next)) next = bounce;
        } else {
          const EventTime redraw{rng.exponential() / refresh_rate, EventKind::refresh, int(i)};
          if (earlier(redraw, next)) next = redraw;
        }
        const EventTime wall{std::max(0.0, wall_abs[i] - clock), EventKind::boundary, int(i)};
        if (earlier(wall, next)) next = wall;
      }
    } else {
      // strict < keeps the lowest coordinate at exact wall-time ties, so the
      // reduction selects the same event as the per-coordinate scan
      Eigen::Index wall_i = 0;
      double wall_at = wall_abs[0];
      for (Eigen::Index i = 1; i < p; ++i) {
        if (wall_abs[i] < wall_at) {
          wall_at = wall_abs[i];
          wall_i = i;
        }
      }
      const EventTime wall{std::max(0.0, wall_at - clock), EventKind::boundary, int(wall_i)};
      if (earlier(wall, next)) next = wall;
      for (const Eigen::Index i : outside_sorted) {
        const double v = velocity[i];
        const double bounce_at =
            first_arrival_linear(v * grad.intercept(i), v * grad.slope(i), rng.exponential());
        const EventTime bounce{bounce_at, EventKind::bounce, int(i)};
        if (earlier(bounce, next)) next = bounce;
      }
    }

    sample_grid.sweep(clock, next.time, options.horizon, grad.collapsed(),
                      grad.effective_velocity());
    grad.advance(next.time);
    clock += next.time;
    if (next.kind == EventKind::horizon) break;

    const Eigen::Index i = next.coordinate;
    const auto c = std::size_t(i);
    switch (next.kind) {
      case EventKind::bounce:
        anchor_pos[i] += velocity[i] * (clock - anchor_tau[i]);
        anchor_tau[i] = clock;
        velocity[i] = -velocity[i];
        grad.set_velocity(i, velocity[i]);
        if (options.record_events) {
          run.latent.events.push_back(
              {clock, TrajEvent::bounce, std::int32_t(i), anchor_pos[i], velocity[i]});
        }
        break;
      case EventKind::refresh:
        anchor_pos[i] = rng.uniform(-half, half);
        anchor_tau[i] = clock;
        if (options.record_events) {
          run.latent.events.push_back(
              {clock, TrajEvent::refresh, std::int32_t(i), anchor_pos[i], velocity[i]});
        }
        break;
      case EventKind::boundary: {
        const double v = velocity[i];
        anchor_tau[i] = clock;
        if (inside[c]) {  // exit attempt, accepted with probability min{1, scale}
          const bool accept = scale >= 1.0 || rng.uniform01() < scale;
          anchor_pos[i] = v * half;
          if (accept) {
            inside[c] = 0;
            outside_sorted.insert(
                std::lower_bound(outside_sorted.begin(), outside_sorted.end(), i), i);
            grad.snap_position(i, 0.0);
            grad.set_velocity(i, v);
            if (options.record_events) {
              run.latent.events.push_back(
                  {clock, TrajEvent::exit, std::int32_t(i), anchor_pos[i], v});
            }
          } else {
            velocity[i] = -v;
            if (options.record_events) {
              run.latent.events.push_back(
                  {clock, TrajEvent::exit_reject, std::int32_t(i), anchor_pos[i], -v});
            }
          }
        } else {  // entry attempt, accepted with probability min{1, 1/scale}
          const bool accept = scale <= 1.0 || rng.uniform01() < 1.0 / scale;
          anchor_pos[i] = -v * half;
          grad.snap_position(i, 0.0);
          if (accept) {
            inside[c] = 1;
            outside_sorted.erase(
                std::lower_bound(outside_sorted.begin(), outside_sorted.end(), i));
            grad.set_velocity(i, 0.0);
            if (options.record_events) {
              run.latent.events.push_back(
                  {clock, TrajEvent::enter, std::int32_t(i), anchor_pos[i], v});
            }
          } else {
            velocity[i] = -v;
            grad.set_velocity(i, velocity[i]);
            if (options.record_events) {
              run.latent.events.push_back(
                  {clock, TrajEvent::enter_reject, std::int32_t(i), anchor_pos[i], -v});
            }
          }
        }
        break;
      }
      default:
        throw std::logic_error("unexpected event kind");
    }
    recompute_wall(i);
    if (++run.n_events >= options.max_events) {
      throw std::runtime_error("event cascade exceeded cap");
    }
    grad.rebuild_every(options.rebuild_interval);
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  sample_grid.fill(run);
  if (options.record_events) run.collapsed = collapsed_view(run.latent, geometry);
  return run;
}

// Width-scaled variant; the geometry's scale carries the whole difference and
// scale 1 reduces to simulate_latent exactly.
inline LatentRun simulate_scaled(const SpikeSlabModel& model, const LatentGeometry& geometry,
                                 const LatentState& initial, const EngineOptions& options) {
  return simulate_latent(model, geometry, initial, options, 0.0);
}

}  // namespace szz

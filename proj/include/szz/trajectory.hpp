#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "szz/model.hpp"

namespace szz {

enum class Space { latent, collapsed, discrete_chain };

enum class TrajEvent : std::uint8_t {
  bounce,        // velocity flip of a moving coordinate
  stick,         // collapsed space: coordinate freezes at 0
  unstick,       // collapsed space: coordinate resumes
  enter,         // latent space: accepted crossing into the universe
  exit,          // latent space: accepted crossing out of the universe
  enter_reject,  // latent space: refused entry, velocity reflected
  exit_reject,   // latent space: refused exit, velocity reflected
  refresh        // latent space: position redrawn inside the universe
};

// One coordinate changes per event; position/velocity are the exact
// post-event values, so replay reproduces engine state bit-for-bit without
// needing the geometry.
struct TrajectoryEvent {
  double time = 0.0;
  TrajEvent kind = TrajEvent::bounce;
  std::int32_t coordinate = 0;
  double position = 0.0;
  double velocity = 0.0;
};

struct Trajectory {
  Space space = Space::collapsed;
  double horizon = 0.0;
  Eigen::VectorXd initial_position;
  Eigen::VectorXd initial_velocity;
  std::vector<char> initial_frozen;
  std::vector<TrajectoryEvent> events;
  bool events_recorded = true;  // false when the engine ran with the log off
  Eigen::MatrixXd chain;        // discrete-chain payload; empty otherwise

  Eigen::Index dim() const {
    return space == Space::discrete_chain ? chain.cols() : initial_position.size();
  }
};

namespace detail {

inline void require_replayable(const Trajectory& trajectory) {
  if (trajectory.space == Space::discrete_chain) return;
  if (!(trajectory.horizon > 0.0)) throw std::invalid_argument("empty trajectory");
  if (!trajectory.events_recorded) {
    throw std::invalid_argument("trajectory event log was not recorded");
  }
}

// Walks the piecewise-linear path. visit(t0, dt, x, v, frozen) sees the exact
// state over [t0, t0+dt); frozen coordinates are pinned in collapsed space and
// keep moving in latent space.
template <typename Visitor>
void replay(const Trajectory& trajectory, Visitor&& visit) {
  require_replayable(trajectory);
  Eigen::VectorXd x = trajectory.initial_position;
  Eigen::VectorXd v = trajectory.initial_velocity;
  std::vector<char> frozen = trajectory.initial_frozen;
  const bool pin_frozen = trajectory.space == Space::collapsed;
  double t = 0.0;
  auto advance = [&](double dt) {
    if (dt <= 0.0) return;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!pin_frozen || !frozen[std::size_t(i)]) x[i] += v[i] * dt;
    }
  };
  for (const TrajectoryEvent& event : trajectory.events) {
    const double dt = event.time - t;
    if (dt < 0.0) throw std::invalid_argument("event times must be nondecreasing");
    visit(t, dt, x, v, frozen);
    advance(dt);
    const auto c = std::size_t(event.coordinate);
    x[event.coordinate] = event.position;
    v[event.coordinate] = event.velocity;
    switch (event.kind) {
      case TrajEvent::stick:
      case TrajEvent::enter:
        frozen[c] = true;
        break;
      case TrajEvent::unstick:
      case TrajEvent::exit:
        frozen[c] = false;
        break;
      default:
        break;
    }
    t = event.time;
  }
  visit(t, trajectory.horizon - t, x, v, frozen);
}

}  // namespace detail

// Collapsed-space view of a latent trajectory: universes map to the spike, so
// entries become sticks, exits become unsticks, refused entries become
// reflections at 0, and everything that happens strictly inside a universe
// disappears.
inline Trajectory collapsed_view(const Trajectory& latent, const LatentGeometry& geometry) {
  if (latent.space != Space::latent) throw std::invalid_argument("collapsed_view needs a latent trajectory");
  detail::require_replayable(latent);
  Trajectory out;
  out.space = Space::collapsed;
  out.horizon = latent.horizon;
  out.initial_position = collapse(latent.initial_position, geometry);
  out.initial_velocity = latent.initial_velocity;
  out.initial_frozen.assign(std::size_t(latent.initial_position.size()), 0);
  for (Eigen::Index i = 0; i < latent.initial_position.size(); ++i) {
    out.initial_frozen[std::size_t(i)] = geometry.inside(latent.initial_position[i]) ? 1 : 0;
  }
  out.events.reserve(latent.events.size());
  for (const TrajectoryEvent& event : latent.events) {
    TrajectoryEvent mapped = event;
    mapped.position = collapse_coordinate(event.position, geometry);
    switch (event.kind) {
      case TrajEvent::bounce:
        out.events.push_back(mapped);
        break;
      case TrajEvent::enter:
        mapped.kind = TrajEvent::stick;
        out.events.push_back(mapped);
        break;
      case TrajEvent::exit:
        mapped.kind = TrajEvent::unstick;
        out.events.push_back(mapped);
        break;
      case TrajEvent::enter_reject:
        mapped.kind = TrajEvent::bounce;
        out.events.push_back(mapped);
        break;
      case TrajEvent::exit_reject:
      case TrajEvent::refresh:
        break;  // invisible through the collapse map
      default:
        throw std::invalid_argument("latent trajectory holds a collapsed-space event");
    }
  }
  return out;
}

enum class Functional { identity, square, zero_indicator };

// Exact closed-form time average of the functional applied to one coordinate.
inline double time_average(const Trajectory& trajectory, Functional functional,
                           Eigen::Index coordinate) {
  if (trajectory.space == Space::discrete_chain) {
    if (trajectory.chain.rows() == 0) throw std::invalid_argument("empty trajectory");
    const auto column = trajectory.chain.col(coordinate);
    switch (functional) {
      case Functional::identity:
        return column.mean();
      case Functional::square:
        return column.array().square().mean();
      case Functional::zero_indicator:
        return (column.array() == 0.0).cast<double>().mean();
    }
    throw std::logic_error("unhandled functional");
  }
  if (!(trajectory.horizon > 0.0)) throw std::invalid_argument("empty trajectory");
  double integral = 0.0;
  detail::replay(trajectory, [&](double, double dt, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& v, const std::vector<char>& frozen) {
    if (dt <= 0.0) return;
    const bool pinned = trajectory.space == Space::collapsed && frozen[std::size_t(coordinate)];
    const double x0 = x[coordinate];
    const double vel = pinned ? 0.0 : v[coordinate];
    switch (functional) {
      case Functional::identity:
        integral += x0 * dt + 0.5 * vel * dt * dt;
        break;
      case Functional::square:
        integral += x0 * x0 * dt + x0 * vel * dt * dt + vel * vel * dt * dt * dt / 3.0;
        break;
      case Functional::zero_indicator:
        if (pinned && x0 == 0.0) integral += dt;
        break;
    }
  });
  return integral / trajectory.horizon;
}

struct SampleSet {
  Eigen::VectorXd times;
  Eigen::MatrixXd values;  // one row per retained sample
  bool spacing_exceeds_horizon = false;
};

// Positions at times 0, spacing, 2·spacing, ... ≤ horizon, reconstructed from
// the event log exactly. For discrete chains the spacing counts rows.
inline SampleSet extract_samples(const Trajectory& trajectory, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
  SampleSet out;
  if (trajectory.space == Space::discrete_chain) {
    const Eigen::Index rows = trajectory.chain.rows();
    if (rows == 0) throw std::invalid_argument("empty trajectory");
    std::vector<Eigen::Index> keep;
    for (double t = 0.0; std::llround(t) < rows; t += spacing) keep.push_back(std::llround(t));
    out.times.resize(Eigen::Index(keep.size()));
    out.values.resize(Eigen::Index(keep.size()), trajectory.chain.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      out.times[Eigen::Index(k)] = double(keep[k]);
      out.values.row(Eigen::Index(k)) = trajectory.chain.row(keep[k]);
    }
    out.spacing_exceeds_horizon = spacing > double(rows - 1) && rows > 0;
    return out;
  }
  detail::require_replayable(trajectory);
  const double tolerance = trajectory.horizon * 1e-12;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> times;
  long next = 0;
  detail::replay(trajectory, [&](double t0, double dt, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& v, const std::vector<char>& frozen) {
    const double end = t0 + dt;
    while (true) {
      const double grid = double(next) * spacing;
      if (grid > trajectory.horizon + tolerance) break;
      if (grid > end + tolerance) break;
      // grid point inside [t0, end]
      Eigen::VectorXd row = x;
      const double offset = grid - t0;
      if (offset > 0.0) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          const bool pinned = trajectory.space == Space::collapsed && frozen[std::size_t(i)];
          if (!pinned) row[i] += v[i] * offset;
        }
      }
      rows.push_back(std::move(row));
      times.push_back(grid);
      ++next;
    }
  });
  out.times.resize(Eigen::Index(times.size()));
  out.values.resize(Eigen::Index(rows.size()), trajectory.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.times[Eigen::Index(k)] = times[k];
    out.values.row(Eigen::Index(k)) = rows[k];
  }
  out.spacing_exceeds_horizon = spacing > trajectory.horizon;
  return out;
}

struct StickingSummary {
  std::vector<double> durations;    // completed visits to the spike, in order
  std::vector<int> coordinates;     // which coordinate each visit belongs to
  long exits_same_side = 0;         // latent trajectories: exit vs entry side
  long exits_opposite_side = 0;
};

// Completed spike visits: stick→unstick pairs in collapsed space, enter→exit
// pairs in latent space. Visits truncated by the horizon or begun before time
// zero are dropped. Exit sides compare the exit velocity with the entry
// velocity: an unchanged velocity leaves on the opposite side it entered from.
inline StickingSummary sticking_durations(const Trajectory& trajectory) {
  if (trajectory.space == Space::discrete_chain) {
    throw std::invalid_argument("sticking durations need an event trajectory");
  }
  detail::require_replayable(trajectory);
  const Eigen::Index p = trajectory.dim();
  std::vector<double> start_time(std::size_t(p), -1.0);
  std::vector<double> entry_velocity(std::size_t(p), 0.0);
  StickingSummary out;
  for (const TrajectoryEvent& event : trajectory.events) {
    const auto c = std::size_t(event.coordinate);
    switch (event.kind) {
      case TrajEvent::stick:
      case TrajEvent::enter:
        start_time[c] = event.time;
        entry_velocity[c] = event.velocity;
        break;
      case TrajEvent::unstick:
      case TrajEvent::exit:
        if (start_time[c] >= 0.0) {
          out.durations.push_back(event.time - start_time[c]);
          out.coordinates.push_back(event.coordinate);
          if (event.velocity == entry_velocity[c]) {
            ++out.exits_opposite_side;
          } else {
            ++out.exits_same_side;
          }
          start_time[c] = -1.0;
        }
        break;
      default:
        break;
    }
  }
  if (out.durations.empty()) throw std::invalid_argument("no completed spike visits in trajectory");
  return out;
}

}  // namespace szz

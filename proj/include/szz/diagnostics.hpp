#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "szz/trajectory.hpp"

namespace szz {

// Effective sample size n / (1 + 2 sum of autocorrelations), truncated by the
// initial monotone positive sequence rule: lag pairs are summed while each
// pair stays positive and nonincreasing.
inline double ess(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw std::invalid_argument("series too short for ess");
  double mean = 0.0;
  for (double value : series) mean += value;
  mean /= double(n);
  std::vector<double> centered(n);
  for (std::size_t t = 0; t < n; ++t) centered[t] = series[t] - mean;
  auto autocovariance = [&](std::size_t lag) {
    if (lag >= n) return 0.0;
    double sum = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) sum += centered[t] * centered[t + lag];
    return sum / double(n);
  };
  const double variance = autocovariance(0);
  if (!(variance > 0.0)) throw std::invalid_argument("series has zero variance");
  double pair_sum = 0.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0;; ++k) {
    const double pair =
        (autocovariance(2 * k) + autocovariance(2 * k + 1)) / variance;
    if (pair <= 0.0) break;
    const double clipped = std::min(pair, previous_pair);
    pair_sum += clipped;
    previous_pair = clipped;
    if (2 * k + 1 >= n - 1) break;
  }
  const double act = std::max(2.0 * pair_sum - 1.0, 1.0 / double(n));
  return double(n) / act;
}

struct EssReport {
  std::vector<std::string> names;
  Eigen::VectorXd ess_values;
  double min_ess = 0.0;
  double median_ess = 0.0;
  double wall_seconds = 0.0;
  double ess_per_second = 0.0;
};

inline EssReport make_ess_report(std::vector<std::string> names,
                                 const Eigen::VectorXd& ess_values,
                                 double wall_seconds) {
  if (ess_values.size() == 0 || std::size_t(ess_values.size()) != names.size()) {
    throw std::invalid_argument("ess report needs matching names and values");
  }
  if (!(wall_seconds > 0.0)) throw std::invalid_argument("wall time must be positive");
  EssReport report;
  report.names = std::move(names);
  report.ess_values = ess_values;
  std::vector<double> sorted(ess_values.data(), ess_values.data() + ess_values.size());
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.front() > 0.0)) throw std::invalid_argument("ess values must be positive");
  report.min_ess = sorted.front();
  const std::size_t m = sorted.size();
  report.median_ess = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  report.wall_seconds = wall_seconds;
  report.ess_per_second = report.min_ess / wall_seconds;
  return report;
}

struct StatisticSet {
  std::vector<std::string> names;
  Eigen::MatrixXd series;  // one column per statistic, one row per sample
};

// Benchmark statistics: the raw sample path of every signal coordinate, plus
// per block the sum of squares of its noise coordinates (their individual
// paths sit mostly at zero, so the block sum is the stable summary).
inline StatisticSet statistic_set(const Eigen::MatrixXd& samples,
                                  const std::vector<int>& true_nonzero,
                                  const std::vector<std::vector<int>>& blocks) {
  const Eigen::Index p = samples.cols();
  if (samples.rows() == 0) throw std::invalid_argument("no samples");
  std::vector<char> is_signal(std::size_t(p), 0);
  for (int index : true_nonzero) {
    if (index < 0 || index >= p) throw std::invalid_argument("signal index out of range");
    is_signal[std::size_t(index)] = 1;
  }
  StatisticSet out;
  out.series.resize(samples.rows(), Eigen::Index(true_nonzero.size() + blocks.size()));
  Eigen::Index column = 0;
  for (int index : true_nonzero) {
    out.names.push_back("coef_" + std::to_string(index));
    out.series.col(column++) = samples.col(index);
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) throw std::invalid_argument("empty block");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(samples.rows());
    for (int index : blocks[b]) {
      if (index < 0 || index >= p) throw std::invalid_argument("block index out of range");
      if (is_signal[std::size_t(index)]) continue;
      sum += samples.col(index).array().square().matrix();
    }
    out.names.push_back("block_" + std::to_string(b) + "_zero_sq");
    out.series.col(column++) = sum;
  }
  return out;
}

namespace detail {

inline double segment_integral(double x0, double velocity, double length,
                               Functional functional, bool pinned) {
  if (length <= 0.0) return 0.0;
  const double vel = pinned ? 0.0 : velocity;
  switch (functional) {
    case Functional::identity:
      return x0 * length + 0.5 * vel * length * length;
    case Functional::square:
      return x0 * x0 * length + x0 * vel * length * length +
             vel * vel * length * length * length / 3.0;
    case Functional::zero_indicator:
      return (pinned && x0 == 0.0) ? length : 0.0;
  }
  throw std::logic_error("unhandled functional");
}

}  // namespace detail

// Times at which the coordinate passes level x0 moving with velocity v0.
inline std::vector<double> regeneration_times(const Trajectory& trajectory,
                                              Eigen::Index coordinate, double x0, double v0) {
  if (x0 == 0.0) throw std::invalid_argument("regeneration level must avoid the spike");
  if (v0 != 1.0 && v0 != -1.0) throw std::invalid_argument("regeneration velocity must be +-1");
  std::vector<double> times;
  detail::replay(trajectory, [&](double t0, double dt, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& v, const std::vector<char>& frozen) {
    const bool pinned =
        trajectory.space == Space::collapsed && frozen[std::size_t(coordinate)];
    const double vel = pinned ? 0.0 : v[coordinate];
    if (dt <= 0.0 || vel != v0) return;
    const double offset = (x0 - x[coordinate]) / v0;
    if (offset >= 0.0 && offset < dt) {
      const double when = t0 + offset;
      if (times.empty() || when > times.back()) times.push_back(when);
    }
  });
  return times;
}

// Asymptotic variance from regeneration cycles: every crossing of the atom
// (x0, v0) starts an independent, identically distributed tour, so the
// variance of the centered cycle integral divided by the mean cycle length
// estimates the variance rate of the time average.
inline double regenerative_variance(const Trajectory& trajectory, Eigen::Index coordinate,
                                    double x0, double v0, Functional functional) {
  if (x0 == 0.0) throw std::invalid_argument("regeneration level must avoid the spike");
  if (v0 != 1.0 && v0 != -1.0) throw std::invalid_argument("regeneration velocity must be +-1");
  if (trajectory.space == Space::discrete_chain) {
    throw std::invalid_argument("regenerative variance needs an event trajectory");
  }
  std::vector<double> crossing_times;
  std::vector<double> crossing_integrals;
  double cumulative = 0.0;
  detail::replay(trajectory, [&](double t0, double dt, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& v, const std::vector<char>& frozen) {
    const bool pinned =
        trajectory.space == Space::collapsed && frozen[std::size_t(coordinate)];
    const double start = x[coordinate];
    const double vel = pinned ? 0.0 : v[coordinate];
    if (dt > 0.0 && vel == v0) {
      const double offset = (x0 - start) / v0;
      if (offset >= 0.0 && offset < dt) {
        const double when = t0 + offset;
        if (crossing_times.empty() || when > crossing_times.back()) {
          crossing_times.push_back(when);
          crossing_integrals.push_back(
              cumulative + detail::segment_integral(start, vel, offset, functional, pinned));
        }
      }
    }
    cumulative += detail::segment_integral(start, vel, dt, functional, pinned);
  });
  if (crossing_times.size() < 31) throw std::invalid_argument("too few regenerations");
  const std::size_t cycles = crossing_times.size() - 1;
  double total_time = 0.0;
  double total_integral = 0.0;
  for (std::size_t j = 0; j < cycles; ++j) {
    total_time += crossing_times[j + 1] - crossing_times[j];
    total_integral += crossing_integrals[j + 1] - crossing_integrals[j];
  }
  const double mu = total_integral / total_time;
  const double tau = total_time / double(cycles);
  double sum_sq = 0.0;
  for (std::size_t j = 0; j < cycles; ++j) {
    const double centered = (crossing_integrals[j + 1] - crossing_integrals[j]) -
                            mu * (crossing_times[j + 1] - crossing_times[j]);
    sum_sq += centered * centered;
  }
  return sum_sq / (double(cycles - 1) * tau);
}

struct BatchMeans {
  double mean = 0.0;
  double variance_rate = 0.0;   // estimated asymptotic variance of the time average
  double standard_error = 0.0;  // for the full-horizon mean
};

// Splits the horizon into equal batches and scales the spread of batch
// averages by the batch length; an independent estimator of the same variance
// rate the regenerative method targets.
inline BatchMeans batch_means(const Trajectory& trajectory, Eigen::Index coordinate,
                              Functional functional, int n_batches) {
  if (n_batches < 2) throw std::invalid_argument("need at least two batches");
  if (trajectory.space == Space::discrete_chain) {
    throw std::invalid_argument("batch means needs an event trajectory");
  }
  detail::require_replayable(trajectory);
  const double length = trajectory.horizon / double(n_batches);
  std::vector<double> batch_integral(std::size_t(n_batches), 0.0);
  detail::replay(trajectory, [&](double t0, double dt, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& v, const std::vector<char>& frozen) {
    if (dt <= 0.0) return;
    const bool pinned =
        trajectory.space == Space::collapsed && frozen[std::size_t(coordinate)];
    const double start = x[coordinate];
    const double vel = pinned ? 0.0 : v[coordinate];
    double cursor = t0;
    const double end = t0 + dt;
    while (cursor < end) {
      int batch = std::min(int(cursor / length), n_batches - 1);
      const double boundary = std::min(end, double(batch + 1) * length);
      const double piece = boundary - cursor;
      if (piece > 0.0) {
        const double x_here = start + vel * (cursor - t0);
        batch_integral[std::size_t(batch)] +=
            detail::segment_integral(x_here, vel, piece, functional, pinned);
      }
      if (boundary >= end) break;
      cursor = boundary;
    }
  });
  BatchMeans out;
  double grand = 0.0;
  for (double value : batch_integral) grand += value;
  out.mean = grand / trajectory.horizon;
  double sum_sq = 0.0;
  for (double value : batch_integral) {
    const double batch_mean = value / length;
    sum_sq += (batch_mean - out.mean) * (batch_mean - out.mean);
  }
  const double mean_spread = sum_sq / double(n_batches - 1);
  out.variance_rate = length * mean_spread;
  out.standard_error = std::sqrt(mean_spread / double(n_batches));
  return out;
}

}  // namespace szz

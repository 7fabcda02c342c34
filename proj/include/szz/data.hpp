#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "szz/model.hpp"
#include "szz/random.hpp"

namespace szz {

enum class SamplerKind { original, latent, hamiltonian };

inline const char* sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::original: return "original";
    case SamplerKind::latent: return "latent";
    case SamplerKind::hamiltonian: return "hamiltonian";
  }
  throw std::logic_error("unknown sampler kind");
}

inline SamplerKind sampler_from_name(const std::string& name) {
  if (name == "original") return SamplerKind::original;
  if (name == "latent") return SamplerKind::latent;
  if (name == "hamiltonian") return SamplerKind::hamiltonian;
  throw std::invalid_argument("unknown sampler: " + name);
}

// Benchmark configuration: a block-correlated synthetic regression plus the
// sampler settings used on it. Defaults are the desk-scale benchmark shape.
struct ExperimentConfig {
  // data
  double alpha = 0.9;           // within-block AR(1) correlation, in [0, 1)
  int n_blocks = 10;
  int block_size = 20;
  int n_obs = 200;
  double noise_var = 1.0;       // used verbatim when snr_target == 0
  double snr_target = 0.15;     // > 0: calibrate noise_var to var(Gx)/var(y)
  double slab_prob = 0.01;
  double slab_var = 1.0;
  int n_signals = 10;
  double signal_magnitude = 1.0;
  // sampler
  SamplerKind sampler = SamplerKind::original;
  double horizon = 2000.0;      // trajectory samplers
  long n_iterations = 1000;     // hamiltonian chain length
  double spacing = 2.0;         // retained-sample grid for trajectory samplers
  double travel_lo = 2.0;
  double travel_hi = 6.0;
  double refresh_rate = 0.0;
  double scale_c = 1.0;
  std::uint64_t seed = 1;
  int n_replicates = 3;
  bool deterministic_timing = false;  // cost = events/1e6 instead of wall clock

  int dim() const { return n_blocks * block_size; }

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("invalid config field: alpha");
    if (n_blocks < 1) throw std::invalid_argument("invalid config field: n_blocks");
    if (block_size < 1) throw std::invalid_argument("invalid config field: block_size");
    if (n_obs < 2) throw std::invalid_argument("invalid config field: n_obs");
    if (!(noise_var > 0.0)) throw std::invalid_argument("invalid config field: noise_var");
    if (!(snr_target >= 0.0 && snr_target < 1.0)) {
      throw std::invalid_argument("invalid config field: snr_target");
    }
    if (!(slab_prob > 0.0 && slab_prob < 1.0)) {
      throw std::invalid_argument("invalid config field: slab_prob");
    }
    if (!(slab_var > 0.0)) throw std::invalid_argument("invalid config field: slab_var");
    if (n_signals < 0 || n_signals > dim()) {
      throw std::invalid_argument("invalid config field: n_signals");
    }
    if (!(signal_magnitude > 0.0)) {
      throw std::invalid_argument("invalid config field: signal_magnitude");
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("invalid config field: horizon");
    if (n_iterations < 1) throw std::invalid_argument("invalid config field: n_iterations");
    if (!(spacing > 0.0)) throw std::invalid_argument("invalid config field: spacing");
    if (!(travel_lo > 0.0) || !(travel_hi > travel_lo)) {
      throw std::invalid_argument("invalid config field: travel range");
    }
    if (!(refresh_rate >= 0.0)) throw std::invalid_argument("invalid config field: refresh_rate");
    if (!(scale_c > 0.0)) throw std::invalid_argument("invalid config field: scale_c");
    if (n_replicates < 1) throw std::invalid_argument("invalid config field: n_replicates");
  }
};

struct Dataset {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  Eigen::VectorXd true_coefficients;   // exactly n_signals entries at ±magnitude
  std::vector<int> block_assignment;   // coordinate -> block index
  double noise_var = 1.0;              // value actually used (post-calibration)
  double snr = 0.0;                    // realized var(Gx)/var(y)

  std::vector<int> signal_indices() const {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < true_coefficients.size(); ++i) {
      if (true_coefficients[i] != 0.0) out.push_back(int(i));
    }
    return out;
  }

  std::vector<std::vector<int>> blocks() const {
    int n_blocks = 0;
    for (int b : block_assignment) n_blocks = std::max(n_blocks, b + 1);
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n_blocks));
    for (std::size_t i = 0; i < block_assignment.size(); ++i) {
      out[std::size_t(block_assignment[i])].push_back(int(i));
    }
    return out;
  }
};

namespace detail {

inline double centered_variance(const Eigen::VectorXd& values) {
  const double mean = values.mean();
  return (values.array() - mean).square().sum() / double(values.size() - 1);
}

}  // namespace detail

// Pure function of (config, seed). Predictors have unit marginal variance with
// AR(1) correlation alpha along each block and independence across blocks;
// signal coordinates are drawn without replacement with random signs. When
// snr_target > 0 the noise variance is set so the realized signal fraction of
// the response variance hits the target.
inline Dataset generate_data(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int p = config.dim();
  const int n = config.n_obs;

  Dataset data;
  data.design.resize(n, p);
  data.block_assignment.resize(std::size_t(p));
  const double innovation = std::sqrt(1.0 - config.alpha * config.alpha);
  for (int row = 0; row < n; ++row) {
    for (int block = 0; block < config.n_blocks; ++block) {
      double previous = 0.0;
      for (int k = 0; k < config.block_size; ++k) {
        const int column = block * config.block_size + k;
        const double draw = rng.normal();
        const double value = (k == 0) ? draw : config.alpha * previous + innovation * draw;
        data.design(row, column) = value;
        previous = value;
        if (row == 0) data.block_assignment[std::size_t(column)] = block;
      }
    }
  }

  // partial Fisher-Yates: the first n_signals slots of a shuffled index list
  std::vector<int> order(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) order[std::size_t(i)] = i;
  for (int i = 0; i < config.n_signals; ++i) {
    const int j = i + int(rng.below(std::uint64_t(p - i)));
    std::swap(order[std::size_t(i)], order[std::size_t(j)]);
  }
  data.true_coefficients = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < config.n_signals; ++i) {
    data.true_coefficients[order[std::size_t(i)]] = config.signal_magnitude * rng.rademacher();
  }

  const Eigen::VectorXd signal = data.design * data.true_coefficients;
  const double signal_var = config.n_signals > 0 ? detail::centered_variance(signal) : 0.0;
  data.noise_var = config.noise_var;
  if (config.snr_target > 0.0 && signal_var > 0.0) {
    data.noise_var = signal_var * (1.0 - config.snr_target) / config.snr_target;
  }

  data.response = signal;
  const double noise_sd = std::sqrt(data.noise_var);
  for (int row = 0; row < n; ++row) data.response[row] += noise_sd * rng.normal();
  data.snr = signal_var > 0.0 ? signal_var / detail::centered_variance(data.response) : 0.0;
  return data;
}

inline SpikeSlabModel model_from(const Dataset& data, const ExperimentConfig& config) {
  return SpikeSlabModel(data.design, data.response, data.noise_var, config.slab_prob,
                        config.slab_var);
}

}  // namespace szz

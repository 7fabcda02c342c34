#pragma once

#include <json.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "szz/data.hpp"
#include "szz/diagnostics.hpp"
#include "szz/hamiltonian_zigzag.hpp"
#include "szz/latent_zigzag.hpp"
#include "szz/model.hpp"
#include "szz/random.hpp"
#include "szz/sticky_zigzag.hpp"

namespace szz {

// Chain start for the original sampler: true-zero coordinates begin stuck at
// the spike with a fresh exponential wake-up clock; signal coordinates begin
// near their true value. One position draw then one velocity draw per
// coordinate, so the stream is reproducible.
inline StickyState initial_sticky_state(const LatentGeometry& geometry,
                                        const Eigen::VectorXd& truth, Rng& rng) {
  const Eigen::Index p = truth.size();
  StickyState state;
  state.position.resize(p);
  state.velocity.resize(p);
  state.stuck.assign(std::size_t(p), 0);
  state.unstick_time.assign(std::size_t(p), 0.0);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (truth[i] == 0.0) {
      state.position[i] = 0.0;
      state.stuck[std::size_t(i)] = 1;
      state.unstick_time[std::size_t(i)] = rng.exponential(geometry.width);
    } else {
      state.position[i] = truth[i] + rng.normal(0.0, 0.001);
    }
    state.velocity[i] = rng.rademacher();
  }
  return state;
}

// Latent-sampler start: true zeros uniform inside their universe, signal
// coordinates just outside at the shifted true value.
inline LatentState initial_latent_state(const LatentGeometry& geometry,
                                        const Eigen::VectorXd& truth, Rng& rng) {
  const Eigen::Index p = truth.size();
  LatentState state;
  state.position.resize(p);
  state.velocity.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (truth[i] == 0.0) {
      state.position[i] = rng.uniform(-geometry.half_extent, geometry.half_extent);
    } else {
      state.position[i] = uncollapse_coordinate(truth[i] + rng.normal(0.0, 0.001), geometry);
    }
    state.velocity[i] = rng.rademacher();
  }
  return state;
}

struct ReplicateOutcome {
  Eigen::VectorXd sample_times;
  StatisticSet statistics;
  Eigen::VectorXd ess_values;
  long n_events = 0;
  double wall_seconds = 0.0;
  double cost_seconds = 0.0;  // wall clock, or events/1e6 under deterministic timing
};

struct ExperimentResult {
  ExperimentConfig config;
  Dataset dataset;
  std::vector<ReplicateOutcome> replicates;
  EssReport report;  // per-statistic ESS averaged over replicates
};

namespace detail {

inline ReplicateOutcome run_replicate(const SpikeSlabModel& model, const Dataset& dataset,
                                      const ExperimentConfig& config, int replicate) {
  Rng init_rng(config.seed, 1'000'000 + std::uint64_t(replicate));
  ReplicateOutcome out;
  Eigen::MatrixXd samples;

  if (config.sampler == SamplerKind::hamiltonian) {
    const LatentGeometry geometry(model);
    const HzzState start = make_hzz_state(model, geometry, dataset.true_coefficients, init_rng);
    const TravelRange travel{config.travel_lo, config.travel_hi};
    const auto run = run_chain(model, geometry, start, config.n_iterations, travel, config.seed,
                               std::uint64_t(replicate));
    samples = run.samples;
    out.sample_times.resize(run.samples.rows());
    for (Eigen::Index k = 0; k < run.samples.rows(); ++k) out.sample_times[k] = double(k);
    out.n_events = run.n_events;
    out.wall_seconds = run.wall_seconds;
  } else {
    EngineOptions options;
    options.horizon = config.horizon;
    options.seed = config.seed;
    options.stream = std::uint64_t(replicate);
    options.record_events = false;
    options.sample_spacing = config.spacing;
    if (config.sampler == SamplerKind::original) {
      const LatentGeometry geometry(model);
      const auto start = initial_sticky_state(geometry, dataset.true_coefficients, init_rng);
      const auto run = simulate_sticky(model, geometry, start, options);
      samples = run.samples;
      out.sample_times = run.sample_times;
      out.n_events = run.n_events;
      out.wall_seconds = run.wall_seconds;
    } else {
      const LatentGeometry geometry(model, config.scale_c);
      const auto start = initial_latent_state(geometry, dataset.true_coefficients, init_rng);
      const auto run = simulate_latent(model, geometry, start, options, config.refresh_rate);
      samples = run.samples;
      out.sample_times = run.sample_times;
      out.n_events = run.n_events;
      out.wall_seconds = run.wall_seconds;
    }
  }

  out.statistics = statistic_set(samples, dataset.signal_indices(), dataset.blocks());
  out.ess_values.resize(out.statistics.series.cols());
  for (Eigen::Index s = 0; s < out.statistics.series.cols(); ++s) {
    const Eigen::VectorXd column = out.statistics.series.col(s);
    try {
      out.ess_values[s] = ess(std::span<const double>(column.data(), std::size_t(column.size())));
    } catch (const std::exception& error) {
      throw std::runtime_error("statistic " + out.statistics.names[std::size_t(s)] + ": " +
                               error.what());
    }
  }
  out.cost_seconds = config.deterministic_timing ? double(out.n_events) / 1e6
                                                 : std::max(out.wall_seconds, 1e-9);
  return out;
}

}  // namespace detail

// Full benchmark pass: one dataset, n_replicates independent chains, the
// signal/block statistic set, and ESS-per-cost averaged over replicates.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.dataset = generate_data(config, config.seed);
  const SpikeSlabModel model = model_from(result.dataset, config);

  Eigen::VectorXd mean_ess;
  double mean_cost = 0.0;
  for (int r = 0; r < config.n_replicates; ++r) {
    try {
      result.replicates.push_back(detail::run_replicate(model, result.dataset, config, r));
    } catch (const std::exception& error) {
      throw std::runtime_error("replicate " + std::to_string(r) + ": " + error.what());
    }
    const auto& outcome = result.replicates.back();
    if (mean_ess.size() == 0) mean_ess = Eigen::VectorXd::Zero(outcome.ess_values.size());
    mean_ess += outcome.ess_values;
    mean_cost += outcome.cost_seconds;
  }
  mean_ess /= double(config.n_replicates);
  mean_cost /= double(config.n_replicates);
  result.report =
      make_ess_report(result.replicates.front().statistics.names, mean_ess, mean_cost);
  return result;
}

// ---------------------------------------------------------------------------
// Configuration and report serialization.

namespace detail {

template <typename T>
void read_field(const nlohmann::json& source, const char* key, T& out) {
  if (!source.contains(key)) return;
  try {
    out = source.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("invalid config field: ") + key);
  }
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& config) {
  return nlohmann::json{{"alpha", config.alpha},
                        {"n_blocks", config.n_blocks},
                        {"block_size", config.block_size},
                        {"n_obs", config.n_obs},
                        {"noise_var", config.noise_var},
                        {"snr_target", config.snr_target},
                        {"slab_prob", config.slab_prob},
                        {"slab_var", config.slab_var},
                        {"n_signals", config.n_signals},
                        {"signal_magnitude", config.signal_magnitude},
                        {"sampler", sampler_name(config.sampler)},
                        {"horizon", config.horizon},
                        {"n_iterations", config.n_iterations},
                        {"spacing", config.spacing},
                        {"travel_lo", config.travel_lo},
                        {"travel_hi", config.travel_hi},
                        {"refresh_rate", config.refresh_rate},
                        {"scale_c", config.scale_c},
                        {"seed", config.seed},
                        {"n_replicates", config.n_replicates},
                        {"deterministic_timing", config.deterministic_timing}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& source) {
  if (!source.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::set<std::string> known{
      "alpha",      "n_blocks",     "block_size",       "n_obs",
      "noise_var",  "snr_target",   "slab_prob",        "slab_var",
      "n_signals",  "signal_magnitude", "sampler",      "horizon",
      "n_iterations", "spacing",    "travel_lo",        "travel_hi",
      "refresh_rate", "scale_c",    "seed",             "n_replicates",
      "deterministic_timing"};
  for (const auto& item : source.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("unknown config field: " + item.key());
    }
  }
  if (!source.contains("sampler")) {
    throw std::invalid_argument("missing config field: sampler");
  }
  ExperimentConfig config;
  std::string sampler;
  detail::read_field(source, "sampler", sampler);
  config.sampler = sampler_from_name(sampler);
  detail::read_field(source, "alpha", config.alpha);
  detail::read_field(source, "n_blocks", config.n_blocks);
  detail::read_field(source, "block_size", config.block_size);
  detail::read_field(source, "n_obs", config.n_obs);
  detail::read_field(source, "noise_var", config.noise_var);
  detail::read_field(source, "snr_target", config.snr_target);
  detail::read_field(source, "slab_prob", config.slab_prob);
  detail::read_field(source, "slab_var", config.slab_var);
  detail::read_field(source, "n_signals", config.n_signals);
  detail::read_field(source, "signal_magnitude", config.signal_magnitude);
  detail::read_field(source, "horizon", config.horizon);
  detail::read_field(source, "n_iterations", config.n_iterations);
  detail::read_field(source, "spacing", config.spacing);
  detail::read_field(source, "travel_lo", config.travel_lo);
  detail::read_field(source, "travel_hi", config.travel_hi);
  detail::read_field(source, "refresh_rate", config.refresh_rate);
  detail::read_field(source, "scale_c", config.scale_c);
  detail::read_field(source, "seed", config.seed);
  detail::read_field(source, "n_replicates", config.n_replicates);
  detail::read_field(source, "deterministic_timing", config.deterministic_timing);
  config.validate();
  return config;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream input(path);
  if (!input) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json parsed;
  try {
    input >> parsed;
  } catch (const nlohmann::json::exception& error) {
    throw std::invalid_argument("malformed config " + path + ": " + error.what());
  }
  return config_from_json(parsed);
}

inline nlohmann::json report_to_json(const ExperimentResult& result) {
  nlohmann::json event_counts = nlohmann::json::array();
  nlohmann::json walls = nlohmann::json::array();
  for (const auto& replicate : result.replicates) {
    event_counts.push_back(replicate.n_events);
    walls.push_back(replicate.cost_seconds);
  }
  nlohmann::json ess_values = nlohmann::json::array();
  for (Eigen::Index s = 0; s < result.report.ess_values.size(); ++s) {
    ess_values.push_back(result.report.ess_values[s]);
  }
  return nlohmann::json{{"config", config_to_json(result.config)},
                        {"statistic_names", result.report.names},
                        {"per_statistic_ess", ess_values},
                        {"min_ess", result.report.min_ess},
                        {"median_ess", result.report.median_ess},
                        {"wall_seconds", result.report.wall_seconds},
                        {"ess_per_second", result.report.ess_per_second},
                        {"event_counts", event_counts},
                        {"replicate_costs", walls},
                        {"noise_var", result.dataset.noise_var},
                        {"snr", result.dataset.snr}};
}

// ---------------------------------------------------------------------------
// Sample tables: CSV with a time column and one column per statistic, written
// with round-trip precision so recomputed diagnostics match exactly.

struct SampleTable {
  Eigen::VectorXd times;
  StatisticSet statistics;
};

inline void write_samples_csv(const std::string& path, const Eigen::VectorXd& times,
                              const StatisticSet& statistics) {
  if (times.size() != statistics.series.rows()) {
    throw std::invalid_argument("time column does not match statistic rows");
  }
  std::ofstream output(path);
  if (!output) throw std::invalid_argument("cannot open output file: " + path);
  output << "t";
  for (const auto& name : statistics.names) output << "," << name;
  output << "\n";
  char buffer[40];
  for (Eigen::Index row = 0; row < times.size(); ++row) {
    std::snprintf(buffer, sizeof buffer, "%.17g", times[row]);
    output << buffer;
    for (Eigen::Index s = 0; s < statistics.series.cols(); ++s) {
      std::snprintf(buffer, sizeof buffer, "%.17g", statistics.series(row, s));
      output << "," << buffer;
    }
    output << "\n";
  }
  if (!output) throw std::runtime_error("write failed: " + path);
}

inline SampleTable read_samples_csv(const std::string& path) {
  std::ifstream input(path);
  if (!input) throw std::invalid_argument("cannot open sample file: " + path);
  std::string line;
  if (!std::getline(input, line)) throw std::invalid_argument("empty sample file: " + path);
  std::vector<std::string> header;
  {
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) header.push_back(field);
  }
  if (header.empty() || header.front() != "t") {
    throw std::invalid_argument("sample file must start with a t column: " + path);
  }
  SampleTable table;
  table.statistics.names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(input, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
    if (row.size() != header.size()) {
      throw std::invalid_argument("ragged row in sample file: " + path);
    }
    rows.push_back(std::move(row));
  }
  table.times.resize(Eigen::Index(rows.size()));
  table.statistics.series.resize(Eigen::Index(rows.size()), Eigen::Index(header.size() - 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    table.times[Eigen::Index(r)] = rows[r][0];
    for (std::size_t s = 1; s < rows[r].size(); ++s) {
      table.statistics.series(Eigen::Index(r), Eigen::Index(s - 1)) = rows[r][s];
    }
  }
  return table;
}

// Recompute the ESS report from written sample tables (one per replicate).
inline EssReport recompute_report(const std::vector<SampleTable>& tables, double cost_seconds) {
  if (tables.empty()) throw std::invalid_argument("no sample tables");
  const auto& names = tables.front().statistics.names;
  Eigen::VectorXd mean_ess = Eigen::VectorXd::Zero(Eigen::Index(names.size()));
  for (const auto& table : tables) {
    if (table.statistics.names != names) {
      throw std::invalid_argument("sample tables have mismatched statistics");
    }
    for (Eigen::Index s = 0; s < mean_ess.size(); ++s) {
      const Eigen::VectorXd column = table.statistics.series.col(s);
      mean_ess[s] += ess(std::span<const double>(column.data(), std::size_t(column.size())));
    }
  }
  mean_ess /= double(tables.size());
  return make_ess_report(names, mean_ess, cost_seconds);
}

// ---------------------------------------------------------------------------
// Sampler comparison on a shared dataset.

struct ComparisonRow {
  std::string name;
  double min_ess_per_second = 0.0;
  double ratio = 0.0;  // relative to the reference sampler
};

struct ComparisonTable {
  std::string against;
  std::vector<ComparisonRow> rows;
};

inline ComparisonTable compare_samplers(const ExperimentConfig& base, SamplerKind against) {
  ComparisonTable table;
  table.against = sampler_name(against);
  double reference = 0.0;
  for (SamplerKind kind :
       {SamplerKind::original, SamplerKind::latent, SamplerKind::hamiltonian}) {
    ExperimentConfig config = base;
    config.sampler = kind;
    const auto result = run_experiment(config);
    ComparisonRow row;
    row.name = sampler_name(kind);
    row.min_ess_per_second = result.report.ess_per_second;
    table.rows.push_back(row);
    if (kind == against) reference = row.min_ess_per_second;
  }
  if (!(reference > 0.0)) throw std::runtime_error("reference sampler produced no throughput");
  for (auto& row : table.rows) row.ratio = row.min_ess_per_second / reference;
  return table;
}

}  // namespace szz

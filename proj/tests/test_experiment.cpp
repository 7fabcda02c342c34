#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "szz/data.hpp"
#include "szz/experiment.hpp"

namespace {

szz::ExperimentConfig desk_data_config(double alpha) {
  szz::ExperimentConfig config;
  config.alpha = alpha;
  config.n_blocks = 10;
  config.block_size = 20;
  config.n_obs = 200;
  config.n_signals = 10;
  return config;
}

// small everything: six coordinates, short runs, two replicates
szz::ExperimentConfig tiny_run_config(szz::SamplerKind sampler) {
  szz::ExperimentConfig config;
  config.alpha = 0.5;
  config.n_blocks = 2;
  config.block_size = 3;
  config.n_obs = 40;
  config.n_signals = 2;
  config.slab_prob = 0.35;
  config.snr_target = 0.15;
  config.sampler = sampler;
  config.horizon = 400.0;
  config.n_iterations = 300;
  config.spacing = 2.0;
  config.seed = 52001;
  config.n_replicates = 2;
  config.deterministic_timing = true;
  return config;
}

double pooled_lag1(const szz::Dataset& data, int n_blocks, int block_size) {
  double accumulator = 0.0;
  long count = 0;
  for (int block = 0; block < n_blocks; ++block) {
    for (int k = 1; k < block_size; ++k) {
      const int column = block * block_size + k;
      accumulator += data.design.col(column).dot(data.design.col(column - 1));
      count += data.design.rows();
    }
  }
  return accumulator / double(count);
}

}  // namespace

TEST_CASE("independent predictors when the block correlation is zero") {
  const auto config = desk_data_config(0.0);
  const auto data = szz::generate_data(config, 61001);
  REQUIRE(data.design.rows() == 200);
  REQUIRE(data.design.cols() == 200);
  const double n_pairs = double(config.n_blocks * (config.block_size - 1) * config.n_obs);
  CHECK(std::abs(pooled_lag1(data, config.n_blocks, config.block_size)) <=
        3.0 / std::sqrt(n_pairs));
}

TEST_CASE("block correlation structure at alpha 0.9") {
  const auto config = desk_data_config(0.9);
  const auto data = szz::generate_data(config, 61002);

  // products along one AR chain are serially correlated, inflating the pooled
  // estimator's spread well past the independent-term rate (sd ~ 0.024 here)
  CHECK(pooled_lag1(data, config.n_blocks, config.block_size) ==
        Catch::Approx(0.9).margin(0.08));

  // adjacent columns across a block boundary are independent
  double cross = 0.0;
  long cross_count = 0;
  for (int block = 1; block < config.n_blocks; ++block) {
    const int column = block * config.block_size;
    cross += data.design.col(column).dot(data.design.col(column - 1));
    cross_count += data.design.rows();
  }
  CHECK(std::abs(cross / double(cross_count)) <= 3.0 / std::sqrt(double(cross_count)));

  // unit marginal variance, coordinate by coordinate
  const double band = 3.0 * std::sqrt(2.0 / double(config.n_obs));
  for (int column = 0; column < data.design.cols(); ++column) {
    const double variance =
        data.design.col(column).squaredNorm() / double(config.n_obs);
    CHECK(variance == Catch::Approx(1.0).margin(band));
  }
}

TEST_CASE("signal placement and block bookkeeping") {
  const auto config = desk_data_config(0.9);
  const auto data = szz::generate_data(config, 61003);

  const auto signals = data.signal_indices();
  REQUIRE(signals.size() == 10);
  for (int index : signals) {
    CHECK(std::abs(data.true_coefficients[index]) == 1.0);
  }
  CHECK((data.true_coefficients.array() != 0.0).count() == 10);

  const auto blocks = data.blocks();
  REQUIRE(blocks.size() == 10);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    CHECK(blocks[b].size() == 20);
    for (int coordinate : blocks[b]) {
      CHECK(data.block_assignment[std::size_t(coordinate)] == int(b));
    }
  }
}

TEST_CASE("datasets are a pure function of config and seed") {
  const auto config = desk_data_config(0.5);
  const auto first = szz::generate_data(config, 61004);
  const auto second = szz::generate_data(config, 61004);
  CHECK((first.design.array() == second.design.array()).all());
  CHECK((first.response.array() == second.response.array()).all());
  CHECK((first.true_coefficients.array() == second.true_coefficients.array()).all());
  CHECK(first.noise_var == second.noise_var);

  const auto other = szz::generate_data(config, 61005);
  CHECK_FALSE((first.design.array() == other.design.array()).all());
}

TEST_CASE("noise calibration hits the target signal fraction") {
  auto config = desk_data_config(0.9);
  config.snr_target = 0.15;
  for (std::uint64_t seed : {61006u, 61007u, 61008u}) {
    const auto data = szz::generate_data(config, seed);
    CHECK(data.snr >= 0.10);
    CHECK(data.snr <= 0.20);
    CHECK(data.noise_var > 1.0);  // ten unit signals need substantial noise
  }

  config.snr_target = 0.0;
  config.noise_var = 2.5;
  const auto fixed = szz::generate_data(config, 61006);
  CHECK(fixed.noise_var == 2.5);
}

TEST_CASE("initial states follow the benchmark protocol") {
  const auto config = tiny_run_config(szz::SamplerKind::original);
  const auto data = szz::generate_data(config, config.seed);
  const auto model = szz::model_from(data, config);
  const szz::LatentGeometry geometry(model);

  szz::Rng rng(9001);
  const auto sticky = szz::initial_sticky_state(geometry, data.true_coefficients, rng);
  const auto latent = szz::initial_latent_state(geometry, data.true_coefficients, rng);
  for (Eigen::Index i = 0; i < model.dim(); ++i) {
    if (data.true_coefficients[i] == 0.0) {
      CHECK(sticky.position[i] == 0.0);
      CHECK(sticky.stuck[std::size_t(i)] == 1);
      CHECK(sticky.unstick_time[std::size_t(i)] > 0.0);
      CHECK(std::abs(latent.position[i]) < geometry.half_extent);
    } else {
      CHECK(sticky.stuck[std::size_t(i)] == 0);
      CHECK(sticky.position[i] ==
            Catch::Approx(data.true_coefficients[i]).margin(0.01));
      CHECK(std::abs(latent.position[i]) > geometry.half_extent);
      CHECK(szz::collapse_coordinate(latent.position[i], geometry) ==
            Catch::Approx(data.true_coefficients[i]).margin(0.01));
    }
  }
}

TEST_CASE("experiments produce the signal plus block statistic set") {
  for (szz::SamplerKind sampler :
       {szz::SamplerKind::original, szz::SamplerKind::latent, szz::SamplerKind::hamiltonian}) {
    const auto config = tiny_run_config(sampler);
    const auto result = szz::run_experiment(config);
    REQUIRE(result.replicates.size() == 2);
    CHECK(result.report.names.size() == 4);  // 2 signals + 2 blocks
    CHECK(result.report.min_ess > 0.0);
    CHECK(result.report.min_ess <= result.report.median_ess);
    CHECK(result.report.ess_per_second > 0.0);
    for (const auto& replicate : result.replicates) {
      CHECK(replicate.n_events > 0);
      CHECK(replicate.statistics.series.rows() == replicate.sample_times.size());
      if (sampler == szz::SamplerKind::hamiltonian) {
        CHECK(replicate.sample_times.size() == 300);
      } else {
        CHECK(replicate.sample_times.size() == 201);  // grid 0, 2, ..., 400
      }
    }
  }
}

TEST_CASE("reports are byte-identical under deterministic timing") {
  const auto config = tiny_run_config(szz::SamplerKind::latent);
  const auto first = szz::run_experiment(config);
  const auto second = szz::run_experiment(config);
  CHECK(szz::report_to_json(first).dump(2) == szz::report_to_json(second).dump(2));
}

TEST_CASE("sample tables round-trip through CSV exactly") {
  const auto config = tiny_run_config(szz::SamplerKind::original);
  const auto result = szz::run_experiment(config);
  const auto& replicate = result.replicates.front();

  const std::string path = "round_trip_samples.csv";
  szz::write_samples_csv(path, replicate.sample_times, replicate.statistics);
  const auto table = szz::read_samples_csv(path);
  std::remove(path.c_str());

  REQUIRE(table.statistics.names == replicate.statistics.names);
  CHECK((table.times.array() == replicate.sample_times.array()).all());
  CHECK((table.statistics.series.array() == replicate.statistics.series.array()).all());

  const auto recomputed = szz::recompute_report({table}, replicate.cost_seconds);
  for (Eigen::Index s = 0; s < recomputed.ess_values.size(); ++s) {
    CHECK(recomputed.ess_values[s] ==
          Catch::Approx(replicate.ess_values[s]).margin(1e-9));
  }
}

TEST_CASE("config JSON round-trips and rejects malformed input") {
  auto config = tiny_run_config(szz::SamplerKind::hamiltonian);
  config.refresh_rate = 0.25;
  config.scale_c = 0.8;
  const auto restored = szz::config_from_json(szz::config_to_json(config));
  CHECK(restored.alpha == config.alpha);
  CHECK(restored.sampler == config.sampler);
  CHECK(restored.scale_c == config.scale_c);
  CHECK(restored.refresh_rate == config.refresh_rate);
  CHECK(restored.seed == config.seed);
  CHECK(restored.deterministic_timing == config.deterministic_timing);

  CHECK_THROWS_WITH(szz::config_from_json(nlohmann::json{{"alpha", 0.5}}),
                    Catch::Matchers::ContainsSubstring("sampler"));
  CHECK_THROWS_WITH(
      szz::config_from_json(nlohmann::json{{"sampler", "latent"}, {"alphaa", 0.5}}),
      Catch::Matchers::ContainsSubstring("alphaa"));
  CHECK_THROWS_WITH(
      szz::config_from_json(nlohmann::json{{"sampler", "latent"}, {"alpha", "wide"}}),
      Catch::Matchers::ContainsSubstring("alpha"));
  CHECK_THROWS_WITH(szz::config_from_json(nlohmann::json{{"sampler", "zigzag"}}),
                    Catch::Matchers::ContainsSubstring("zigzag"));
  CHECK_THROWS_AS(szz::load_config("no_such_config.json"), std::invalid_argument);

  auto invalid = szz::config_to_json(config);
  invalid["alpha"] = 1.5;
  CHECK_THROWS_WITH(szz::config_from_json(invalid),
                    Catch::Matchers::ContainsSubstring("alpha"));
}

TEST_CASE("sampler comparison is anchored at the reference") {
  auto config = tiny_run_config(szz::SamplerKind::original);
  config.n_replicates = 1;
  const auto table = szz::compare_samplers(config, szz::SamplerKind::original);
  REQUIRE(table.rows.size() == 3);
  CHECK(table.against == "original");
  for (const auto& row : table.rows) {
    CHECK(row.min_ess_per_second > 0.0);
    CHECK(std::isfinite(row.ratio));
    CHECK(row.ratio > 0.0);
  }
  CHECK(table.rows[0].name == "original");
  CHECK(table.rows[0].ratio == 1.0);
}

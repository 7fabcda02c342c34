#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "szz/oracles.hpp"
#include "szz/random.hpp"

TEST_CASE("lemma1_series evaluates the first terms exactly") {
  CHECK(szz::lemma1_series(2.0, 2.0, 1) == Catch::Approx(0.5).margin(1e-14));
  CHECK(szz::lemma1_series(3.0, 3.0, 2) == Catch::Approx(5.0 / 12.0).margin(1e-14));
  CHECK(szz::lemma1_series(1.0, 1.0, 200) == Catch::Approx(std::exp(-1.0)).margin(0.01));
}

TEST_CASE("lemma1_series is monotone decreasing in s") {
  const double w = 1.7;
  for (int m : {1, 3, 10, 50}) {
    double prev = 1.0 + 1e-12;
    for (double s = 0.1; s <= 2.0 * w; s += 0.1) {
      const double value = szz::lemma1_series(s, w, m);
      REQUIRE(value < prev);
      prev = value;
    }
  }
}

TEST_CASE("lemma1_series approaches the exponential limit") {
  for (double ratio : {0.25, 0.5, 1.0, 1.5, 2.0}) {
    const double gap = std::abs(szz::lemma1_series(ratio, 1.0, 200) - std::exp(-ratio));
    REQUIRE(gap <= 0.01);
  }
  // Stable far beyond the limit check.
  const double deep = szz::lemma1_series(1.0, 1.0, 10000);
  CHECK(std::isfinite(deep));
  CHECK(std::abs(deep - std::exp(-1.0)) < 1e-3);
}

TEST_CASE("dirichlet_mc reproduces the series below the width") {
  // Empty weight product and always-true indicator.
  const auto trivial = szz::dirichlet_mc(1.0, 1.0, 0, 10000, 3);
  CHECK(trivial.estimate == 1.0);
  CHECK(trivial.standard_error == 0.0);

  const auto mc = szz::dirichlet_mc(1.0, 1.0, 2, 1000000, 11);
  const double series = szz::lemma1_series(1.0, 1.0, 2);
  CHECK(series == Catch::Approx(5.0 / 12.0).margin(1e-14));
  CHECK(std::abs(mc.estimate - series) <= 3.0 * mc.standard_error);
}

TEST_CASE("dirichlet_mc matches the series on a grid of (s/w, m)") {
  const double w = 1.3;
  std::uint64_t seed = 100;
  for (double ratio : {0.5, 1.0}) {
    for (int m : {1, 5, 20}) {
      const auto mc = szz::dirichlet_mc(ratio * w, w, m, 200000, seed++);
      const double series = szz::lemma1_series(ratio * w, w, m);
      REQUIRE(std::abs(mc.estimate - series) <= 3.0 * std::max(mc.standard_error, 1e-12));
    }
  }
}

TEST_CASE("indicator gap beyond the width obeys the explicit bound") {
  // The indicator-free expectation IS the series (a polynomial identity in s),
  // so the with-indicator estimate may only drift from the series within
  // (m+1)(1-w/s)^m e^{s/w}.
  const double w = 1.0, s = 2.0;
  for (int m : {1, 5, 20}) {
    const auto without = szz::dirichlet_mc_unrestricted(s, w, m, 200000, 42);
    const double series = szz::lemma1_series(s, w, m);
    REQUIRE(std::abs(without.estimate - series) <= 4.0 * std::max(without.standard_error, 1e-9));

    const auto with = szz::dirichlet_mc(s, w, m, 200000, 42);
    const double bound = double(m + 1) * std::pow(1.0 - w / s, m) * std::exp(s / w);
    REQUIRE(std::abs(with.estimate - series) <= bound + 3.0 * with.standard_error);
  }
  // Beyond the width the indicators genuinely fire: at m = 1 they zero every
  // sample (both spacings cannot stay below w/s when s = 2w).
  const auto pinned = szz::dirichlet_mc(s, w, 1, 10000, 5);
  CHECK(pinned.estimate == 0.0);
}

TEST_CASE("inclusion_probability_1d matches conjugate ground truth") {
  // No signal: the data say nothing, the prior answers.
  CHECK(szz::inclusion_probability_1d({0.0, 0.0}, {1.0, -1.0}, 1.0, 0.3, 1.0) ==
        Catch::Approx(0.3).margin(1e-12));
  // Single observation at zero shrinks the odds by sqrt(1/2).
  CHECK(szz::inclusion_probability_1d({1.0}, {0.0}, 1.0, 0.5, 1.0) ==
        Catch::Approx(1.0 / (1.0 + std::sqrt(2.0))).margin(1e-12));
  // Slab-dominant prior forces inclusion.
  CHECK(szz::inclusion_probability_1d({1.0}, {0.5}, 1.0, 1.0 - 1e-9, 1.0) ==
        Catch::Approx(1.0).margin(1e-6));
  // Strong signals stay finite in log space.
  std::vector<double> g(50, 1.0), y(50, 40.0);
  const double strong = szz::inclusion_probability_1d(g, y, 1.0, 0.5, 1.0);
  CHECK(strong == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("inclusion_probability_1d agrees with brute-force quadrature") {
  // Independent reference: trapezoidal integration of the unnormalized
  // posterior odds over the slab.
  const std::vector<double> g{0.8, -0.3, 1.2, 0.5};
  const std::vector<double> y{0.9, 0.1, 1.4, 0.2};
  const double noise_var = 0.7, slab_prob = 0.4, slab_var = 1.3;
  auto log_lik = [&](double x) {
    double ss = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = y[i] - g[i] * x;
      ss += r * r;
    }
    return -0.5 * ss / noise_var;
  };
  double evidence_ratio = 0.0;
  const double dx = 1e-4;
  const double two_pi = 6.283185307179586;
  for (double x = -12.0; x <= 12.0; x += dx) {
    const double slab = std::exp(-0.5 * x * x / slab_var) / std::sqrt(two_pi * slab_var);
    evidence_ratio += std::exp(log_lik(x) - log_lik(0.0)) * slab * dx;
  }
  const double odds = slab_prob / (1.0 - slab_prob) * evidence_ratio;
  const double expected = odds / (1.0 + odds);
  const double actual = szz::inclusion_probability_1d(g, y, noise_var, slab_prob, slab_var);
  CHECK(actual == Catch::Approx(expected).margin(1e-6));
}

TEST_CASE("ks_exponential accepts its own law and rejects others") {
  szz::Rng rng(5);
  std::vector<double> good, doubled;
  for (int i = 0; i < 10000; ++i) {
    good.push_back(rng.exponential(2.5));
    doubled.push_back(rng.exponential(5.0));
  }
  CHECK(szz::ks_exponential(good, 2.5).pass);
  CHECK_FALSE(szz::ks_exponential(doubled, 2.5).pass);
  const std::vector<double> constant(500, 1.0);
  CHECK_FALSE(szz::ks_exponential(constant, 1.0).pass);
}

TEST_CASE("ks_exponential holds its level near 0.01") {
  szz::Rng rng(17);
  int rejections = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> samples;
    samples.reserve(400);
    for (int i = 0; i < 400; ++i) samples.push_back(rng.exponential(1.0));
    if (!szz::ks_exponential(samples, 1.0).pass) ++rejections;
  }
  // Expected 4 rejections; allow generous slack around the 1% level.
  CHECK(rejections <= 15);
}

TEST_CASE("oracle preconditions are enforced") {
  CHECK_THROWS_AS(szz::lemma1_series(-1.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(szz::lemma1_series(1.0, 1.0, -1), std::invalid_argument);
  CHECK_THROWS_AS(szz::dirichlet_mc(1.0, 1.0, 2, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(szz::ks_exponential(std::vector<double>(50, 1.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(szz::ks_exponential(std::vector<double>(200, -1.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(szz::inclusion_probability_1d({1.0}, {0.0}, 1.0, 1.5, 1.0), std::invalid_argument);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "szz/random.hpp"

// Analytic and brute-force references: the conditional-survival series and its
// Dirichlet Monte Carlo counterpart, the 1-d conjugate spike-and-slab
// posterior, and exponential goodness-of-fit.

namespace szz {

// P(sup_t |B(t)| <= x) for the Brownian bridge: 1 - 2 Σ (-1)^{k-1} e^{-2k²x²}.
inline double kolmogorov_cdf(double x) {
  if (x <= 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 1; k <= 128; ++k) {
    const double term = std::exp(-2.0 * double(k) * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-17) break;
  }
  return std::clamp(1.0 - 2.0 * sum, 0.0, 1.0);
}

inline double kolmogorov_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("probability must lie in (0,1)");
  double lo = 1e-8, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_cdf(mid) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct GofResult {
  double statistic = 0.0;  // KS distance D_n
  double threshold = 0.0;  // critical value at the configured significance
  bool pass = false;       // statistic <= threshold
  std::size_t n = 0;
};

// KS test against Exp(mean), asymptotic threshold c(significance)/sqrt(n).
inline GofResult ks_exponential(std::vector<double> samples, double mean,
                                double significance = 0.01) {
  if (samples.size() < 100) throw std::invalid_argument("ks_exponential needs at least 100 samples");
  if (!(mean > 0.0) || !std::isfinite(mean)) throw std::invalid_argument("mean must be positive");
  for (double s : samples) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("samples must be positive");
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = 1.0 - std::exp(-samples[i] / mean);
    const double upper = double(i + 1) / double(n) - cdf;  // D+
    const double lower = cdf - double(i) / double(n);      // D-
    d = std::max({d, upper, lower});
  }
  GofResult result;
  result.statistic = d;
  result.threshold = kolmogorov_quantile(1.0 - significance) / std::sqrt(double(n));
  result.pass = result.statistic <= result.threshold;
  result.n = n;
  return result;
}

// Conditional survival series Σ_{k=0}^{m} [Π_{ℓ<k}(m-ℓ)/(m+k-ℓ)]·(-s)^k/(w^k k!),
// evaluated by term recurrence: term_{k+1} = term_k·(-s/w)·(m-k)/((m+k+1)(k+1)).
// The product form keeps every term bounded by (s/w)^k/k!, stable to m = 10⁴.
inline double lemma1_series(double s, double w, int m) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("s must be positive");
  if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("w must be positive");
  if (m < 0) throw std::invalid_argument("m must be nonnegative");
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < m; ++k) {
    term *= (-s / w) * double(m - k) / (double(m + k + 1) * double(k + 1));
    sum += term;
  }
  return sum;
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t n = 0;
};

// Monte Carlo counterpart of lemma1_series over Dirichlet(1,...,1) spacings
// q = (q_0,...,q_m), sampled as normalized mean-1 exponentials:
//   E[ Π_{k=0}^{m} 1{s·q_k <= w} · Π_{k=1}^{m} (1 - s·q_k/w) ].
// The boundary is counted as inside; this differs from a strict crossing only
// on a null set and keeps the m = 0, s = w case at its exact value 1.
inline MonteCarloEstimate dirichlet_mc(double s, double w, int m, std::size_t n_samples,
                                       std::uint64_t seed) {
  if (!(s > 0.0) || !(w > 0.0)) throw std::invalid_argument("s and w must be positive");
  if (m < 0) throw std::invalid_argument("m must be nonnegative");
  if (n_samples < 1000) throw std::invalid_argument("dirichlet_mc needs at least 1000 samples");
  Rng rng(seed);
  std::vector<double> spacings(std::size_t(m) + 1);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    double total = 0.0;
    for (double& e : spacings) {
      e = rng.exponential();
      total += e;
    }
    double value = 1.0;
    for (int k = 0; k <= m; ++k) {
      const double q = spacings[std::size_t(k)] / total;
      if (s * q > w) {
        value = 0.0;
        break;
      }
      if (k >= 1) value *= 1.0 - s * q / w;
    }
    sum += value;
    sum_sq += value * value;
  }
  MonteCarloEstimate out;
  const double nn = double(n_samples);
  out.estimate = sum / nn;
  const double variance = std::max(0.0, sum_sq / nn - out.estimate * out.estimate);
  out.standard_error = std::sqrt(variance / nn);
  out.n = n_samples;
  return out;
}

// Same expectation without the indicator factors; paired with dirichlet_mc via
// a shared seed to expose the indicator gap for s > w.
inline MonteCarloEstimate dirichlet_mc_unrestricted(double s, double w, int m,
                                                    std::size_t n_samples, std::uint64_t seed) {
  if (!(s > 0.0) || !(w > 0.0)) throw std::invalid_argument("s and w must be positive");
  if (m < 0) throw std::invalid_argument("m must be nonnegative");
  if (n_samples < 1000) throw std::invalid_argument("dirichlet_mc needs at least 1000 samples");
  Rng rng(seed);
  std::vector<double> spacings(std::size_t(m) + 1);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    double total = 0.0;
    for (double& e : spacings) {
      e = rng.exponential();
      total += e;
    }
    double value = 1.0;
    for (int k = 1; k <= m; ++k) {
      const double q = spacings[std::size_t(k)] / total;
      value *= 1.0 - s * q / w;
    }
    sum += value;
    sum_sq += value * value;
  }
  MonteCarloEstimate out;
  const double nn = double(n_samples);
  out.estimate = sum / nn;
  const double variance = std::max(0.0, sum_sq / nn - out.estimate * out.estimate);
  out.standard_error = std::sqrt(variance / nn);
  out.n = n_samples;
  return out;
}

// Exact inclusion probability P(x != 0 | y) for the 1-d model
//   y = g·x + ε, ε ~ N(0, noise_var·I), x ~ (1-p)δ₀ + p·N(0, slab_var).
// Evidence ratio m₁/m₀ = exp(B²/2A)/sqrt(slab_var·A) with A = |g|²/σ² + 1/ν,
// B = <g,y>/σ²; evaluated in log space so strong signals cannot overflow.
inline double inclusion_probability_1d(const std::vector<double>& g, const std::vector<double>& y,
                                       double noise_var, double slab_prob, double slab_var) {
  if (g.size() != y.size() || g.empty()) throw std::invalid_argument("design and response sizes differ");
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be positive");
  if (!(slab_var > 0.0)) throw std::invalid_argument("slab_var must be positive");
  if (!(slab_prob > 0.0 && slab_prob < 1.0)) throw std::invalid_argument("slab_prob must lie in (0,1)");
  double gg = 0.0, gy = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    gg += g[i] * g[i];
    gy += g[i] * y[i];
  }
  const double a = gg / noise_var + 1.0 / slab_var;
  const double b = gy / noise_var;
  const double log_evidence_ratio = b * b / (2.0 * a) - 0.5 * std::log(slab_var * a);
  const double log_odds = std::log(slab_prob / (1.0 - slab_prob)) + log_evidence_ratio;
  return 1.0 / (1.0 + std::exp(-log_odds));
}

}  // namespace szz

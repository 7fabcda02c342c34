#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace szz {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

// Enumerator order doubles as the tie-break order at equal event times.
enum class EventKind : int { stick, unstick, bounce, boundary, refresh, horizon };

struct EventTime {
  double time = kNever;  // >= 0; +inf means "never"
  EventKind kind = EventKind::horizon;
  int coordinate = -1;
};

// Deterministic schedule order: earliest time, then lowest coordinate, then
// stick < unstick < bounce < boundary < refresh.
inline bool earlier(const EventTime& x, const EventTime& y) {
  if (x.time != y.time) return x.time < y.time;
  if (x.coordinate != y.coordinate) return x.coordinate < y.coordinate;
  return static_cast<int>(x.kind) < static_cast<int>(y.kind);
}

namespace detail {
inline void require_finite(double value, const char* message) {
  if (!std::isfinite(value)) throw std::invalid_argument(message);
}
}  // namespace detail

// First t >= 0 with ∫₀ᵗ (a + b s)⁺ ds = exp_draw; +inf when the total hazard
// saturates below exp_draw. Exact inversion, one sqrt per call.
inline double first_arrival_linear(double a, double b, double exp_draw) {
  detail::require_finite(a, "non-finite rate intercept");
  detail::require_finite(b, "non-finite rate slope");
  detail::require_finite(exp_draw, "non-finite exponential draw");
  if (exp_draw <= 0.0) throw std::invalid_argument("exponential draw must be positive");

  if (b == 0.0) {
    if (a <= 0.0) return kNever;
    return exp_draw / a;
  }
  if (b > 0.0) {
    if (a >= 0.0) {
      // a t + b t²/2 = E; rationalized root avoids cancellation for large a.
      return 2.0 * exp_draw / (a + std::sqrt(a * a + 2.0 * b * exp_draw));
    }
    // Rate is zero until t0 = -a/b, then ramps from zero.
    const double t0 = -a / b;
    return t0 + std::sqrt(2.0 * exp_draw / b);
  }
  // b < 0: hazard saturates at a²/(2|b|); a negative discriminant is exactly
  // the demand exceeding that lifetime total.
  if (a <= 0.0) return kNever;
  const double disc = a * a + 2.0 * b * exp_draw;
  if (disc < 0.0) return kNever;
  return 2.0 * exp_draw / (a + std::sqrt(disc));
}

// First t > 0 with p0 - a t - b t²/2 = 0; +inf when no strictly positive root.
// The larger-magnitude root comes from the stable quadratic branch, the other
// from the product of roots, so neither suffers cancellation.
inline double momentum_zero_time(double p0, double a, double b) {
  detail::require_finite(p0, "non-finite momentum");
  detail::require_finite(a, "non-finite gradient intercept");
  detail::require_finite(b, "non-finite gradient slope");

  if (b == 0.0) {
    if (a == 0.0) return kNever;  // constant momentum
    const double t = p0 / a;
    return t > 0.0 ? t : kNever;
  }
  // Roots of (b/2) t² + a t - p0 = 0.
  const double disc = a * a + 2.0 * b * p0;
  if (disc < 0.0) return kNever;
  const double sqrt_disc = std::sqrt(disc);
  const double q = (a >= 0.0) ? -0.5 * (a + sqrt_disc) : -0.5 * (a - sqrt_disc);
  double best = kNever;
  if (q != 0.0) {
    const double larger = q / (0.5 * b);
    const double smaller = -p0 / q;
    if (larger > 0.0) best = larger;
    if (smaller > 0.0 && smaller < best) best = smaller;
  }
  return best;
}

// First strictly positive time the motion position + velocity·t reaches any
// threshold; +inf when none lies ahead. A threshold at the current position is
// not ahead, so engines never re-fire the event they just processed.
inline double boundary_hit(double position, double velocity, std::span<const double> thresholds) {
  detail::require_finite(position, "non-finite position");
  detail::require_finite(velocity, "non-finite velocity");
  if (velocity == 0.0) return kNever;
  double best = kNever;
  for (double threshold : thresholds) {
    detail::require_finite(threshold, "non-finite threshold");
    const double t = (threshold - position) / velocity;
    if (t > 0.0 && t < best) best = t;
  }
  return best;
}

}  // namespace szz

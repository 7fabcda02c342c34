#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "szz/events.hpp"

namespace szz {

// Gaussian linear model y = Gx + ε with a spike-and-slab prior per coordinate:
// point mass at 0 with probability 1 - slab_prob, mean-zero Gaussian slab with
// variance slab_var otherwise. gram = GᵀG and xty = Gᵀy are precomputed; all
// per-event work downstream touches a single gram column.
struct SpikeSlabModel {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  double noise_var = 1.0;
  double slab_prob = 0.5;
  double slab_var = 1.0;
  Eigen::MatrixXd gram;
  Eigen::VectorXd xty;

  SpikeSlabModel(Eigen::MatrixXd design_in, Eigen::VectorXd response_in, double noise_var_in,
                 double slab_prob_in, double slab_var_in = 1.0)
      : design(std::move(design_in)),
        response(std::move(response_in)),
        noise_var(noise_var_in),
        slab_prob(slab_prob_in),
        slab_var(slab_var_in) {
    if (design.rows() == 0 || design.cols() == 0) throw std::invalid_argument("empty design matrix");
    if (response.size() != design.rows()) throw std::invalid_argument("response length does not match design rows");
    if (!design.allFinite() || !response.allFinite()) throw std::invalid_argument("non-finite design or response");
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) throw std::invalid_argument("noise_var must be positive");
    if (!(slab_prob > 0.0 && slab_prob < 1.0)) throw std::invalid_argument("slab_prob must lie in (0,1)");
    if (!(slab_var > 0.0) || !std::isfinite(slab_var)) throw std::invalid_argument("slab_var must be positive");
    gram = design.transpose() * design;
    xty = design.transpose() * response;
  }

  Eigen::Index n_obs() const { return design.rows(); }
  Eigen::Index dim() const { return design.cols(); }

  double slab_density_zero() const { return 1.0 / std::sqrt(2.0 * kPi * slab_var); }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
};

// Each coordinate's spike is widened into a latent interval ("universe") of
// width scale·w centered at 0, with plateau height slab_density_zero/scale, so
// the plateau always carries the spike's mass: w = (1-p)/(p·slab_density(0)).
struct LatentGeometry {
  double width = 0.0;
  double scale = 1.0;
  double half_extent = 0.0;
  double plateau_height = 0.0;

  LatentGeometry(const SpikeSlabModel& model, double scale_in = 1.0)
      : scale(scale_in) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("scale must be positive");
    const double density = model.slab_density_zero();
    width = (1.0 - model.slab_prob) / (model.slab_prob * density);
    half_extent = scale * width / 2.0;
    plateau_height = density / scale;
  }

  // Degenerate geometry with no universes: every coordinate behaves as a plain
  // slab coordinate. Used for spike-free (pure Gaussian) runs.
  static LatentGeometry flat() { return LatentGeometry(); }

  bool is_flat() const { return half_extent == 0.0; }

  bool inside(double latent) const { return std::abs(latent) <= half_extent; }

 private:
  LatentGeometry() = default;
};

inline double collapse_coordinate(double latent, const LatentGeometry& geometry) {
  if (std::abs(latent) <= geometry.half_extent) return 0.0;
  return latent - (latent > 0.0 ? geometry.half_extent : -geometry.half_extent);
}

inline Eigen::VectorXd collapse(const Eigen::VectorXd& latent, const LatentGeometry& geometry) {
  Eigen::VectorXd out(latent.size());
  for (Eigen::Index i = 0; i < latent.size(); ++i) out[i] = collapse_coordinate(latent[i], geometry);
  return out;
}

// Right inverse of the collapse map: nonzero values shift outward past the
// universe; zero maps to the universe center.
inline double uncollapse_coordinate(double collapsed, const LatentGeometry& geometry) {
  if (collapsed == 0.0) return 0.0;
  return collapsed + (collapsed > 0.0 ? geometry.half_extent : -geometry.half_extent);
}

// -log of the continuous latent density, up to a position-independent constant
// shared by all inside/outside configurations: quadratic likelihood misfit,
// slab curvature outside the universes, and log(scale) per inside coordinate
// (the plateau is scale⁻¹ times the boundary density).
inline double latent_potential(const SpikeSlabModel& model, const LatentGeometry& geometry,
                               const Eigen::VectorXd& latent) {
  if (latent.size() != model.dim()) throw std::invalid_argument("position dimension mismatch");
  const Eigen::VectorXd collapsed_position = collapse(latent, geometry);
  const Eigen::VectorXd residual = model.response - model.design * collapsed_position;
  double value = 0.5 * residual.squaredNorm() / model.noise_var;
  const double log_scale = std::log(geometry.scale);
  for (Eigen::Index i = 0; i < latent.size(); ++i) {
    if (geometry.inside(latent[i])) {
      value += log_scale;
    } else {
      value += 0.5 * collapsed_position[i] * collapsed_position[i] / model.slab_var;
    }
  }
  return value;
}

// ∂U/∂x̃: exactly zero for coordinates inside their universe (flat plateau);
// outside, the likelihood gradient at the collapsed point plus the slab pull.
inline Eigen::VectorXd potential_gradient(const SpikeSlabModel& model, const LatentGeometry& geometry,
                                          const Eigen::VectorXd& latent) {
  if (latent.size() != model.dim()) throw std::invalid_argument("position dimension mismatch");
  if (!latent.allFinite()) throw std::invalid_argument("non-finite position");
  const Eigen::VectorXd collapsed_position = collapse(latent, geometry);
  Eigen::VectorXd gradient =
      (model.gram * collapsed_position - model.xty) / model.noise_var + collapsed_position / model.slab_var;
  for (Eigen::Index i = 0; i < latent.size(); ++i) {
    if (geometry.inside(latent[i])) gradient[i] = 0.0;
  }
  return gradient;
}

struct RaySlope {
  Eigen::VectorXd intercepts;  // a_i = ∂_iU at the segment start
  Eigen::VectorXd slopes;      // b_i = d/dt ∂_iU along the ray
  double valid_until = kNever; // first universe-boundary crossing on the ray
};

// Linear expansion of the gradient along x̃ + t·v. Coordinates inside their
// universe report (0, 0): their latent density is flat and their collapsed
// position does not move, so they drop out of every slope.
inline RaySlope ray_slope(const SpikeSlabModel& model, const LatentGeometry& geometry,
                          const Eigen::VectorXd& latent, const Eigen::VectorXd& velocity) {
  if (latent.size() != model.dim() || velocity.size() != model.dim()) {
    throw std::invalid_argument("position or velocity dimension mismatch");
  }
  for (Eigen::Index i = 0; i < velocity.size(); ++i) {
    if (velocity[i] != 1.0 && velocity[i] != -1.0) throw std::invalid_argument("velocity entries must be ±1");
  }
  RaySlope out;
  out.intercepts = potential_gradient(model, geometry, latent);
  Eigen::VectorXd effective = velocity;
  for (Eigen::Index i = 0; i < latent.size(); ++i) {
    if (geometry.inside(latent[i])) effective[i] = 0.0;
  }
  out.slopes = (model.gram * effective) / model.noise_var + effective / model.slab_var;
  const double thresholds[2] = {-geometry.half_extent, geometry.half_extent};
  out.valid_until = kNever;
  for (Eigen::Index i = 0; i < latent.size(); ++i) {
    if (geometry.inside(latent[i])) out.intercepts[i] = out.slopes[i] = 0.0;
    const double hit = boundary_hit(latent[i], velocity[i], thresholds);
    if (hit < out.valid_until) out.valid_until = hit;
  }
  return out;
}

// Incrementally maintained gradient expansion along the current ray, shared by
// all engines. Holds collapsed positions and the effective velocity (zero for
// frozen coordinates); every mutation is O(p) via a single gram column.
// Intercepts for frozen coordinates carry the collapsed-space gradient, which
// is what an unfreeze needs; callers mask them while a coordinate is frozen.
class GradientState {
 public:
  GradientState(const SpikeSlabModel& model, Eigen::VectorXd collapsed, Eigen::VectorXd effective_velocity)
      : model_(&model), xc_(std::move(collapsed)), veff_(std::move(effective_velocity)) {
    if (xc_.size() != model.dim() || veff_.size() != model.dim()) {
      throw std::invalid_argument("gradient state dimension mismatch");
    }
    rebuild();
  }

  void advance(double dt) {
    xc_ += veff_ * dt;
    a_ += b_ * dt;
  }

  // value in {-1, 0, +1}; 0 freezes the coordinate out of every slope.
  void set_velocity(Eigen::Index i, double value) {
    const double delta = value - veff_[i];
    if (delta == 0.0) return;
    b_ += (delta / model_->noise_var) * model_->gram.col(i);
    b_[i] += delta / model_->slab_var;
    veff_[i] = value;
    ++mutations_;
  }

  // Exact reposition of a single collapsed coordinate (boundary and stick
  // snaps); shifts all intercepts by the corresponding gram column.
  void snap_position(Eigen::Index i, double value) {
    const double delta = value - xc_[i];
    if (delta == 0.0) return;
    a_ += (delta / model_->noise_var) * model_->gram.col(i);
    a_[i] += delta / model_->slab_var;
    xc_[i] = value;
    ++mutations_;
  }

  double intercept(Eigen::Index i) const { return a_[i]; }
  double slope(Eigen::Index i) const { return b_[i]; }
  const Eigen::VectorXd& intercepts() const { return a_; }
  const Eigen::VectorXd& slopes() const { return b_; }
  const Eigen::VectorXd& collapsed() const { return xc_; }
  const Eigen::VectorXd& effective_velocity() const { return veff_; }

  // Full recompute; called periodically so incremental float error cannot
  // accumulate over long trajectories.
  void rebuild() {
    a_ = (model_->gram * xc_ - model_->xty) / model_->noise_var + xc_ / model_->slab_var;
    b_ = (model_->gram * veff_) / model_->noise_var + veff_ / model_->slab_var;
    mutations_ = 0;
  }

  void rebuild_every(long interval) {
    if (mutations_ >= interval) rebuild();
  }

 private:
  const SpikeSlabModel* model_;
  Eigen::VectorXd xc_, veff_, a_, b_;
  long mutations_ = 0;
};

}  // namespace szz

#pragma once

#include <cstddef>
#include <string>

#include "mfchaos/kernel.hpp"
#include "mfchaos/observable.hpp"
#include "mfchaos/phase.hpp"
#include "mfchaos/quadrature.hpp"

namespace mfchaos {

/// Velocity profile of a spatially homogeneous (or perturbed) density.
class VelocityProfile {
 public:
  enum class Kind { gaussian, cosine_bump };

  /// N(0, theta).
  static VelocityProfile gaussian(double theta = 1.0);
  /// (1 + cos(pi v / L)) / (2 L) on |v| <= L.
  static VelocityProfile cosine_bump(double half_width = 2.0);

  Kind kind() const { return kind_; }
  double theta() const { return theta_; }
  double half_width() const { return half_width_; }

  double pdf(double v) const;
  /// d/dv log pdf(v). Infinite outside the support of the bump.
  double score(double v) const;
  double sample(Rng& rng) const;

  /// Default velocity rule: 200-node trapezoid on |v| <= 8 sqrt(theta) for the
  /// Gaussian, 200-node Gauss-Legendre on the bump support. Lebesgue weights.
  QuadratureRule default_rule() const;
  /// Small Gauss rule (Hermite or Legendre) for tensor grids. Lebesgue weights.
  QuadratureRule gauss_rule(std::size_t n) const;

  /// int score^2 pdf dv (equals 1 / theta for the Gaussian).
  double fisher_information() const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::gaussian;
  double theta_ = 1.0;
  double half_width_ = 2.0;
};

/// Mean-field density model: either the exact steady state uniform(x) x g(v),
/// or a perturbed initial datum (1 + eps cos(k x)) g(v) / (2 pi) whose evolution
/// is tracked by a particle oracle (see MeanFieldReference).
class DensityModel {
 public:
  enum class Kind { analytic_steady, perturbed_oracle };

  static DensityModel steady(VelocityProfile profile);
  static DensityModel perturbed(VelocityProfile profile, double epsilon, int mode,
                                std::size_t oracle_size);

  Kind kind() const { return kind_; }
  const VelocityProfile& profile() const { return profile_; }
  double epsilon() const { return epsilon_; }
  int mode() const { return mode_; }
  std::size_t oracle_size() const { return oracle_size_; }
  bool is_steady() const { return kind_ == Kind::analytic_steady; }

  /// f^0(x, v).
  double initial_density(double x, double v) const;
  /// f(x, v); only defined for analytic_steady (time independent).
  double density(double x, double v) const;
  /// grad_v log f(z); only for analytic_steady.
  double score(double x, double v) const;
  /// (K * f)(x) by 256-node quadrature of the spatial marginal of f^0.
  double convolve(const TrigKernel& kernel, double x) const;

  /// int psi f^0 by tensor quadrature (256 x-nodes times the velocity rule).
  double expect_initial(const TestFunction& psi) const;
  /// int psi(x + v t, v) f^0(x, v): the expectation after free streaming for time t.
  double expect_free(const TestFunction& psi, double t) const;

  Phase sample(Rng& rng) const;

  const QuadratureRule& x_rule() const { return x_rule_; }
  const QuadratureRule& v_rule() const { return v_rule_; }

  std::string describe() const;

 private:
  DensityModel(Kind kind, VelocityProfile profile, double epsilon, int mode,
               std::size_t oracle_size);

  Kind kind_;
  VelocityProfile profile_;
  double epsilon_ = 0.0;
  int mode_ = 1;
  std::size_t oracle_size_ = 0;
  QuadratureRule x_rule_;
  QuadratureRule v_rule_;
};

/// V_f(z, z') = (K(x - x') - K*f(x)) grad_v log f(z), optionally split as
/// V_f = V_f^delta + W_f^delta with the mollified kernel K_delta.
class InteractionObservable {
 public:
  InteractionObservable(TrigKernel kernel, DensityModel density, double delta = 0.0);

  double operator()(const Phase& z, const Phase& zp) const;
  /// V_f^delta: uses K_delta in the pair term.
  double mollified_part(const Phase& z, const Phase& zp) const;
  /// W_f^delta: uses K - K_delta.
  double remainder_part(const Phase& z, const Phase& zp) const;

  const TrigKernel& kernel() const { return kernel_; }
  const DensityModel& density() const { return density_; }
  double delta() const { return delta_; }

 private:
  double mean_force(double x) const;

  TrigKernel kernel_;
  TrigKernel smoothed_;
  TrigKernel remainder_;
  DensityModel density_;
  double delta_;
  bool homogeneous_;
};

inline double vf_eval(const InteractionObservable& obs, const Phase& z, const Phase& zp) {
  return obs(z, zp);
}

}  // namespace mfchaos

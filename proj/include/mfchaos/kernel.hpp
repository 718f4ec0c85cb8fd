#pragma once

#include <string>
#include <vector>

namespace mfchaos {

struct KernelMode {
  int wavenumber = 1;
  double amplitude = 0.0;
};

/// Odd, mean-zero interaction force on the torus,
///   K(x) = sum_k a_k sin(k x),   K = -W'   with   W(x) = sum_k (a_k / k) cos(k x).
///
/// Rough kernels use a_k = eps_k k^{-(s + 0.55)} so that K sits just inside H^s
/// at the discrete level. Mollification multiplies a_k by exp(-(delta k)^2 / 2).
class TrigKernel {
 public:
  enum class Regularity { smooth, rough };

  TrigKernel() = default;
  TrigKernel(std::vector<KernelMode> modes, Regularity regularity = Regularity::smooth,
             double rough_exponent = 0.0, double mollification = 0.0);

  static TrigKernel zero() { return {}; }
  static TrigKernel smooth(std::vector<KernelMode> modes);
  /// Rough kernel with `n_modes` wavenumbers and alternating signs eps_k = (-1)^{k+1}.
  static TrigKernel rough(double s, int n_modes);

  double operator()(double x) const;
  double potential(double x) const;

  const std::vector<KernelMode>& modes() const { return modes_; }
  Regularity regularity() const { return regularity_; }
  double rough_exponent() const { return rough_exponent_; }
  double mollification() const { return mollification_; }
  int max_wavenumber() const;
  bool is_zero() const;

  /// K_delta: Gaussian spectral damping of the amplitudes (delta = 0 is the identity).
  TrigKernel mollified(double delta) const;
  /// K - K_delta, exact in the same mode basis.
  TrigKernel mollification_remainder(double delta) const;
  /// L2(T) norm, sqrt(pi * sum a_k^2).
  double l2_norm() const;

  std::string describe() const;

 private:
  std::vector<KernelMode> modes_;
  Regularity regularity_ = Regularity::smooth;
  double rough_exponent_ = 0.0;
  double mollification_ = 0.0;
};

inline double kernel_eval(const TrigKernel& k, double x) { return k(x); }
TrigKernel kernel_mollify(const TrigKernel& k, double delta);

}  // namespace mfchaos

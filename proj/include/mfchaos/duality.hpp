#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfchaos/cumulants.hpp"
#include "mfchaos/estimation.hpp"

namespace mfchaos {

/// h_N^T(z) = binom(N, m)^{-1} sum over m-subsets of prod psi(z_i).
struct TerminalObservable {
  TestFunction psi;
  int m = 1;
  std::size_t n_particles = 2;

  void validate() const;
  double operator()(std::span<const Phase> z) const;
  double operator()(const ParticleEnsemble& ens) const;
};

struct DualityReport {
  MomentEstimate lhs;
  MomentEstimate rhs;
  double z_score = 0.0;
  /// Largest per-replica |lhs - rhs| (pathwise checks) or |lhs - rhs| (grid checks).
  double max_residual = 0.0;
  /// Tolerance the residual is judged against, where one applies.
  double tolerance = 0.0;
};

/// h_N(t, z) = h_N^T(Phi_{t -> T} z): the configuration is carried from t to the horizon.
double backward_observable(const TerminalObservable& term, double t, std::span<const Phase> z,
                           const SimulationContext& ctx);

/// int h^T F_N(T) against int h^0 F_N(0) on shared replicas. The left side flows each
/// replica with ctx.integrator; the right side evaluates h^0 = h^T o Phi_{0 -> T} with
/// `reference_flow`, so the pathwise gap measures the integrator error of the former.
DualityReport check_forward_duality(const TerminalObservable& term, const ExperimentPlan& plan,
                                    const SimulationContext& ctx, const IntegratorSpec& reference_flow);

/// <psi^{(x)m}, F_{N,m}(T) - f^{(x)m}> = -N int_0^T E_{f^{(x)N}}[V_f(Z_1, Z_2) h_N(t, Z)] dt.
/// lhs: weak_error with plan.replicas; rhs: `rhs_samples` i.i.d. configurations, 8-point
/// Gauss-Legendre in t, V_f averaged over ordered pairs, with the t-independent term
/// V_f h^T(Z) subtracted and its exact mean added back.
DualityReport check_prop_identity(const TerminalObservable& term, const ExperimentPlan& plan,
                                  const SimulationContext& ctx, std::size_t rhs_samples);

/// C_bar_{N,n}(T) = binom(N,n)^{-1/2} binom(m,n) sum_{l=0}^n (-1)^{n+l} sum_{|sigma|=l} a^{m-l} psi^{(x)l}(z_sigma),
/// a = int psi f (grid quadrature). Orders 0..min(m, N); N <= 4.
CumulantTable terminal_dual_cumulants(const TerminalObservable& term, const PhaseGrid& grid);
/// Point evaluation of C_bar_{N,n}(T)(z_1..z_n) with a given a = int psi f; any N.
double terminal_dual_value(const TerminalObservable& term, int n, std::span<const Phase> z, double a);

/// sum_n <kappa_bar_n(T), C_bar_n(T)>_f against the same sum at t = 0 (only n = 0 survives),
/// on an nx x nv grid, N <= 3. F_N(T) is the pushforward of f^{(x)N} (volume preservation),
/// h^0 = h^T o Phi_{0 -> T}; both flows use ctx.integrator.
DualityReport check_cumulant_pairing_conservation(const TerminalObservable& term, const SimulationContext& ctx,
                                                  std::size_t nx, std::size_t nv, double tolerance = 5e-3);

/// E_{f (x) f}[V_f(Z_1, Z_2) psi(Z_1) psi(Z_2)] by quadrature (steady densities).
double vf_pair_moment(const InteractionObservable& obs, const TestFunction& psi);

}  // namespace mfchaos

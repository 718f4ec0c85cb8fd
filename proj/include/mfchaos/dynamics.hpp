#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfchaos/kernel.hpp"
#include "mfchaos/phase.hpp"

namespace mfchaos {

/// Positions and velocities of N particles at time t. Positions stay in [0, 2pi).
struct ParticleEnsemble {
  std::vector<double> x;
  std::vector<double> v;
  double t = 0.0;
  std::uint64_t replica_id = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size(); }
  Phase particle(std::size_t i) const { return {x[i], v[i]}; }
  void validate() const;
};

struct IntegratorSpec {
  enum class Method { rk4, velocity_verlet, euler_maruyama };
  enum class Direction { forward, backward };

  Method method = Method::rk4;
  double dt = 1e-3;
  Direction direction = Direction::forward;

  /// Throws unless the method matches sigma (stochastic iff sigma > 0) and
  /// backward integration is deterministic.
  void validate(double sigma) const;
  double signed_dt() const { return direction == Direction::forward ? dt : -dt; }
};

/// a_i = 1/(N-1) sum_{j != i} K(x_i - x_j), O(N^2 modes).
std::vector<double> force_direct(const ParticleEnsemble& ens, const TrigKernel& kernel);

/// Same forces through the mode sums C_k = sum_j cos(k x_j), S_k = sum_j sin(k x_j):
///   sum_j sin(k(x_i - x_j)) = sin(k x_i) C_k - cos(k x_i) S_k,
/// where the j = i contribution cancels identically. O(N modes). The mode sums
/// are accumulated exactly in fixed point, so forces do not depend on particle order.
std::vector<double> force_spectral(const ParticleEnsemble& ens, const TrigKernel& kernel);

/// Workspace-holding integrator for repeated steps on ensembles of one size.
class Propagator {
 public:
  Propagator(TrigKernel kernel, IntegratorSpec spec, double sigma);

  /// One step of size dt (signed by direction).
  void step(ParticleEnsemble& ens, Rng* rng = nullptr);
  /// Advances by `duration` (signed) using ceil(|duration| / dt) equal substeps.
  void advance(ParticleEnsemble& ens, double duration, Rng* rng = nullptr);

  const TrigKernel& kernel() const { return kernel_; }
  const IntegratorSpec& spec() const { return spec_; }

  void compute_forces(std::span<const double> x, std::span<double> out);

 private:
  void rk4_step(ParticleEnsemble& ens, double h);
  void verlet_step(ParticleEnsemble& ens, double h);
  void euler_maruyama_step(ParticleEnsemble& ens, double h, Rng& rng);
  void forces_from_trig(std::span<const double> c1, std::span<const double> s1, std::span<double> out);
  void rotate_trig(std::span<const double> shift);

  TrigKernel kernel_;
  IntegratorSpec spec_;
  double sigma_;
  std::vector<double> a1_, a2_, a3_, a4_, xs_, vs_;
  std::vector<double> amp_;  // a_k for k = 1..kmax, zero where absent
  std::vector<double> cos1_, sin1_, c0_, s0_, ck_, sk_, curc_, curs_;
};

/// Functional single step (copies the ensemble).
ParticleEnsemble step(ParticleEnsemble ens, const TrigKernel& kernel, const IntegratorSpec& spec,
                      double sigma, Rng& rng);

/// Transports one N-particle configuration from t0 to t1 (t1 < t0 allowed) under
/// the deterministic interacting flow. The integrator direction follows sign(t1 - t0).
std::vector<Phase> flow_map(std::span<const Phase> points, double t0, double t1, const TrigKernel& kernel,
                            const IntegratorSpec& spec, double sigma = 0.0);

struct Diagnostics {
  double energy = 0.0;
  double momentum = 0.0;
};

/// energy = sum v^2/2 + 1/(2(N-1)) sum_{i != j} W(x_i - x_j); momentum = sum v.
Diagnostics diagnostics(const ParticleEnsemble& ens, const TrigKernel& kernel);

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
/// Stream seed from a master seed and a list of tags (experiment, N, order, replica, ...).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

/// Appends rows (replica_id, t, i, x, v) for the whole ensemble.
void dump_trajectory(std::ostream& os, const ParticleEnsemble& ens);

}  // namespace mfchaos

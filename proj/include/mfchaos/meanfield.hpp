#pragma once

#include <cstdint>
#include <vector>

#include "mfchaos/density.hpp"
#include "mfchaos/dynamics.hpp"
#include "mfchaos/kernel.hpp"
#include "mfchaos/observable.hpp"
#include "mfchaos/phase.hpp"

namespace mfchaos {

/// The limiting Vlasov solution f(t) used as the reference in error measurements.
///
/// For analytic_steady models K*f = 0, so f(t) = f^0 when sigma = 0 and f(t) is f^0
/// with its velocity profile convolved by N(0, 2 sigma t) otherwise; expectations are
/// exact quadratures. For perturbed_oracle models an M-particle system sampled from
/// f^0 is simulated once and its states are cached at the requested times; its
/// expectations carry a statistical error, plus an O(1/M) systematic bias.
class MeanFieldReference {
 public:
  /// `min_oracle_size` is the floor M must meet (100 x the largest N served).
  static MeanFieldReference build(const PhaseConfig& config, const DensityModel& density, const TrigKernel& kernel,
                                  const IntegratorSpec& integrator, std::vector<double> times, std::uint64_t seed,
                                  std::size_t min_oracle_size = 0);

  const DensityModel& model() const { return model_; }
  double horizon() const { return horizon_; }
  double sigma() const { return sigma_; }
  bool is_exact() const { return model_.is_steady(); }
  std::size_t oracle_size() const { return model_.oracle_size(); }
  const std::vector<double>& times() const { return times_; }

  /// int psi f(t).
  ValueWithError expect(const TestFunction& psi, double t) const;
  /// (int psi f(t))^m.
  ValueWithError moment(const TestFunction& psi, int m, double t) const;

 private:
  MeanFieldReference(DensityModel model, double horizon, double sigma)
      : model_(std::move(model)), horizon_(horizon), sigma_(sigma) {}

  const ParticleEnsemble* snapshot(double t) const;

  DensityModel model_;
  double horizon_;
  double sigma_;
  std::vector<double> times_;
  std::vector<ParticleEnsemble> snapshots_;
};

MeanFieldReference build_reference(const PhaseConfig& config, const DensityModel& density, const TrigKernel& kernel,
                                   const IntegratorSpec& integrator, std::vector<double> times, std::uint64_t seed,
                                   std::size_t min_oracle_size = 0);

ValueWithError density_expect(const MeanFieldReference& ref, const TestFunction& psi, double t);
ValueWithError weak_reference_moment(const MeanFieldReference& ref, const TestFunction& psi, int m, double t);

}  // namespace mfchaos

#include "mfchaos/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mfchaos/quadrature.hpp"

namespace mfchaos {

namespace {
constexpr double kTimeMatch = 1e-12;

// int psi(x, v + s xi) f^0(x, v) phi(xi), with phi the standard normal density
double expect_diffused(const DensityModel& model, const TestFunction& psi, double s) {
  const QuadratureRule noise = gauss_hermite_probability(48, 1.0);
  const QuadratureRule& xr = model.x_rule();
  const QuadratureRule& vr = model.v_rule();
  double total = 0.0;
  for (std::size_t i = 0; i < xr.size(); ++i) {
    const double x = xr.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < vr.size(); ++j) {
      const double v = vr.nodes[j];
      double avg = 0.0;
      for (std::size_t q = 0; q < noise.size(); ++q) avg += noise.weights[q] * psi(x, v + s * noise.nodes[q]);
      inner += vr.weights[j] * model.initial_density(x, v) * avg;
    }
    total += xr.weights[i] * inner;
  }
  return total;
}
}  // namespace

MeanFieldReference MeanFieldReference::build(const PhaseConfig& config, const DensityModel& density,
                                             const TrigKernel& kernel, const IntegratorSpec& integrator,
                                             std::vector<double> times, std::uint64_t seed,
                                             std::size_t min_oracle_size) {
  config.validate();
  MeanFieldReference ref(density, config.horizon, config.sigma);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (double t : times)
    if (t < 0.0 || t > config.horizon + kTimeMatch) throw std::invalid_argument("reference time outside [0, T]");
  ref.times_ = times;
  if (density.is_steady()) return ref;

  if (density.oracle_size() < min_oracle_size)
    throw std::invalid_argument("oracle size M = " + std::to_string(density.oracle_size()) +
                                " is below the required floor " + std::to_string(min_oracle_size));
  if (config.sigma > 0.0) throw std::invalid_argument("the particle oracle runs the deterministic flow (sigma = 0)");

  Rng rng(derive_seed(seed, {0x6f7261636c65ULL}));
  ParticleEnsemble ens;
  const std::size_t m = density.oracle_size();
  ens.x.resize(m);
  ens.v.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Phase z = density.sample(rng);
    ens.x[i] = z.x;
    ens.v[i] = z.v;
  }
  ens.seed = seed;
  IntegratorSpec spec = integrator;
  spec.direction = IntegratorSpec::Direction::forward;
  Propagator prop(kernel, spec, 0.0);
  for (double t : times) {
    prop.advance(ens, t - ens.t);
    ref.snapshots_.push_back(ens);
  }
  return ref;
}

const ParticleEnsemble* MeanFieldReference::snapshot(double t) const {
  for (std::size_t i = 0; i < times_.size(); ++i)
    if (std::abs(times_[i] - t) <= kTimeMatch) return &snapshots_[i];
  return nullptr;
}

ValueWithError MeanFieldReference::expect(const TestFunction& psi, double t) const {
  if (t < -kTimeMatch || t > horizon_ + kTimeMatch) throw std::out_of_range("time outside the horizon [0, T]");
  if (std::abs(t) <= kTimeMatch || (model_.is_steady() && sigma_ == 0.0)) return {model_.expect_initial(psi), 0.0};
  if (model_.is_steady()) return {expect_diffused(model_, psi, std::sqrt(2.0 * sigma_ * t)), 0.0};
  const ParticleEnsemble* ens = snapshot(t);
  if (ens == nullptr) throw std::out_of_range("no oracle snapshot cached at t = " + std::to_string(t));
  const std::size_t m = ens->size();
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double y = psi(ens->x[i], ens->v[i]);
    const double d = y - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (y - mean);
  }
  const double var = m2 / static_cast<double>(m - 1);
  return {mean, std::sqrt(var / static_cast<double>(m))};
}

ValueWithError MeanFieldReference::moment(const TestFunction& psi, int m, double t) const {
  if (m < 1) throw std::invalid_argument("moment order must be >= 1");
  const ValueWithError e = expect(psi, t);
  const double value = std::pow(e.value, m);
  const double se = m * std::pow(std::abs(e.value), m - 1) * e.std_error;
  return {value, se};
}

MeanFieldReference build_reference(const PhaseConfig& config, const DensityModel& density, const TrigKernel& kernel,
                                   const IntegratorSpec& integrator, std::vector<double> times, std::uint64_t seed,
                                   std::size_t min_oracle_size) {
  return MeanFieldReference::build(config, density, kernel, integrator, std::move(times), seed, min_oracle_size);
}

ValueWithError density_expect(const MeanFieldReference& ref, const TestFunction& psi, double t) {
  return ref.expect(psi, t);
}

ValueWithError weak_reference_moment(const MeanFieldReference& ref, const TestFunction& psi, int m, double t) {
  return ref.moment(psi, m, t);
}

}  // namespace mfchaos

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfchaos/density.hpp"
#include "mfchaos/dynamics.hpp"
#include "mfchaos/meanfield.hpp"
#include "mfchaos/observable.hpp"

namespace mfchaos {

/// Replica-ensemble experiment over a geometric grid of particle numbers.
struct ExperimentPlan {
  enum class Estimator { u_statistic, first_tuple };
  /// none: plain replica averages. coupled: each replica's statistic is paired with
  /// the same statistic on its free-streamed initial data (exact mean by quadrature)
  /// and, for steady densities, with the first-order response to the free-streaming
  /// forces wherever that response has zero mean (orders 1 and >= 3). Needs sigma = 0.
  enum class Variance { none, coupled };

  std::vector<std::size_t> n_grid;
  std::size_t replicas = 2;
  TestFunction psi = TestFunction::constant(1.0);
  std::vector<int> orders{1};
  std::vector<double> times{0.5};
  std::string kernel_id = "kernel";
  std::string density_id = "density";
  std::uint64_t master_seed = 0;
  Variance variance = Variance::coupled;
  Estimator estimator = Estimator::u_statistic;
  std::size_t workers = 0;

  void validate(double horizon) const;
};

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
  std::size_t n = 0;
  int order = 0;
  double time = 0.0;
  /// Per-replica contributions; value = mean(samples) + offset.
  std::vector<double> samples;
  double offset = 0.0;
  /// Statistical uncertainty of the mean-field reference entering the estimate.
  double reference_error = 0.0;
  /// O(1/M) systematic band of a particle oracle: |value at the smallest N| * N_min / M.
  double reference_bias = 0.0;
  /// Set when reference_error + reference_bias exceeds 20% of |value|.
  bool reference_flagged = false;
};

/// Everything a replica run needs besides the plan.
struct SimulationContext {
  PhaseConfig phase;
  TrigKernel kernel;
  IntegratorSpec integrator;
  const MeanFieldReference* reference = nullptr;
  /// Optional (replica_id, t, i, x, v) dump at every observation time.
  std::ostream* trajectory = nullptr;
};

/// N i.i.d. draws from f^0.
ParticleEnsemble sample_chaotic(std::size_t n, const DensityModel& f0, Rng& rng);

/// Average of prod_j g(z_{i_j}) over unordered m-subsets of distinct particles,
/// via Newton's identities on power sums. Values are summed in sorted order, so
/// the result is invariant under relabelling of the particles.
double ustat_product(const ParticleEnsemble& ens, const TestFunction& g, int m);
double ustat_from_values(std::span<const double> values, int m);
/// Elementary symmetric polynomials e_0..e_m of the values (sorted, compensated power sums).
std::vector<double> elementary_symmetric(std::span<const double> values, int m);

/// g = psi - int psi f(t).
TestFunction center_observable(const TestFunction& psi, const MeanFieldReference& ref, double t);

/// <psi^{(x)m}, F_{N,m}(t) - f(t)^{(x)m}> for every N, order m and time in the plan.
std::vector<MomentEstimate> weak_error(const ExperimentPlan& plan, const SimulationContext& ctx);

/// Per-replica samples Y_l (l = 1..max_order) of the order-l statistic of g_k at each
/// plan time t_k, with E[Y_l] + offset_l = E[statistic_l(g_k, Z(t_k))].
struct OrderSamples {
  std::vector<std::vector<double>> y;  // [l - 1][replica]
  std::vector<double> offset;          // [l - 1]
};
std::vector<OrderSamples> order_samples(const ExperimentPlan& plan, const SimulationContext& ctx, std::size_t n,
                                        int max_order, std::span<const TestFunction> g,
                                        const std::function<std::uint64_t(std::size_t)>& seed_of);

/// <kappa_{N,n}(t), g^{(x)n} f^{(x)n}> = E[prod_{i<=n} g(Z_i(t))] with g centered at t.
std::vector<MomentEstimate> kappa_pairing(const ExperimentPlan& plan, const SimulationContext& ctx, int n);

/// Mean and standard error of per-replica samples (fixed-order reduction).
ValueWithError mean_and_error(std::span<const double> samples);

/// Runs `replicas` independent chaotic runs of size n; `observe(replica, time_index, ens)`
/// is called at t = 0 (time_index = -1) and at each observation time.
void run_replicas(const SimulationContext& ctx, std::size_t n, std::size_t replicas, std::span<const double> times,
                  std::size_t workers, const std::function<std::uint64_t(std::size_t)>& seed_of,
                  const std::function<void(std::size_t, int, const ParticleEnsemble&)>& observe);

}  // namespace mfchaos

#include "mfchaos/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mfchaos/parallel.hpp"
#include "mfchaos/quadrature.hpp"

namespace mfchaos {

namespace {

constexpr std::uint64_t kWeakErrorStream = 1;
constexpr std::uint64_t kKappaStream = 2;
constexpr int kMaxOrder = 6;
constexpr double kCenteringTolerance = 1e-8;

double binomial(std::size_t n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - static_cast<std::size_t>(k) + static_cast<std::size_t>(i)) / i;
  return r;
}

double first_tuple(std::span<const double> values, int m) {
  double p = 1.0;
  for (int i = 0; i < m; ++i) p *= values[static_cast<std::size_t>(i)];
  return p;
}

std::vector<double> evaluate(const ParticleEnsemble& ens, const TestFunction& g) {
  std::vector<double> y(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) y[i] = g(ens.x[i], ens.v[i]);
  return y;
}

void check_order(int m, std::size_t n) {
  if (m < 1 || m > kMaxOrder) throw std::invalid_argument("order must be in [1, 6]");
  if (static_cast<std::size_t>(m) > n) throw std::invalid_argument("order m exceeds the number of particles");
}

}  // namespace

void ExperimentPlan::validate(double horizon) const {
  if (n_grid.empty()) throw std::invalid_argument("plan.n_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw std::invalid_argument("plan.n_grid entries must be >= 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("plan.n_grid must be strictly increasing");
  }
  if (replicas < 2) throw std::invalid_argument("plan.replicas must be >= 2");
  if (orders.empty()) throw std::invalid_argument("plan.orders must not be empty");
  for (int m : orders) check_order(m, n_grid.front());
  if (times.empty()) throw std::invalid_argument("plan.times must not be empty");
  for (double t : times)
    if (!(t >= 0.0 && t <= horizon + 1e-12)) throw std::invalid_argument("plan.times must lie in [0, T]");
  if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("plan.times must be sorted");
}

ParticleEnsemble sample_chaotic(std::size_t n, const DensityModel& f0, Rng& rng) {
  ParticleEnsemble ens;
  ens.x.resize(n);
  ens.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Phase z = f0.sample(rng);
    ens.x[i] = z.x;
    ens.v[i] = z.v;
  }
  return ens;
}

std::vector<double> elementary_symmetric(std::span<const double> values, int m) {
  if (m < 0 || m > kMaxOrder) throw std::invalid_argument("elementary_symmetric: order must be in [0, 6]");
  std::vector<double> y(values.begin(), values.end());
  std::sort(y.begin(), y.end());
  // Neumaier-compensated power sums p_1..p_m
  double p[kMaxOrder + 1] = {0.0};
  double comp[kMaxOrder + 1] = {0.0};
  for (double yi : y) {
    double term = 1.0;
    for (int r = 1; r <= m; ++r) {
      term *= yi;
      const double s = p[r] + term;
      if (std::abs(p[r]) >= std::abs(term)) comp[r] += (p[r] - s) + term;
      else comp[r] += (term - s) + p[r];
      p[r] = s;
    }
  }
  for (int r = 1; r <= m; ++r) p[r] += comp[r];
  // Newton: k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} p_i
  std::vector<double> e(static_cast<std::size_t>(m) + 1, 0.0);
  e[0] = 1.0;
  for (int k = 1; k <= m; ++k) {
    double acc = 0.0;
    for (int i = 1; i <= k; ++i) acc += ((i % 2 == 1) ? 1.0 : -1.0) * e[static_cast<std::size_t>(k - i)] * p[i];
    e[static_cast<std::size_t>(k)] = acc / k;
  }
  return e;
}

double ustat_from_values(std::span<const double> values, int m) {
  const std::size_t n = values.size();
  if (m < 1 || m > kMaxOrder) throw std::invalid_argument("ustat_product: order must be in [1, 6]");
  if (static_cast<std::size_t>(m) > n) throw std::invalid_argument("ustat_product: m > N");
  return elementary_symmetric(values, m)[static_cast<std::size_t>(m)] / binomial(n, m);
}

double ustat_product(const ParticleEnsemble& ens, const TestFunction& g, int m) {
  return ustat_from_values(evaluate(ens, g), m);
}

TestFunction center_observable(const TestFunction& psi, const MeanFieldReference& ref, double t) {
  return psi.shifted(ref.expect(psi, t).value);
}

ValueWithError mean_and_error(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n == 0) return {};
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = samples[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (samples[i] - mean);
  }
  if (n < 2) return {mean, 0.0};
  return {mean, std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))};
}

void run_replicas(const SimulationContext& ctx, std::size_t n, std::size_t replicas, std::span<const double> times,
                  std::size_t workers, const std::function<std::uint64_t(std::size_t)>& seed_of,
                  const std::function<void(std::size_t, int, const ParticleEnsemble&)>& observe) {
  if (ctx.reference == nullptr) throw std::invalid_argument("simulation context has no mean-field reference");
  IntegratorSpec spec = ctx.integrator;
  spec.direction = IntegratorSpec::Direction::forward;
  spec.validate(ctx.phase.sigma);
  std::vector<std::string> dumps(ctx.trajectory ? replicas : 0);
  parallel_for(replicas, workers, [&](std::size_t r) {
    const std::uint64_t seed = seed_of(r);
    Rng rng(seed);
    ParticleEnsemble ens = sample_chaotic(n, ctx.reference->model(), rng);
    ens.replica_id = r;
    ens.seed = seed;
    std::ostringstream dump;
    if (ctx.trajectory) dump_trajectory(dump, ens);
    observe(r, -1, ens);
    Propagator prop(ctx.kernel, spec, ctx.phase.sigma);
    for (std::size_t k = 0; k < times.size(); ++k) {
      prop.advance(ens, times[k] - ens.t, &rng);
      if (ctx.trajectory) dump_trajectory(dump, ens);
      observe(r, static_cast<int>(k), ens);
    }
    if (ctx.trajectory) dumps[r] = dump.str();
  });
  if (ctx.trajectory)
    for (const auto& d : dumps) *ctx.trajectory << d;
}

namespace {

constexpr std::size_t kResponseNodes = 8;

// Sum of per-particle terms in sorted order, so relabelling particles cannot change it.
double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0, comp = 0.0;
  for (double t : terms) {
    const double s = sum + t;
    if (std::abs(sum) >= std::abs(t)) comp += (sum - s) + t;
    else comp += (t - s) + sum;
    sum = s;
  }
  return sum + comp;
}

// d statistic_l / d y_i for every particle.
std::vector<double> statistic_gradient(std::span<const double> y, int l, ExperimentPlan::Estimator est) {
  const std::size_t n = y.size();
  std::vector<double> grad(n, 0.0);
  if (est == ExperimentPlan::Estimator::first_tuple) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(l); ++i) {
      double p = 1.0;
      for (std::size_t j = 0; j < static_cast<std::size_t>(l); ++j)
        if (j != i) p *= y[j];
      grad[i] = p;
    }
    return grad;
  }
  const std::vector<double> e = elementary_symmetric(y, l - 1);
  const double norm = binomial(n, l);
  std::vector<double> without(static_cast<std::size_t>(l));
  for (std::size_t i = 0; i < n; ++i) {
    // e_k of the values with y_i removed: e_k - y_i e_{k-1}(without i)
    without[0] = 1.0;
    for (std::size_t k = 1; k < without.size(); ++k) without[k] = e[k] - y[i] * without[k - 1];
    grad[i] = without.back() / norm;
  }
  return grad;
}

bool response_has_zero_mean(int l) { return l == 1 || l >= 3; }

// Statistic of the free-streamed data plus, where admissible, the first-order response
// of the statistic to the forces felt along the free-streaming paths.
std::vector<std::vector<double>> coupled_terms(const ParticleEnsemble& initial, const SimulationContext& ctx,
                                               const ExperimentPlan& plan, int max_order,
                                               std::span<const TestFunction> g) {
  const std::size_t n = initial.size();
  const bool steady = ctx.reference->model().is_steady();
  const bool interacting = !ctx.kernel.is_zero();
  std::vector<std::vector<double>> out(plan.times.size(), std::vector<double>(static_cast<std::size_t>(max_order), 0.0));
  Propagator prop(ctx.kernel, ctx.integrator, 0.0);
  ParticleEnsemble free = initial;
  std::vector<double> dx(n), dv(n), xs(n), force(n), y(n), d(n);
  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    const double t = plan.times[k];
    for (std::size_t i = 0; i < n; ++i) free.x[i] = wrap_torus(initial.x[i] + initial.v[i] * t);
    for (std::size_t i = 0; i < n; ++i) y[i] = g[k](free.x[i], free.v[i]);
    const bool response = steady && interacting && t > 0.0;
    if (response) {
      std::fill(dx.begin(), dx.end(), 0.0);
      std::fill(dv.begin(), dv.end(), 0.0);
      const QuadratureRule gl = gauss_legendre(kResponseNodes, 0.0, t);
      for (std::size_t q = 0; q < gl.size(); ++q) {
        const double s = gl.nodes[q];
        for (std::size_t i = 0; i < n; ++i) xs[i] = wrap_torus(initial.x[i] + initial.v[i] * s);
        prop.compute_forces(xs, force);
        for (std::size_t i = 0; i < n; ++i) {
          dv[i] += gl.weights[q] * force[i];
          dx[i] += gl.weights[q] * (t - s) * force[i];
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const Phase grad = g[k].gradient(free.x[i], free.v[i]);
        d[i] = grad.x * dx[i] + grad.v * dv[i];
      }
    }
    for (int l = 1; l <= max_order; ++l) {
      double value = plan.estimator == ExperimentPlan::Estimator::u_statistic ? ustat_from_values(y, l)
                                                                             : first_tuple(y, l);
      if (response && response_has_zero_mean(l)) {
        std::vector<double> w = statistic_gradient(y, l, plan.estimator);
        for (std::size_t i = 0; i < n; ++i) w[i] *= d[i];
        value += sorted_sum(w);
      }
      out[k][static_cast<std::size_t>(l - 1)] = value;
    }
  }
  return out;
}

double combination(int m, int l) {
  double r = 1.0;
  for (int i = 1; i <= l; ++i) r = r * (m - l + i) / i;
  return r;
}

}  // namespace

std::vector<OrderSamples> order_samples(const ExperimentPlan& plan, const SimulationContext& ctx, std::size_t n,
                                        int max_order, std::span<const TestFunction> g,
                                        const std::function<std::uint64_t(std::size_t)>& seed_of) {
  if (ctx.reference == nullptr) throw std::invalid_argument("order_samples needs a mean-field reference");
  check_order(max_order, n);
  const std::size_t nt = plan.times.size();
  if (g.size() != nt) throw std::invalid_argument("order_samples: one observable per plan time is required");
  const bool coupled = plan.variance == ExperimentPlan::Variance::coupled;
  if (coupled && ctx.phase.sigma > 0.0)
    throw std::invalid_argument("plan.variance = coupled requires sigma = 0");
  const auto orders = static_cast<std::size_t>(max_order);

  std::vector<OrderSamples> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    out[k].y.assign(orders, std::vector<double>(plan.replicas, 0.0));
    out[k].offset.assign(orders, 0.0);
    if (coupled) {
      const double free_mean = ctx.reference->model().expect_free(g[k], plan.times[k]);
      for (std::size_t l = 0; l < orders; ++l) out[k].offset[l] = std::pow(free_mean, static_cast<double>(l + 1));
    }
  }
  std::vector<std::vector<std::vector<double>>> control(coupled ? plan.replicas : 0);
  run_replicas(ctx, n, plan.replicas, plan.times, plan.workers, seed_of,
               [&](std::size_t r, int k, const ParticleEnsemble& ens) {
                 if (k < 0) {
                   if (coupled) control[r] = coupled_terms(ens, ctx, plan, max_order, g);
                   return;
                 }
                 const auto kk = static_cast<std::size_t>(k);
                 std::vector<double> vals(ens.size());
                 for (std::size_t i = 0; i < ens.size(); ++i) vals[i] = g[kk](ens.x[i], ens.v[i]);
                 for (std::size_t l = 0; l < orders; ++l) {
                   const int order = static_cast<int>(l + 1);
                   double s = plan.estimator == ExperimentPlan::Estimator::u_statistic ? ustat_from_values(vals, order)
                                                                                      : first_tuple(vals, order);
                   if (coupled) s -= control[r][kk][l];
                   out[kk].y[l][r] = s;
                 }
               });
  return out;
}

std::vector<MomentEstimate> weak_error(const ExperimentPlan& plan, const SimulationContext& ctx) {
  if (ctx.reference == nullptr) throw std::invalid_argument("weak_error needs a mean-field reference");
  const MeanFieldReference& ref = *ctx.reference;
  plan.validate(ctx.phase.horizon);
  const std::size_t nt = plan.times.size();

  // U_m(psi) - mu^m = sum_{l>=1} C(m,l) mu^{m-l} U_l(psi - mu) holds identically for any mu.
  std::vector<double> mu(nt);
  std::vector<TestFunction> g;
  for (std::size_t k = 0; k < nt; ++k) {
    mu[k] = ref.expect(plan.psi, plan.times[k]).value;
    g.push_back(plan.psi.shifted(mu[k]));
  }

  std::vector<MomentEstimate> out;
  for (std::size_t n : plan.n_grid) {
    for (int m : plan.orders) {
      check_order(m, n);
      auto samples = order_samples(plan, ctx, n, m, g, [&](std::size_t r) {
        return derive_seed(plan.master_seed, {kWeakErrorStream, n, static_cast<std::uint64_t>(m), r});
      });
      for (std::size_t k = 0; k < nt; ++k) {
        MomentEstimate e;
        e.samples.assign(plan.replicas, 0.0);
        for (int l = 1; l <= m; ++l) {
          const double c = combination(m, l) * std::pow(mu[k], m - l);
          const auto li = static_cast<std::size_t>(l - 1);
          for (std::size_t r = 0; r < plan.replicas; ++r) e.samples[r] += c * samples[k].y[li][r];
          e.offset += c * samples[k].offset[li];
        }
        const ValueWithError mc = mean_and_error(e.samples);
        e.value = mc.value + e.offset;
        e.std_error = mc.std_error;
        e.replicas = plan.replicas;
        e.n = n;
        e.order = m;
        e.time = plan.times[k];
        e.reference_error = ref.moment(plan.psi, m, plan.times[k]).std_error;
        out.push_back(std::move(e));
      }
    }
  }
  // particle-oracle bias band, scaled from the smallest N of each (order, time) series
  if (!ref.is_exact()) {
    const double m_size = static_cast<double>(ref.oracle_size());
    for (auto& e : out) {
      for (const auto& base : out)
        if (base.order == e.order && base.time == e.time && base.n == plan.n_grid.front())
          e.reference_bias = std::abs(base.value) * static_cast<double>(base.n) / m_size;
    }
  }
  for (auto& e : out) e.reference_flagged = e.reference_error + e.reference_bias > 0.2 * std::abs(e.value);
  return out;
}

std::vector<MomentEstimate> kappa_pairing(const ExperimentPlan& plan, const SimulationContext& ctx, int n_order) {
  if (ctx.reference == nullptr) throw std::invalid_argument("kappa_pairing needs a mean-field reference");
  const MeanFieldReference& ref = *ctx.reference;
  plan.validate(ctx.phase.horizon);
  if (n_order < 1 || n_order > 4) throw std::invalid_argument("kappa_pairing: order must be in [1, 4]");
  const std::size_t nt = plan.times.size();

  std::vector<TestFunction> centered;
  for (double t : plan.times) {
    TestFunction g = center_observable(plan.psi, ref, t);
    const ValueWithError residual = ref.expect(g, t);
    if (std::abs(residual.value) + residual.std_error > kCenteringTolerance)
      throw std::runtime_error("kappa_pairing: centering residual exceeds 1e-8 (needs an exact reference)");
    centered.push_back(std::move(g));
  }

  std::vector<MomentEstimate> out;
  for (std::size_t n : plan.n_grid) {
    check_order(n_order, n);
    auto samples = order_samples(plan, ctx, n, n_order, centered, [&](std::size_t r) {
      return derive_seed(plan.master_seed, {kKappaStream, n, static_cast<std::uint64_t>(n_order), r});
    });
    const auto li = static_cast<std::size_t>(n_order - 1);
    for (std::size_t k = 0; k < nt; ++k) {
      MomentEstimate e;
      e.samples = std::move(samples[k].y[li]);
      e.offset = samples[k].offset[li];
      const ValueWithError mc = mean_and_error(e.samples);
      e.value = mc.value + e.offset;
      e.std_error = mc.std_error;
      e.replicas = plan.replicas;
      e.n = n;
      e.order = n_order;
      e.time = plan.times[k];
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace mfchaos

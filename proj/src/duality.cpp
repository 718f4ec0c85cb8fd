#include "mfchaos/duality.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mfchaos/parallel.hpp"
#include "mfchaos/quadrature.hpp"

namespace mfchaos {

namespace {

constexpr std::uint64_t kDualityStream = 3;
constexpr std::uint64_t kPropStream = 4;
constexpr std::size_t kTimeNodes = 8;
constexpr std::size_t kMaxPropParticles = 16;

void require_deterministic(const SimulationContext& ctx) {
  if (ctx.phase.sigma > 0.0) throw std::invalid_argument("duality checks need the deterministic flow (sigma = 0)");
}

void require_reference(const SimulationContext& ctx) {
  if (ctx.reference == nullptr) throw std::invalid_argument("duality check needs a mean-field reference");
}

double z_of(const MomentEstimate& a, const MomentEstimate& b) {
  const double diff = std::abs(a.value - b.value);
  const double se = std::hypot(a.std_error, b.std_error);
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

MomentEstimate summarize(std::vector<double> samples, std::size_t n, int order, double t, double offset = 0.0) {
  MomentEstimate e;
  const ValueWithError mc = mean_and_error(samples);
  e.value = mc.value + offset;
  e.offset = offset;
  e.std_error = mc.std_error;
  e.replicas = samples.size();
  e.n = n;
  e.order = order;
  e.time = t;
  e.samples = std::move(samples);
  return e;
}

double binom(std::size_t n, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > n) return 0.0;
  return static_cast<double>(binomial_exact(n, static_cast<std::uint64_t>(k)));
}

}  // namespace

void TerminalObservable::validate() const {
  if (n_particles < 2) throw std::invalid_argument("terminal observable needs N >= 2");
  if (m < 1 || m > 6) throw std::invalid_argument("terminal observable order must be in [1, 6]");
  if (static_cast<std::size_t>(m) > n_particles) throw std::invalid_argument("terminal observable order exceeds N");
}

double TerminalObservable::operator()(std::span<const Phase> z) const {
  if (z.size() != n_particles) throw std::invalid_argument("configuration size differs from N");
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) y[i] = psi(z[i].x, z[i].v);
  return ustat_from_values(y, m);
}

double TerminalObservable::operator()(const ParticleEnsemble& ens) const {
  if (ens.size() != n_particles) throw std::invalid_argument("configuration size differs from N");
  std::vector<double> y(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) y[i] = psi(ens.x[i], ens.v[i]);
  return ustat_from_values(y, m);
}

double backward_observable(const TerminalObservable& term, double t, std::span<const Phase> z,
                           const SimulationContext& ctx) {
  require_deterministic(ctx);
  term.validate();
  const double horizon = ctx.phase.horizon;
  if (t > horizon) throw std::invalid_argument("backward observable evaluated after the horizon");
  if (t == horizon) return term(z);
  return term(flow_map(z, t, horizon, ctx.kernel, ctx.integrator, 0.0));
}

DualityReport check_forward_duality(const TerminalObservable& term, const ExperimentPlan& plan,
                                    const SimulationContext& ctx, const IntegratorSpec& reference_flow) {
  require_deterministic(ctx);
  require_reference(ctx);
  term.validate();
  if (plan.replicas < 2) throw std::invalid_argument("plan.replicas must be >= 2");
  const std::size_t n = term.n_particles;
  const double horizon = ctx.phase.horizon;
  std::vector<double> lhs(plan.replicas), rhs(plan.replicas);
  IntegratorSpec forward = ctx.integrator;
  forward.direction = IntegratorSpec::Direction::forward;
  IntegratorSpec reference = reference_flow;
  reference.direction = IntegratorSpec::Direction::forward;
  parallel_for(plan.replicas, plan.workers, [&](std::size_t r) {
    Rng rng(derive_seed(plan.master_seed, {kDualityStream, n, static_cast<std::uint64_t>(term.m), r}));
    ParticleEnsemble ens = sample_chaotic(n, ctx.reference->model(), rng);
    ParticleEnsemble start = ens;
    Propagator(ctx.kernel, forward, 0.0).advance(ens, horizon);
    lhs[r] = term(ens);
    Propagator(ctx.kernel, reference, 0.0).advance(start, horizon);
    rhs[r] = term(start);
  });
  DualityReport rep;
  for (std::size_t r = 0; r < plan.replicas; ++r) rep.max_residual = std::max(rep.max_residual, std::abs(lhs[r] - rhs[r]));
  rep.lhs = summarize(std::move(lhs), n, term.m, horizon);
  rep.rhs = summarize(std::move(rhs), n, term.m, 0.0);
  rep.z_score = z_of(rep.lhs, rep.rhs);
  return rep;
}

double vf_pair_moment(const InteractionObservable& obs, const TestFunction& psi) {
  const DensityModel& f = obs.density();
  if (!f.is_steady()) throw std::invalid_argument("V_f moments need an analytic steady density");
  const QuadratureRule& xr = f.x_rule();
  const QuadratureRule& vr = f.v_rule();
  // V_f(z1, z2) = (K(x1 - x2) - K*f(x1)) score(z1) factorizes over the velocity integrals
  std::vector<double> a(xr.size(), 0.0), b(xr.size(), 0.0), mean_force(xr.size());
  for (std::size_t i = 0; i < xr.size(); ++i) {
    const double x = xr.nodes[i];
    for (std::size_t j = 0; j < vr.size(); ++j) {
      const double v = vr.nodes[j];
      const double w = vr.weights[j] * f.density(x, v) * psi(x, v);
      a[i] += w * f.score(x, v);
      b[i] += w;
    }
    mean_force[i] = f.convolve(obs.kernel(), x);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < xr.size(); ++i) {
    double inner = 0.0;
    for (std::size_t k = 0; k < xr.size(); ++k)
      inner += xr.weights[k] * (obs.kernel()(xr.nodes[i] - xr.nodes[k]) - mean_force[i]) * b[k];
    total += xr.weights[i] * a[i] * inner;
  }
  return total;
}

DualityReport check_prop_identity(const TerminalObservable& term, const ExperimentPlan& plan,
                                  const SimulationContext& ctx, std::size_t rhs_samples) {
  require_deterministic(ctx);
  require_reference(ctx);
  term.validate();
  const DensityModel& f = ctx.reference->model();
  if (!f.is_steady()) throw std::invalid_argument("the identity check needs an analytic steady density");
  const std::size_t n = term.n_particles;
  if (n > kMaxPropParticles) throw std::invalid_argument("the identity check is limited to N <= 16");
  if (rhs_samples < 2) throw std::invalid_argument("the identity check needs at least two samples");
  const double horizon = ctx.phase.horizon;
  const int m = term.m;

  ExperimentPlan lplan = plan;
  lplan.n_grid = {n};
  lplan.orders = {m};
  lplan.times = {horizon};
  lplan.psi = term.psi;
  const auto lhs = weak_error(lplan, ctx);

  const InteractionObservable obs(ctx.kernel, f);
  double cv_mean = 0.0;
  if (m >= 2) {
    const double mu = f.expect_initial(term.psi);
    cv_mean = binom(n - 2, m - 2) / binom(n, m) * std::pow(mu, m - 2) * vf_pair_moment(obs, term.psi);
  }
  // h_N(t, Z) = h^T(Phi_{0 -> T - t} Z) by autonomy, so one trajectory serves every node
  const QuadratureRule gl = gauss_legendre(kTimeNodes, 0.0, horizon);
  std::vector<std::size_t> order(gl.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gl.nodes[a] > gl.nodes[b]; });
  IntegratorSpec spec = ctx.integrator;
  spec.direction = IntegratorSpec::Direction::forward;

  std::vector<double> samples(rhs_samples);
  parallel_for(rhs_samples, plan.workers, [&](std::size_t r) {
    Rng rng(derive_seed(plan.master_seed, {kPropStream, n, static_cast<std::uint64_t>(m), r}));
    ParticleEnsemble ens = sample_chaotic(n, f, rng);
    double vbar = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) vbar += obs(ens.particle(i), ens.particle(j));
    vbar /= static_cast<double>(n * (n - 1));
    const double h0 = term(ens);
    Propagator prop(ctx.kernel, spec, 0.0);
    double acc = 0.0;
    for (std::size_t q : order) {
      prop.advance(ens, (horizon - gl.nodes[q]) - ens.t);
      acc += gl.weights[q] * (term(ens) - h0);
    }
    samples[r] = -static_cast<double>(n) * vbar * acc;
  });

  DualityReport rep;
  rep.lhs = lhs.front();
  rep.rhs = summarize(std::move(samples), n, m, horizon, -static_cast<double>(n) * horizon * cv_mean);
  rep.z_score = z_of(rep.lhs, rep.rhs);
  rep.max_residual = std::abs(rep.lhs.value - rep.rhs.value);
  return rep;
}

double terminal_dual_value(const TerminalObservable& term, int n, std::span<const Phase> z, double a) {
  if (n < 0 || static_cast<std::size_t>(n) > term.n_particles) throw std::invalid_argument("dual order out of range");
  if (z.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("dual cumulant arity mismatch");
  if (n > term.m) return 0.0;
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) y[i] = term.psi(z[i].x, z[i].v);
  double sum = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const int l = std::popcount(mask);
    double prod = std::pow(a, term.m - l) * (((n + l) % 2 == 0) ? 1.0 : -1.0);
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) prod *= y[static_cast<std::size_t>(i)];
    sum += prod;
  }
  return binom(static_cast<std::size_t>(term.m), n) / std::sqrt(binom(term.n_particles, n)) * sum;
}

CumulantTable terminal_dual_cumulants(const TerminalObservable& term, const PhaseGrid& grid) {
  term.validate();
  if (term.n_particles > 4) throw std::invalid_argument("grid dual cumulants are limited to N <= 4");
  double a = 0.0;
  for (std::size_t y = 0; y < grid.size(); ++y) a += grid.measure()[y] * term.psi(grid.nodes()[y].x, grid.nodes()[y].v);
  CumulantTable t;
  t.family = CumulantTable::Family::dual_C;
  t.rescaled = true;
  t.n_particles = term.n_particles;
  for (int n = 0; n <= static_cast<int>(term.n_particles); ++n)
    t.entries[n] = DiscreteFunction::from_function(
        n, grid, [&](std::span<const Phase> z) { return terminal_dual_value(term, n, z, a); });
  return t;
}

DualityReport check_cumulant_pairing_conservation(const TerminalObservable& term, const SimulationContext& ctx,
                                                  std::size_t nx, std::size_t nv, double tolerance) {
  require_deterministic(ctx);
  require_reference(ctx);
  term.validate();
  const DensityModel& f = ctx.reference->model();
  if (!f.is_steady()) throw std::invalid_argument("the conservation check needs an analytic steady density");
  const std::size_t n = term.n_particles;
  if (n > 3) throw std::invalid_argument("the conservation check is limited to N <= 3");
  const PhaseGrid grid = PhaseGrid::from_density(f, nx, nv);
  const int arity = static_cast<int>(n);
  const double horizon = ctx.phase.horizon;

  DiscreteFunction pushed(arity, grid.size()), initial(arity, grid.size()), h0(arity, grid.size());
  parallel_for(pushed.size(), 0, [&](std::size_t flat) {
    std::vector<std::size_t> idx(n);
    pushed.unflatten(flat, idx);
    std::vector<Phase> z(n);
    double f0 = 1.0;
    for (std::size_t s = 0; s < n; ++s) {
      z[s] = grid.nodes()[idx[s]];
      f0 *= grid.density()[idx[s]];
    }
    initial[flat] = f0;
    // volume preservation: F_N(T)(z) = f^{(x)N}(Phi_{T -> 0} z)
    const auto back = flow_map(z, horizon, 0.0, ctx.kernel, ctx.integrator, 0.0);
    double ft = 1.0;
    for (const auto& p : back) ft *= f.initial_density(p.x, p.v) / grid.normalization();
    pushed[flat] = ft;
    h0[flat] = term(flow_map(z, 0.0, horizon, ctx.kernel, ctx.integrator, 0.0));
  });

  const CumulantTable kappa_t = rescale(fn_to_kappa_table(pushed, grid), n);
  const CumulantTable dual_t = terminal_dual_cumulants(term, grid);
  const CumulantTable kappa_0 = rescale(fn_to_kappa_table(initial, grid), n);
  const CumulantTable dual_0 = rescale(h_to_dual_table(h0, grid), n);

  DualityReport rep;
  rep.lhs.value = cumulant_pairing(kappa_t, dual_t, grid);
  rep.lhs.time = horizon;
  rep.rhs.value = cumulant_pairing(kappa_0, dual_0, grid);
  rep.lhs.n = rep.rhs.n = n;
  rep.lhs.order = rep.rhs.order = term.m;
  rep.max_residual = std::abs(rep.lhs.value - rep.rhs.value);
  rep.tolerance = tolerance;
  rep.z_score = rep.max_residual / tolerance;
  return rep;
}

}  // namespace mfchaos

#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfchaos/duality.hpp"

using namespace mfchaos;

namespace {

const TrigKernel smooth2 = TrigKernel::smooth({{1, 0.5}, {2, 0.2}});
const DensityModel steady = DensityModel::steady(VelocityProfile::gaussian(1.0));

struct Fixture {
  PhaseConfig phase;
  IntegratorSpec spec{IntegratorSpec::Method::rk4, 1e-2};
  MeanFieldReference ref = build_reference(phase, steady, smooth2, spec, {0.5}, 1);
  SimulationContext ctx{phase, smooth2, spec, &ref, nullptr};
};

ExperimentPlan single(std::size_t n, std::size_t replicas, const TestFunction& psi, int m, std::uint64_t seed) {
  ExperimentPlan p;
  p.n_grid = {n};
  p.replicas = replicas;
  p.psi = psi;
  p.orders = {m};
  p.times = {0.5};
  p.master_seed = seed;
  return p;
}

}  // namespace

TEST_CASE("terminal observable") {
  TerminalObservable h{TestFunction::parse("v + cos(x)"), 2, 3};
  const std::vector<Phase> z{{0.1, 1.0}, {2.0, -0.5}, {4.0, 0.3}};
  auto g = [&](const Phase& p) { return p.v + std::cos(p.x); };
  const double want = (g(z[0]) * g(z[1]) + g(z[0]) * g(z[2]) + g(z[1]) * g(z[2])) / 3.0;
  CHECK(h(z) == doctest::Approx(want).epsilon(1e-14));

  CHECK_THROWS((TerminalObservable{TestFunction::parse("v"), 4, 3}.validate()));
  CHECK_THROWS((TerminalObservable{TestFunction::parse("v"), 0, 3}.validate()));
  CHECK_THROWS((TerminalObservable{TestFunction::parse("v"), 1, 1}.validate()));
  CHECK_NOTHROW((TerminalObservable{TestFunction::parse("v"), 6, 8}.validate()));
}

TEST_CASE("backward observable at the horizon is the terminal one") {
  Fixture fx;
  TerminalObservable h{TestFunction::parse("v^2"), 1, 4};
  const std::vector<Phase> z{{0.1, 1.0}, {2.0, -0.5}, {4.0, 0.3}, {5.5, 0.9}};
  CHECK(backward_observable(h, 0.5, z, fx.ctx) == doctest::Approx(h(z)).epsilon(1e-15));
  // kinetic energy is nearly constant, so h(0) stays close but differs
  const double h0 = backward_observable(h, 0.0, z, fx.ctx);
  CHECK(h0 != h(z));
  CHECK_THROWS(backward_observable(h, 0.75, z, fx.ctx));

  auto noisy = fx.ctx;
  noisy.phase.sigma = 0.1;
  CHECK_THROWS(backward_observable(h, 0.0, z, noisy));
}

TEST_CASE("forward duality is pathwise exact up to integrator error") {
  Fixture fx;
  TerminalObservable h{TestFunction::parse("v^2 + cos(x)"), 2, 5};
  auto ctx = fx.ctx;
  ctx.integrator = {IntegratorSpec::Method::rk4, 1e-3};
  const auto plan = single(5, 20, h.psi, 2, 9);
  const auto rep = check_forward_duality(h, plan, ctx, {IntegratorSpec::Method::rk4, 1e-4});
  CHECK(rep.max_residual <= 1e-8);
  CHECK(std::abs(rep.lhs.value - rep.rhs.value) <= rep.max_residual);

  ctx.integrator = {IntegratorSpec::Method::rk4, 0.1};
  const auto coarse = check_forward_duality(h, plan, ctx, {IntegratorSpec::Method::rk4, 1e-4});
  CHECK(coarse.max_residual > rep.max_residual);
}

TEST_CASE("interaction pair moment in closed form") {
  // psi = v sin x + cos x: only -theta E[K(x1 - x2) sin x1 cos x2] = -a_1 / 4 survives
  const InteractionObservable obs(smooth2, steady);
  CHECK(vf_pair_moment(obs, TestFunction::parse("v*sin(x) + cos(x)")) == doctest::Approx(-0.125).epsilon(1e-10));
  CHECK(std::abs(vf_pair_moment(obs, TestFunction::parse("v"))) < 1e-12);
  const InteractionObservable wide(smooth2, DensityModel::steady(VelocityProfile::gaussian(2.0)));
  CHECK(vf_pair_moment(wide, TestFunction::parse("v*sin(x) + cos(x)")) == doctest::Approx(-0.125).epsilon(1e-10));
}

TEST_CASE("terminal dual values") {
  const double a = 0.3;
  TerminalObservable h1{TestFunction::parse("cos(x)"), 1, 4};
  const std::vector<Phase> z{{0.4, 0.0}, {1.3, 0.0}};
  CHECK(terminal_dual_value(h1, 0, {}, a) == doctest::Approx(a));
  CHECK(terminal_dual_value(h1, 1, std::span(z).first(1), a) == doctest::Approx((std::cos(0.4) - a) / 2.0));
  CHECK(terminal_dual_value(h1, 2, z, a) == 0.0);

  // m = 2, n = 2: binom(N,2)^{-1/2} (psi_1 - a)(psi_2 - a)
  TerminalObservable h2{TestFunction::parse("cos(x)"), 2, 4};
  CHECK(terminal_dual_value(h2, 2, z, a) ==
        doctest::Approx((std::cos(0.4) - a) * (std::cos(1.3) - a) / std::sqrt(6.0)).epsilon(1e-14));
}

TEST_CASE("closed-form dual cumulants match the generic expansion") {
  const PhaseGrid grid = PhaseGrid::from_density(steady, 5, 3);
  for (int n_particles = 2; n_particles <= 3; ++n_particles)
    for (int m = 1; m <= n_particles; ++m) {
      TerminalObservable h{TestFunction::parse("v + cos(x) + 0.5*sin(2x)"), m, static_cast<std::size_t>(n_particles)};
      const auto closed = terminal_dual_cumulants(h, grid);
      const auto values = DiscreteFunction::from_function(n_particles, grid, [&](std::span<const Phase> z) { return h(z); });
      const auto generic = rescale(h_to_dual_table(values, grid), n_particles);
      for (const auto& [n, fn] : generic.entries) {
        REQUIRE(closed.entries.count(n) == 1);
        const auto& c = closed.entries.at(n);
        double err = 0.0;
        for (std::size_t i = 0; i < fn.size(); ++i) err = std::max(err, std::abs(fn[i] - c[i]));
        CHECK(err < 1e-12);
      }
    }
}

TEST_CASE("propagation identity on a small system") {
  Fixture fx;
  TerminalObservable h{TestFunction::parse("v^2"), 1, 4};
  const auto plan = single(4, 2000, h.psi, 1, 31);
  const auto rep = check_prop_identity(h, plan, fx.ctx, 4000);
  CHECK(std::abs(rep.z_score) < 3.0);
  CHECK(std::abs(rep.lhs.value) > 3 * rep.lhs.std_error);
}

TEST_CASE("cumulant pairing is conserved") {
  Fixture fx;
  TerminalObservable h{TestFunction::parse("cos(x) + v"), 1, 2};
  const auto rep = check_cumulant_pairing_conservation(h, fx.ctx, 6, 4);
  CHECK(rep.max_residual <= rep.tolerance);
  CHECK(std::abs(rep.lhs.value) > 0.0);
}

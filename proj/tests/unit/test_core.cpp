#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfchaos/density.hpp"
#include "mfchaos/kernel.hpp"
#include "mfchaos/meanfield.hpp"
#include "mfchaos/quadrature.hpp"
#include "mfchaos/rates.hpp"

using namespace mfchaos;

namespace {
const double pi = std::numbers::pi;
const TrigKernel smooth2 = TrigKernel::smooth({{1, 0.5}, {2, 0.2}});
}  // namespace

TEST_CASE("single mode kernel values") {
  const auto k = TrigKernel::smooth({{1, 1.0}});
  CHECK(kernel_eval(k, 0.0) == 0.0);
  CHECK(kernel_eval(k, pi / 2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("kernel is odd, periodic and mean free") {
  const auto rough = TrigKernel::rough(1.0, 32);
  const auto grid = periodic_trapezoid(1024);
  for (const auto* k : {&smooth2, &rough}) {
    double mean = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) mean += grid.weights[i] * (*k)(grid.nodes[i]);
    CHECK(std::abs(mean) < 1e-12);
    for (double x : {0.1, 1.3, 2.9, -4.2, 7.7}) {
      CHECK((*k)(x + kTwoPi) == doctest::Approx((*k)(x)).epsilon(1e-13));
      CHECK(std::abs((*k)(-x) + (*k)(x)) < 1e-14);
    }
  }
}

TEST_CASE("kernel is minus the potential gradient") {
  const double h = 1e-5;
  for (double x : {0.3, 1.7, 4.0}) {
    const double fd = -(smooth2.potential(x + h) - smooth2.potential(x - h)) / (2 * h);
    CHECK(std::abs(fd - smooth2(x)) < 1e-8);
  }
}

TEST_CASE("rough amplitudes follow the offset power law") {
  const auto k = TrigKernel::rough(1.0, 8);
  for (const auto& m : k.modes())
    CHECK(std::abs(m.amplitude) == doctest::Approx(std::pow(m.wavenumber, -1.55)).epsilon(1e-14));
}

TEST_CASE("mollification") {
  CHECK(kernel_mollify(smooth2, 0.0).modes()[0].amplitude == 0.5);
  const auto single = TrigKernel::smooth({{1, 1.0}});
  const double damped = kernel_mollify(single, 1.0).modes()[0].amplitude;
  CHECK(damped == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));

  // the same damping from a direct convolution with a unit Gaussian
  const auto gl = gauss_legendre(200, -12.0, 12.0);
  double conv = 0.0;
  const double x = 0.7;
  for (std::size_t i = 0; i < gl.size(); ++i)
    conv += gl.weights[i] * std::exp(-gl.nodes[i] * gl.nodes[i] / 2) / std::sqrt(2 * pi) * std::sin(x - gl.nodes[i]);
  CHECK(conv == doctest::Approx(damped * std::sin(x)).epsilon(1e-10));

  const auto rough = TrigKernel::rough(1.0, 32);
  double prev = 0.0;
  for (double d : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0}) {
    const double r = rough.mollification_remainder(d).l2_norm();
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("remainder norm decays like delta^s") {
  const auto rough = TrigKernel::rough(1.0, 4096);
  std::vector<RatePoint> pts;
  for (int e = 6; e >= 2; --e) {
    const double d = std::ldexp(1.0, -e);
    pts.push_back({d, rough.mollification_remainder(d).l2_norm(), 0.0});
  }
  const auto fit = fit_rate(pts);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("steady densities") {
  for (const auto& prof : {VelocityProfile::gaussian(1.0), VelocityProfile::gaussian(2.5), VelocityProfile::cosine_bump(2.0)}) {
    const auto f = DensityModel::steady(prof);
    CHECK(f.expect_initial(TestFunction::constant(1.0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(f.expect_initial(TestFunction::parse("sin(x)"))) < 1e-10);
    for (double x : {0.0, 1.0, 3.0}) CHECK(std::abs(f.convolve(smooth2, x)) < 1e-10);
  }
  const auto g = DensityModel::steady(VelocityProfile::gaussian(2.5));
  CHECK(g.expect_initial(TestFunction::parse("v^2")) == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(VelocityProfile::gaussian(2.5).fisher_information() == doctest::Approx(0.4).epsilon(1e-8));
  CHECK(std::isfinite(VelocityProfile::cosine_bump(2.0).fisher_information()));
}

TEST_CASE("interaction observable") {
  const auto f = DensityModel::steady(VelocityProfile::gaussian(1.0));
  const InteractionObservable obs(TrigKernel::smooth({{1, 1.0}}), f);
  CHECK(vf_eval(obs, {0.3, 0.0}, {2.0, 1.0}) == 0.0);
  CHECK(vf_eval(obs, {0.0, 1.0}, {pi / 2, 0.4}) == doctest::Approx(1.0).epsilon(1e-14));

  const InteractionObservable vf(smooth2, f, 0.3);
  const auto& xr = f.x_rule();
  const auto& vr = f.v_rule();
  const Phase fixed{1.1, 0.6};
  double slot2 = 0.0, slot1 = 0.0;
  for (std::size_t i = 0; i < xr.size(); ++i)
    for (std::size_t j = 0; j < vr.size(); ++j) {
      const Phase z{xr.nodes[i], vr.nodes[j]};
      const double w = xr.weights[i] * vr.weights[j] * f.density(z.x, z.v);
      slot2 += w * vf(fixed, z);
      slot1 += w * vf(z, fixed);
    }
  CHECK(std::abs(slot1) < 1e-8);
  CHECK(std::abs(slot2) < 1e-8);
  for (double x : {0.2, 2.2})
    CHECK(vf({x, 0.5}, fixed) == doctest::Approx(vf.mollified_part({x, 0.5}, fixed) + vf.remainder_part({x, 0.5}, fixed)));
}

TEST_CASE("reference expectations") {
  const auto f = DensityModel::steady(VelocityProfile::gaussian(1.0));
  IntegratorSpec spec;
  const auto ref = build_reference(PhaseConfig{}, f, smooth2, spec, {0.25, 0.5}, 1);
  CHECK(density_expect(ref, TestFunction::constant(1.0), 0.5).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(density_expect(ref, TestFunction::parse("sin(x)"), 0.25).value) < 1e-10);
  CHECK(weak_reference_moment(ref, TestFunction::parse("v^2"), 2, 0.5).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS(density_expect(ref, TestFunction::constant(1.0), 0.75));
}

TEST_CASE("diffusive steady reference spreads the velocities") {
  PhaseConfig phase;
  phase.sigma = 0.2;
  const auto f = DensityModel::steady(VelocityProfile::gaussian(1.0));
  IntegratorSpec spec{IntegratorSpec::Method::euler_maruyama, 1e-3};
  const auto ref = build_reference(phase, f, smooth2, spec, {0.5}, 1);
  // v^2 grows by 2 sigma t, v^4 = 3 (1 + 2 sigma t)^2
  CHECK(ref.expect(TestFunction::parse("v^2"), 0.5).value == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(ref.expect(TestFunction::parse("v^4"), 0.5).value == doctest::Approx(3 * 1.44).epsilon(1e-10));
}

TEST_CASE("particle oracle") {
  IntegratorSpec spec{IntegratorSpec::Method::rk4, 1e-2};
  const auto psi = TestFunction::parse("cos(x) + v^2");

  // eps = 0 is the steady state in disguise
  const auto flat = DensityModel::perturbed(VelocityProfile::gaussian(1.0), 0.0, 1, 20000);
  const auto oracle = build_reference(PhaseConfig{}, flat, smooth2, spec, {0.5}, 3);
  const auto e = oracle.expect(psi, 0.5);
  CHECK(e.std_error > 0.0);
  CHECK(std::abs(e.value - 1.0) < 3 * e.std_error);

  // free transport mixes the mode: int cos(x) f(t) = eps/2 exp(-theta t^2 / 2)
  const auto bump = DensityModel::perturbed(VelocityProfile::gaussian(1.0), 0.1, 1, 20000);
  const auto free = build_reference(PhaseConfig{}, bump, TrigKernel::zero(), spec, {0.25, 0.5}, 4);
  for (double t : {0.25, 0.5}) {
    const auto c = free.expect(TestFunction::parse("cos(x)"), t);
    CHECK(std::abs(c.value - 0.05 * std::exp(-t * t / 2)) < 3 * c.std_error);
    CHECK(bump.expect_free(TestFunction::parse("cos(x)"), t) == doctest::Approx(0.05 * std::exp(-t * t / 2)).epsilon(1e-10));
  }

  // four times the particles, half the error
  const auto big = build_reference(PhaseConfig{}, DensityModel::perturbed(VelocityProfile::gaussian(1.0), 0.0, 1, 80000),
                                   smooth2, spec, {0.5}, 3);
  CHECK(big.expect(psi, 0.5).std_error / e.std_error == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("phase config validation") {
  PhaseConfig p;
  CHECK_NOTHROW(p.validate());
  p.sigma = -1;
  CHECK_THROWS(p.validate());
  p = {};
  p.spatial_dim = 2;
  CHECK_THROWS(p.validate());
  p = {};
  p.horizon = 0;
  CHECK_THROWS(p.validate());
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mfchaos/dynamics.hpp"
#include "mfchaos/estimation.hpp"

using namespace mfchaos;

namespace {

const TrigKernel smooth2 = TrigKernel::smooth({{1, 0.5}, {2, 0.2}});

ParticleEnsemble random_ensemble(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(0.0, kTwoPi);
  std::normal_distribution<double> nv;
  ParticleEnsemble e;
  for (std::size_t i = 0; i < n; ++i) {
    e.x.push_back(ux(rng));
    e.v.push_back(nv(rng));
  }
  return e;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(a[i]));
  }
  return d / s;
}

}  // namespace

TEST_CASE("spectral and pairwise forces agree") {
  const auto rough = TrigKernel::rough(1.0, 32);
  for (std::size_t n : {2, 3, 17, 256}) {
    const auto e = random_ensemble(n, n);
    CHECK(rel_diff(force_direct(e, smooth2), force_spectral(e, smooth2)) < 1e-12);
    CHECK(rel_diff(force_direct(e, rough), force_spectral(e, rough)) < 1e-12);
  }
}

TEST_CASE("two particle force by hand") {
  ParticleEnsemble e;
  e.x = {0.0, 1.0};
  e.v = {0.0, 0.0};
  const auto f = force_spectral(e, smooth2);
  CHECK(f[0] == doctest::Approx(smooth2(-1.0)).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(smooth2(1.0)).epsilon(1e-14));
}

TEST_CASE("forces follow the particles under relabelling, bit for bit") {
  auto e = random_ensemble(300, 9);
  const auto f = force_spectral(e, smooth2);
  std::vector<std::size_t> perm(e.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), Rng(4));
  ParticleEnsemble p;
  for (auto i : perm) {
    p.x.push_back(e.x[i]);
    p.v.push_back(e.v[i]);
  }
  const auto g = force_spectral(p, smooth2);
  for (std::size_t k = 0; k < perm.size(); ++k) CHECK(g[k] == f[perm[k]]);
}

TEST_CASE("free transport is exact") {
  auto e = random_ensemble(20, 3);
  const auto start = e;
  Propagator(TrigKernel::zero(), {IntegratorSpec::Method::rk4, 1e-2}, 0.0).advance(e, 0.5);
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(e.v[i] == start.v[i]);
    const double expect = wrap_torus(start.x[i] + 0.5 * start.v[i]);
    const double d = std::abs(e.x[i] - expect);
    CHECK(std::min(d, kTwoPi - d) < 1e-12);
  }
  CHECK(e.t == doctest::Approx(0.5));
}

TEST_CASE("energy and momentum are conserved") {
  auto e = random_ensemble(256, 5);
  const auto d0 = diagnostics(e, smooth2);
  Propagator prop(smooth2, {IntegratorSpec::Method::rk4, 1e-3}, 0.0);
  double prev = d0.momentum;
  double worst_step = 0.0;
  for (int s = 0; s < 200; ++s) {
    prop.step(e);
    const double p = diagnostics(e, smooth2).momentum;
    worst_step = std::max(worst_step, std::abs(p - prev));
    prev = p;
  }
  CHECK(std::abs(diagnostics(e, smooth2).energy - d0.energy) / std::abs(d0.energy) < 1e-8);
  CHECK(worst_step < 1e-12);
}

TEST_CASE("verlet keeps energy bounded") {
  auto e = random_ensemble(64, 6);
  const auto d0 = diagnostics(e, smooth2);
  Propagator(smooth2, {IntegratorSpec::Method::velocity_verlet, 1e-3}, 0.0).advance(e, 1.0);
  CHECK(std::abs(diagnostics(e, smooth2).energy - d0.energy) / std::abs(d0.energy) < 1e-5);
}

TEST_CASE("flow map runs backwards") {
  const auto e = random_ensemble(8, 11);
  std::vector<Phase> z;
  for (std::size_t i = 0; i < e.size(); ++i) z.push_back(e.particle(i));
  const IntegratorSpec spec{IntegratorSpec::Method::rk4, 1e-3};
  const auto fwd = flow_map(z, 0.0, 0.5, smooth2, spec);
  const auto back = flow_map(fwd, 0.5, 0.0, smooth2, spec);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double dx = std::abs(back[i].x - z[i].x);
    CHECK(std::min(dx, kTwoPi - dx) < 1e-10);
    CHECK(std::abs(back[i].v - z[i].v) < 1e-10);
  }
}

TEST_CASE("rk4 converges at fourth order") {
  const auto e = random_ensemble(6, 12);
  const auto run = [&](double dt) {
    auto c = e;
    Propagator(smooth2, {IntegratorSpec::Method::rk4, dt}, 0.0).advance(c, 0.5);
    return c;
  };
  const auto fine = run(1e-4);
  const auto err = [&](const ParticleEnsemble& c) {
    double m = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) m = std::max(m, std::abs(c.v[i] - fine.v[i]));
    return m;
  };
  const double ratio = err(run(0.05)) / err(run(0.025));
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("integrator specs are validated") {
  IntegratorSpec rk{IntegratorSpec::Method::rk4, 1e-3};
  CHECK_NOTHROW(rk.validate(0.0));
  CHECK_THROWS(rk.validate(0.1));
  IntegratorSpec em{IntegratorSpec::Method::euler_maruyama, 1e-3};
  CHECK_THROWS(em.validate(0.0));
  CHECK_NOTHROW(em.validate(0.1));
  em.direction = IntegratorSpec::Direction::backward;
  CHECK_THROWS(em.validate(0.1));
  rk.dt = 0.0;
  CHECK_THROWS(rk.validate(0.0));
  ParticleEnsemble bad;
  bad.x = {0.0, 7.0};
  bad.v = {0.0, 0.0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("euler-maruyama velocity variance grows like 2 sigma t") {
  const double sigma = 0.5;
  Propagator prop(TrigKernel::zero(), {IntegratorSpec::Method::euler_maruyama, 1e-2}, sigma);
  Rng rng(21);
  ParticleEnsemble e;
  e.x.assign(20000, 1.0);
  e.v.assign(20000, 0.0);
  prop.advance(e, 1.0, &rng);
  double m2 = 0.0;
  for (double v : e.v) m2 += v * v;
  m2 /= static_cast<double>(e.size());
  // var of the sample second moment: 2 (2 sigma t)^2 / n
  CHECK(std::abs(m2 - 2 * sigma) < 3 * std::sqrt(2.0 / 20000) * 2 * sigma);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, {1, 64, 1, 0}) != derive_seed(1, {1, 64, 1, 1}));
  CHECK(derive_seed(1, {1, 64, 1, 0}) != derive_seed(2, {1, 64, 1, 0}));
  CHECK(derive_seed(1, {1, 64, 1, 0}) == derive_seed(1, {1, 64, 1, 0}));
}

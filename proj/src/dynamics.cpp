#include "mfchaos/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace mfchaos {

namespace {

// Mode sums are accumulated as integers in units of 2^-51 so the result is
// independent of summation order. Blocks of 2048 terms fit in 63 bits.
constexpr double kFixedScale = 2251799813685248.0;  // 2^51
constexpr double kFixedInv = 1.0 / kFixedScale;
constexpr std::size_t kFixedBlock = 2048;

void require_pairs(std::size_t n) {
  if (n < 2) throw std::invalid_argument("interacting ensemble needs N >= 2");
}

}  // namespace

void ParticleEnsemble::validate() const {
  if (x.size() != v.size()) throw std::invalid_argument("ensemble x and v sizes differ");
  require_pairs(x.size());
  for (double xi : x)
    if (!(xi >= 0.0 && xi < kTwoPi)) throw std::invalid_argument("ensemble positions must lie in [0, 2pi)");
}

void IntegratorSpec::validate(double sigma) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrator dt must be > 0");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (sigma > 0.0 && method != Method::euler_maruyama)
    throw std::invalid_argument("sigma > 0 requires the euler_maruyama method");
  if (sigma == 0.0 && method == Method::euler_maruyama)
    throw std::invalid_argument("euler_maruyama requires sigma > 0; use rk4 or velocity_verlet");
  if (direction == Direction::backward && sigma > 0.0)
    throw std::invalid_argument("backward integration requires sigma = 0");
}

std::vector<double> force_direct(const ParticleEnsemble& ens, const TrigKernel& kernel) {
  const std::size_t n = ens.size();
  require_pairs(n);
  std::vector<double> a(n, 0.0);
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += kernel(ens.x[i] - ens.x[j]);
    a[i] = scale * sum;
  }
  return a;
}

std::vector<double> force_spectral(const ParticleEnsemble& ens, const TrigKernel& kernel) {
  require_pairs(ens.size());
  Propagator prop(kernel, IntegratorSpec{}, 0.0);
  std::vector<double> a(ens.size());
  prop.compute_forces(ens.x, a);
  return a;
}

Propagator::Propagator(TrigKernel kernel, IntegratorSpec spec, double sigma)
    : kernel_(std::move(kernel)), spec_(spec), sigma_(sigma) {
  spec_.validate(sigma_);
  amp_.assign(static_cast<std::size_t>(kernel_.is_zero() ? 0 : kernel_.max_wavenumber()), 0.0);
  for (const auto& m : kernel_.modes()) amp_[static_cast<std::size_t>(m.wavenumber - 1)] += m.amplitude;
}

void Propagator::compute_forces(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  cos1_.resize(n);
  sin1_.resize(n);
  for (std::size_t j = 0; j < n; ++j) ::sincos(x[j], &sin1_[j], &cos1_[j]);
  forces_from_trig(cos1_, sin1_, out);
}

void Propagator::forces_from_trig(std::span<const double> c1, std::span<const double> s1, std::span<double> out) {
  const std::size_t n = c1.size();
  require_pairs(n);
  const std::size_t kmax = amp_.size();
  if (kmax == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  ck_.resize(kmax);
  sk_.resize(kmax);
  curc_.assign(c1.begin(), c1.end());
  curs_.assign(s1.begin(), s1.end());
  // mode by mode: exact fixed-point sums of cos(k x_j), sin(k x_j), then advance k -> k + 1
  for (std::size_t k = 0; k < kmax; ++k) {
    __int128 cacc = 0, sacc = 0;
    for (std::size_t lo = 0; lo < n; lo += kFixedBlock) {
      const std::size_t hi = std::min(n, lo + kFixedBlock);
      std::int64_t cb = 0, sb = 0;
      for (std::size_t j = lo; j < hi; ++j) {
        cb += static_cast<std::int64_t>(curc_[j] * kFixedScale);
        sb += static_cast<std::int64_t>(curs_[j] * kFixedScale);
      }
      cacc += cb;
      sacc += sb;
    }
    ck_[k] = amp_[k] * (static_cast<double>(cacc) * kFixedInv);
    sk_[k] = amp_[k] * (static_cast<double>(sacc) * kFixedInv);
    if (k + 1 < kmax) {
      for (std::size_t j = 0; j < n; ++j) {
        const double cn = curc_[j] * c1[j] - curs_[j] * s1[j];
        curs_[j] = curs_[j] * c1[j] + curc_[j] * s1[j];
        curc_[j] = cn;
      }
    }
  }
  const double scale = 1.0 / static_cast<double>(n - 1);
  curc_.assign(c1.begin(), c1.end());
  curs_.assign(s1.begin(), s1.end());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < kmax; ++k) {
    const double ck = ck_[k], sk = sk_[k];
    for (std::size_t j = 0; j < n; ++j) out[j] += curs_[j] * ck - curc_[j] * sk;
    if (k + 1 < kmax) {
      for (std::size_t j = 0; j < n; ++j) {
        const double cn = curc_[j] * c1[j] - curs_[j] * s1[j];
        curs_[j] = curs_[j] * c1[j] + curc_[j] * s1[j];
        curc_[j] = cn;
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) out[j] *= scale;
}

void Propagator::rotate_trig(std::span<const double> shift) {
  // cos/sin of (x + shift) from the stored cos/sin of x by angle addition
  const std::size_t n = shift.size();
  bool large = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = shift[i];
    const double d2 = d * d;
    // Taylor series through d^11 / d^10; truncation < 1e-18 for |d| <= 0.1
    const double sd = d * (1.0 - d2 * (1.0 / 6) * (1.0 - d2 * (1.0 / 20) * (1.0 - d2 * (1.0 / 42) * (1.0 - d2 * (1.0 / 72) * (1.0 - d2 * (1.0 / 110))))));
    const double cd = 1.0 - d2 * 0.5 * (1.0 - d2 * (1.0 / 12) * (1.0 - d2 * (1.0 / 30) * (1.0 - d2 * (1.0 / 56) * (1.0 - d2 * (1.0 / 90)))));
    cos1_[i] = c0_[i] * cd - s0_[i] * sd;
    sin1_[i] = s0_[i] * cd + c0_[i] * sd;
    large |= d2 > 0.01;
  }
  if (!large) return;
  for (std::size_t i = 0; i < n; ++i) {
    if (shift[i] * shift[i] <= 0.01) continue;
    double sd, cd;
    ::sincos(shift[i], &sd, &cd);
    cos1_[i] = c0_[i] * cd - s0_[i] * sd;
    sin1_[i] = s0_[i] * cd + c0_[i] * sd;
  }
}

void Propagator::rk4_step(ParticleEnsemble& ens, double h) {
  const std::size_t n = ens.size();
  a1_.resize(n);
  a2_.resize(n);
  a3_.resize(n);
  a4_.resize(n);
  xs_.resize(n);
  c0_.resize(n);
  s0_.resize(n);
  cos1_.resize(n);
  sin1_.resize(n);
  for (std::size_t i = 0; i < n; ++i) ::sincos(ens.x[i], &s0_[i], &c0_[i]);
  forces_from_trig(c0_, s0_, a1_);
  for (std::size_t i = 0; i < n; ++i) xs_[i] = 0.5 * h * ens.v[i];
  rotate_trig(xs_);
  forces_from_trig(cos1_, sin1_, a2_);
  for (std::size_t i = 0; i < n; ++i) xs_[i] = 0.5 * h * (ens.v[i] + 0.5 * h * a1_[i]);
  rotate_trig(xs_);
  forces_from_trig(cos1_, sin1_, a3_);
  for (std::size_t i = 0; i < n; ++i) xs_[i] = h * (ens.v[i] + 0.5 * h * a2_[i]);
  rotate_trig(xs_);
  forces_from_trig(cos1_, sin1_, a4_);
  const double h26 = h * h / 6.0;
  const double h6 = h / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    ens.x[i] = wrap_torus(ens.x[i] + h * ens.v[i] + h26 * (a1_[i] + a2_[i] + a3_[i]));
    ens.v[i] += h6 * (a1_[i] + 2.0 * a2_[i] + 2.0 * a3_[i] + a4_[i]);
  }
}

void Propagator::verlet_step(ParticleEnsemble& ens, double h) {
  const std::size_t n = ens.size();
  a1_.resize(n);
  compute_forces(ens.x, a1_);
  for (std::size_t i = 0; i < n; ++i) {
    ens.v[i] += 0.5 * h * a1_[i];
    ens.x[i] = wrap_torus(ens.x[i] + h * ens.v[i]);
  }
  compute_forces(ens.x, a1_);
  for (std::size_t i = 0; i < n; ++i) ens.v[i] += 0.5 * h * a1_[i];
}

void Propagator::euler_maruyama_step(ParticleEnsemble& ens, double h, Rng& rng) {
  const std::size_t n = ens.size();
  a1_.resize(n);
  compute_forces(ens.x, a1_);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double amp = std::sqrt(2.0 * sigma_ * h);
  for (std::size_t i = 0; i < n; ++i) {
    ens.x[i] = wrap_torus(ens.x[i] + h * ens.v[i]);
    ens.v[i] += h * a1_[i] + amp * normal(rng);
  }
}

void Propagator::step(ParticleEnsemble& ens, Rng* rng) {
  const double h = spec_.signed_dt();
  switch (spec_.method) {
    case IntegratorSpec::Method::rk4: rk4_step(ens, h); break;
    case IntegratorSpec::Method::velocity_verlet: verlet_step(ens, h); break;
    case IntegratorSpec::Method::euler_maruyama:
      if (rng == nullptr) throw std::invalid_argument("euler_maruyama step needs an RNG");
      euler_maruyama_step(ens, h, *rng);
      break;
  }
  ens.t += h;
}

void Propagator::advance(ParticleEnsemble& ens, double duration, Rng* rng) {
  if (duration == 0.0) return;
  if (duration < 0.0 && sigma_ > 0.0) throw std::invalid_argument("backward integration requires sigma = 0");
  const double steps_real = std::abs(duration) / spec_.dt;
  const auto steps = static_cast<long>(std::max(1.0, std::ceil(steps_real - 1e-9)));
  const double h = duration / static_cast<double>(steps);
  const double t_end = ens.t + duration;
  for (long s = 0; s < steps; ++s) {
    switch (spec_.method) {
      case IntegratorSpec::Method::rk4: rk4_step(ens, h); break;
      case IntegratorSpec::Method::velocity_verlet: verlet_step(ens, h); break;
      case IntegratorSpec::Method::euler_maruyama:
        if (rng == nullptr) throw std::invalid_argument("euler_maruyama step needs an RNG");
        euler_maruyama_step(ens, h, *rng);
        break;
    }
  }
  ens.t = t_end;
}

ParticleEnsemble step(ParticleEnsemble ens, const TrigKernel& kernel, const IntegratorSpec& spec, double sigma,
                      Rng& rng) {
  Propagator prop(kernel, spec, sigma);
  prop.step(ens, &rng);
  return ens;
}

std::vector<Phase> flow_map(std::span<const Phase> points, double t0, double t1, const TrigKernel& kernel,
                            const IntegratorSpec& spec, double sigma) {
  if (sigma > 0.0) throw std::invalid_argument("flow_map requires sigma = 0");
  std::vector<Phase> out(points.begin(), points.end());
  if (t1 == t0) return out;
  ParticleEnsemble ens;
  ens.x.reserve(points.size());
  ens.v.reserve(points.size());
  for (const auto& z : points) {
    ens.x.push_back(wrap_torus(z.x));
    ens.v.push_back(z.v);
  }
  ens.t = t0;
  IntegratorSpec s = spec;
  s.direction = t1 > t0 ? IntegratorSpec::Direction::forward : IntegratorSpec::Direction::backward;
  Propagator prop(kernel, s, 0.0);
  prop.advance(ens, t1 - t0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {ens.x[i], ens.v[i]};
  return out;
}

Diagnostics diagnostics(const ParticleEnsemble& ens, const TrigKernel& kernel) {
  const std::size_t n = ens.size();
  require_pairs(n);
  Diagnostics d;
  double kinetic = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    kinetic += 0.5 * ens.v[i] * ens.v[i];
    d.momentum += ens.v[i];
  }
  // sum_{i != j} cos(k(x_i - x_j)) = C_k^2 + S_k^2 - N
  double pair = 0.0;
  for (const auto& m : kernel.modes()) {
    double c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c += std::cos(m.wavenumber * ens.x[i]);
      s += std::sin(m.wavenumber * ens.x[i]);
    }
    pair += m.amplitude / m.wavenumber * (c * c + s * s - static_cast<double>(n));
  }
  d.energy = kinetic + pair / (2.0 * static_cast<double>(n - 1));
  return d;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t tag : tags) h = splitmix64(h ^ splitmix64(tag));
  return h;
}

void dump_trajectory(std::ostream& os, const ParticleEnsemble& ens) {
  char buf[160];
  for (std::size_t i = 0; i < ens.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%zu,%.17g,%.17g\n", static_cast<unsigned long long>(ens.replica_id),
                  ens.t, i, ens.x[i], ens.v[i]);
    os << buf;
  }
}

}  // namespace mfchaos

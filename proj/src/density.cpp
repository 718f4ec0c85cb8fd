#include "mfchaos/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace mfchaos {

namespace {
constexpr std::size_t kDefaultXNodes = 256;
constexpr std::size_t kDefaultVNodes = 200;
}  // namespace

VelocityProfile VelocityProfile::gaussian(double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("gaussian profile needs theta > 0");
  VelocityProfile p;
  p.kind_ = Kind::gaussian;
  p.theta_ = theta;
  return p;
}

VelocityProfile VelocityProfile::cosine_bump(double half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("cosine bump needs half_width > 0");
  VelocityProfile p;
  p.kind_ = Kind::cosine_bump;
  p.half_width_ = half_width;
  return p;
}

double VelocityProfile::pdf(double v) const {
  if (kind_ == Kind::gaussian) return std::exp(-0.5 * v * v / theta_) / std::sqrt(kTwoPi * theta_);
  if (std::abs(v) > half_width_) return 0.0;
  return (1.0 + std::cos(std::numbers::pi * v / half_width_)) / (2.0 * half_width_);
}

double VelocityProfile::score(double v) const {
  if (kind_ == Kind::gaussian) return -v / theta_;
  if (std::abs(v) >= half_width_) return v > 0 ? -std::numeric_limits<double>::infinity()
                                               : std::numeric_limits<double>::infinity();
  return -(std::numbers::pi / half_width_) * std::tan(0.5 * std::numbers::pi * v / half_width_);
}

double VelocityProfile::sample(Rng& rng) const {
  if (kind_ == Kind::gaussian) {
    std::normal_distribution<double> normal(0.0, std::sqrt(theta_));
    return normal(rng);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (true) {
    const double v = half_width_ * (2.0 * unit(rng) - 1.0);
    if (2.0 * unit(rng) <= 1.0 + std::cos(std::numbers::pi * v / half_width_)) return v;
  }
}

QuadratureRule VelocityProfile::default_rule() const {
  if (kind_ == Kind::gaussian) {
    const double vmax = 8.0 * std::sqrt(theta_);
    return trapezoid(kDefaultVNodes, -vmax, vmax);
  }
  return gauss_legendre(kDefaultVNodes, -half_width_, half_width_);
}

QuadratureRule VelocityProfile::gauss_rule(std::size_t n) const {
  if (kind_ == Kind::cosine_bump) return gauss_legendre(n, -half_width_, half_width_);
  QuadratureRule rule = gauss_hermite_probability(n, theta_);
  for (std::size_t i = 0; i < rule.size(); ++i) rule.weights[i] /= pdf(rule.nodes[i]);
  return rule;
}

double VelocityProfile::fisher_information() const {
  const QuadratureRule rule = default_rule();
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double p = pdf(rule.nodes[i]);
    if (p <= 0.0) continue;
    const double s = score(rule.nodes[i]);
    sum += rule.weights[i] * s * s * p;
  }
  return sum;
}

std::string VelocityProfile::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::gaussian) os << "gaussian(theta=" << theta_ << ")";
  else os << "cosine_bump(L=" << half_width_ << ")";
  return os.str();
}

DensityModel::DensityModel(Kind kind, VelocityProfile profile, double epsilon, int mode,
                           std::size_t oracle_size)
    : kind_(kind),
      profile_(profile),
      epsilon_(epsilon),
      mode_(mode),
      oracle_size_(oracle_size),
      x_rule_(periodic_trapezoid(kDefaultXNodes)),
      v_rule_(profile.default_rule()) {}

DensityModel DensityModel::steady(VelocityProfile profile) {
  return DensityModel(Kind::analytic_steady, profile, 0.0, 1, 0);
}

DensityModel DensityModel::perturbed(VelocityProfile profile, double epsilon, int mode,
                                     std::size_t oracle_size) {
  if (!(std::abs(epsilon) < 1.0)) throw std::invalid_argument("perturbation epsilon must satisfy |eps| < 1");
  if (mode < 1) throw std::invalid_argument("perturbation mode must be >= 1");
  if (oracle_size < 2) throw std::invalid_argument("oracle size must be >= 2");
  return DensityModel(Kind::perturbed_oracle, profile, epsilon, mode, oracle_size);
}

double DensityModel::initial_density(double x, double v) const {
  return (1.0 + epsilon_ * std::cos(mode_ * x)) / kTwoPi * profile_.pdf(v);
}

double DensityModel::density(double x, double v) const {
  if (!is_steady()) throw std::logic_error("density(): closed form only for analytic_steady models");
  return initial_density(x, v);
}

double DensityModel::score(double /*x*/, double v) const {
  if (!is_steady()) throw std::logic_error("score(): closed form only for analytic_steady models");
  return profile_.score(v);
}

double DensityModel::convolve(const TrigKernel& kernel, double x) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < x_rule_.size(); ++j) {
    const double xb = x_rule_.nodes[j];
    const double rho = (1.0 + epsilon_ * std::cos(mode_ * xb)) / kTwoPi;
    sum += x_rule_.weights[j] * kernel(x - xb) * rho;
  }
  return sum;
}

double DensityModel::expect_initial(const TestFunction& psi) const {
  double total = 0.0;
  for (std::size_t i = 0; i < x_rule_.size(); ++i) {
    const double x = x_rule_.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < v_rule_.size(); ++j) {
      const double v = v_rule_.nodes[j];
      inner += v_rule_.weights[j] * initial_density(x, v) * psi(x, v);
    }
    total += x_rule_.weights[i] * inner;
  }
  return total;
}

double DensityModel::expect_free(const TestFunction& psi, double t) const {
  double total = 0.0;
  for (std::size_t i = 0; i < x_rule_.size(); ++i) {
    const double x = x_rule_.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < v_rule_.size(); ++j) {
      const double v = v_rule_.nodes[j];
      inner += v_rule_.weights[j] * initial_density(x, v) * psi(x + v * t, v);
    }
    total += x_rule_.weights[i] * inner;
  }
  return total;
}

Phase DensityModel::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Phase z;
  if (epsilon_ == 0.0) {
    z.x = kTwoPi * unit(rng);
  } else {
    const double bound = 1.0 + std::abs(epsilon_);
    while (true) {
      const double x = kTwoPi * unit(rng);
      if (bound * unit(rng) <= 1.0 + epsilon_ * std::cos(mode_ * x)) {
        z.x = x;
        break;
      }
    }
  }
  z.x = wrap_torus(z.x);
  z.v = profile_.sample(rng);
  return z;
}

std::string DensityModel::describe() const {
  std::ostringstream os;
  if (is_steady()) os << "steady[" << profile_.describe() << "]";
  else os << "perturbed[" << profile_.describe() << ", eps=" << epsilon_ << ", mode=" << mode_
          << ", M=" << oracle_size_ << "]";
  return os.str();
}

InteractionObservable::InteractionObservable(TrigKernel kernel, DensityModel density, double delta)
    : kernel_(std::move(kernel)),
      smoothed_(kernel_.mollified(delta)),
      remainder_(kernel_.mollification_remainder(delta)),
      density_(std::move(density)),
      delta_(delta),
      homogeneous_(density_.is_steady()) {
  if (!density_.is_steady())
    throw std::invalid_argument("V_f needs a closed-form score: density must be analytic_steady");
}

// For the spatially uniform steady state K*f vanishes identically.
double InteractionObservable::mean_force(double x) const {
  return homogeneous_ ? 0.0 : density_.convolve(kernel_, x);
}

double InteractionObservable::operator()(const Phase& z, const Phase& zp) const {
  return (kernel_(z.x - zp.x) - mean_force(z.x)) * density_.score(z.x, z.v);
}

double InteractionObservable::mollified_part(const Phase& z, const Phase& zp) const {
  return (smoothed_(z.x - zp.x) - mean_force(z.x)) * density_.score(z.x, z.v);
}

double InteractionObservable::remainder_part(const Phase& z, const Phase& zp) const {
  return remainder_(z.x - zp.x) * density_.score(z.x, z.v);
}

}  // namespace mfchaos

#include "mfchaos/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace mfchaos {

namespace {

std::vector<KernelMode> normalize_modes(const std::vector<KernelMode>& modes) {
  std::map<int, double> merged;
  for (const auto& m : modes) {
    if (m.wavenumber <= 0) throw std::invalid_argument("kernel wavenumbers must be positive");
    if (!std::isfinite(m.amplitude)) throw std::invalid_argument("kernel amplitudes must be finite");
    merged[m.wavenumber] += m.amplitude;
  }
  std::vector<KernelMode> out;
  out.reserve(merged.size());
  for (const auto& [k, a] : merged) out.push_back({k, a});
  return out;
}

}  // namespace

TrigKernel::TrigKernel(std::vector<KernelMode> modes, Regularity regularity, double rough_exponent,
                       double mollification)
    : modes_(normalize_modes(modes)),
      regularity_(regularity),
      rough_exponent_(rough_exponent),
      mollification_(mollification) {
  if (!(mollification_ >= 0.0)) throw std::invalid_argument("mollification width must be >= 0");
}

TrigKernel TrigKernel::smooth(std::vector<KernelMode> modes) {
  return TrigKernel(std::move(modes), Regularity::smooth);
}

TrigKernel TrigKernel::rough(double s, int n_modes) {
  if (!(s > 0.0)) throw std::invalid_argument("rough kernel exponent must be > 0");
  if (n_modes < 1) throw std::invalid_argument("rough kernel needs at least one mode");
  std::vector<KernelMode> modes;
  modes.reserve(static_cast<std::size_t>(n_modes));
  for (int k = 1; k <= n_modes; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    modes.push_back({k, sign * std::pow(static_cast<double>(k), -(s + 0.55))});
  }
  return TrigKernel(std::move(modes), Regularity::rough, s);
}

double TrigKernel::operator()(double x) const {
  double sum = 0.0;
  for (const auto& m : modes_) sum += m.amplitude * std::sin(m.wavenumber * x);
  return sum;
}

double TrigKernel::potential(double x) const {
  double sum = 0.0;
  for (const auto& m : modes_) sum += m.amplitude / m.wavenumber * std::cos(m.wavenumber * x);
  return sum;
}

int TrigKernel::max_wavenumber() const { return modes_.empty() ? 0 : modes_.back().wavenumber; }

bool TrigKernel::is_zero() const {
  return std::all_of(modes_.begin(), modes_.end(), [](const KernelMode& m) { return m.amplitude == 0.0; });
}

TrigKernel TrigKernel::mollified(double delta) const {
  if (!(delta >= 0.0)) throw std::invalid_argument("mollification width must be >= 0");
  if (delta == 0.0) return *this;
  TrigKernel out = *this;
  for (auto& m : out.modes_) {
    const double dk = delta * m.wavenumber;
    m.amplitude *= std::exp(-0.5 * dk * dk);
  }
  out.mollification_ = delta;
  return out;
}

TrigKernel TrigKernel::mollification_remainder(double delta) const {
  if (!(delta >= 0.0)) throw std::invalid_argument("mollification width must be >= 0");
  TrigKernel out = *this;
  for (auto& m : out.modes_) {
    const double dk = delta * m.wavenumber;
    // -expm1 keeps the small-delta remainder accurate
    m.amplitude *= -std::expm1(-0.5 * dk * dk);
  }
  out.mollification_ = 0.0;
  return out;
}

double TrigKernel::l2_norm() const {
  double s = 0.0;
  for (const auto& m : modes_) s += m.amplitude * m.amplitude;
  return std::sqrt(std::numbers::pi * s);
}

std::string TrigKernel::describe() const {
  std::ostringstream os;
  if (regularity_ == Regularity::rough) {
    os << "rough(s=" << rough_exponent_ << ", modes=" << modes_.size() << ")";
  } else if (is_zero()) {
    os << "zero";
  } else {
    os << "smooth(";
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (i) os << ", ";
      os << modes_[i].wavenumber << ":" << modes_[i].amplitude;
    }
    os << ")";
  }
  if (mollification_ > 0.0) os << "*delta=" << mollification_;
  return os.str();
}

TrigKernel kernel_mollify(const TrigKernel& k, double delta) { return k.mollified(delta); }

}  // namespace mfchaos

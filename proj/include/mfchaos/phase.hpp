#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace mfchaos {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Per-replica random engine. Streams are derived with `derive_seed`.
using Rng = std::mt19937_64;

/// A single-particle phase point z = (x, v) on T x R.
struct Phase {
  double x = 0.0;
  double v = 0.0;
};

/// Wraps x into [0, 2pi).
inline double wrap_torus(double x) {
  if (x >= 0.0 && x < kTwoPi) return x;
  // one period off: the subtraction is exact, matching fmod
  if (x >= kTwoPi && x < 2.0 * kTwoPi) return x - kTwoPi;
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round up to exactly 2pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Phase-space and time-horizon parameters shared by every experiment.
struct PhaseConfig {
  int spatial_dim = 1;
  double torus_length = kTwoPi;
  double sigma = 0.0;    ///< velocity diffusion coefficient
  double horizon = 0.5;  ///< simulation end time T

  void validate() const {
    if (spatial_dim != 1) throw std::invalid_argument("only spatial_dim = 1 is supported");
    if (torus_length != kTwoPi) throw std::invalid_argument("torus_length must be 2*pi");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  }
};

/// A Monte Carlo value with its standard error.
struct ValueWithError {
  double value = 0.0;
  double std_error = 0.0;
};

}  // namespace mfchaos

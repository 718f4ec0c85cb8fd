#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfchaos/estimation.hpp"

namespace mfchaos {

struct RatePoint {
  double n = 0.0;
  double value = 0.0;
  double std_error = 0.0;
};

struct RateOptions {
  std::size_t bootstrap = 500;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  /// Largest relative spread allowed among the ratios N_{k+1} / N_k.
  double spacing_tolerance = 0.05;
};

/// Power law |value| ~ exp(intercept) N^slope.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<double> points_used;
  /// Every |value| < 3 stderr: nothing is fitted and slope/CI are NaN.
  bool degenerate = false;
  /// Values of both signs across N; the fit uses |value|.
  bool sign_change = false;
  std::vector<std::string> warnings;

  /// exp(intercept) N^slope
  double predict(double n) const;
};

/// Weighted least squares of log|value| on log N with weights (value / stderr)^2
/// (uniform if any stderr is zero); the CI is the bootstrap percentile interval
/// over Gaussian resamples of each point, widened to contain the slope.
RateFit fit_rate(std::span<const RatePoint> series, const RateOptions& options = {});

/// Same fit; the bootstrap resamples replicas within each N from the per-replica samples.
RateFit fit_rate(std::span<const MomentEstimate> series, const RateOptions& options = {});

std::vector<RatePoint> to_rate_points(std::span<const MomentEstimate> series);

}  // namespace mfchaos

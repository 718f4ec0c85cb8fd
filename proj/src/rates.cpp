#include "mfchaos/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mfchaos {

namespace {

constexpr std::size_t kMinPoints = 4;
constexpr std::uint64_t kBootstrapStream = 0x5ba7;

struct Line {
  double slope;
  double intercept;
};

Line wls(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double quantile(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void check_series(std::span<const RatePoint> series, const RateOptions& opt) {
  if (series.size() < kMinPoints) throw std::invalid_argument("rate fit needs at least 4 N values");
  if (opt.bootstrap < 10) throw std::invalid_argument("rate fit needs at least 10 bootstrap draws");
  if (!(opt.confidence > 0.0 && opt.confidence < 1.0)) throw std::invalid_argument("confidence must be in (0, 1)");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& p = series[i];
    if (!(p.n > 0.0) || !std::isfinite(p.value) || !(p.std_error >= 0.0) || !std::isfinite(p.std_error))
      throw std::invalid_argument("rate fit point is not finite");
    if (i > 0 && !(p.n > series[i - 1].n)) throw std::invalid_argument("N values must be strictly increasing");
  }
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double r = series[i].n / series[i - 1].n;
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  if (rmax / rmin - 1.0 > opt.spacing_tolerance) throw std::invalid_argument("N values must be geometrically spaced");
}

// Shared body: `resample(draw, rng, out)` fills one bootstrap replicate of the values.
template <class Resample>
RateFit fit_impl(std::span<const RatePoint> series, const RateOptions& opt, Resample&& resample) {
  check_series(series, opt);
  RateFit fit;
  const std::size_t n = series.size();
  const auto is_null = [](const RatePoint& p) { return p.value == 0.0 || std::abs(p.value) < 3.0 * p.std_error; };
  fit.degenerate = std::all_of(series.begin(), series.end(), is_null);
  const bool any_pos = std::any_of(series.begin(), series.end(), [](const RatePoint& p) { return p.value > 0.0; });
  const bool any_neg = std::any_of(series.begin(), series.end(), [](const RatePoint& p) { return p.value < 0.0; });
  fit.sign_change = any_pos && any_neg;
  if (fit.sign_change) fit.warnings.emplace_back("values change sign across N; fitting |value|");
  if (fit.degenerate) {
    fit.slope = fit.intercept = fit.ci_lo = fit.ci_hi = std::numeric_limits<double>::quiet_NaN();
    fit.warnings.emplace_back("every point is within 3 stderr of zero; no slope fitted");
    return fit;
  }
  if (std::any_of(series.begin(), series.end(), [](const RatePoint& p) { return p.value == 0.0; }))
    throw std::invalid_argument("rate fit has an exactly zero value in a non-degenerate series");

  std::vector<double> x(n), y(n), w(n, 1.0);
  const bool uniform = std::any_of(series.begin(), series.end(), [](const RatePoint& p) { return p.std_error == 0.0; });
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(series[i].n);
    y[i] = std::log(std::abs(series[i].value));
    if (!uniform) {
      const double rel = series[i].std_error / std::abs(series[i].value);
      w[i] = 1.0 / (rel * rel);
    }
    fit.points_used.push_back(series[i].n);
  }
  const Line line = wls(x, y, w);
  fit.slope = line.slope;
  fit.intercept = line.intercept;

  Rng rng(derive_seed(opt.seed, {kBootstrapStream}));
  std::vector<double> slopes;
  slopes.reserve(opt.bootstrap);
  std::vector<double> values(n), yb(n);
  for (std::size_t b = 0; b < opt.bootstrap; ++b) {
    resample(rng, values);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i] == 0.0) ok = false;
      yb[i] = std::log(std::abs(values[i]));
    }
    if (ok) slopes.push_back(wls(x, yb, w).slope);
  }
  if (slopes.size() < opt.bootstrap / 2) throw std::runtime_error("bootstrap produced too many zero values");
  const double tail = 0.5 * (1.0 - opt.confidence);
  fit.ci_lo = std::min(quantile(slopes, tail), fit.slope);
  fit.ci_hi = std::max(quantile(slopes, 1.0 - tail), fit.slope);
  return fit;
}

}  // namespace

double RateFit::predict(double n) const { return std::exp(intercept) * std::pow(n, slope); }

std::vector<RatePoint> to_rate_points(std::span<const MomentEstimate> series) {
  std::vector<RatePoint> pts;
  pts.reserve(series.size());
  for (const auto& e : series) pts.push_back({static_cast<double>(e.n), e.value, e.std_error});
  return pts;
}

RateFit fit_rate(std::span<const RatePoint> series, const RateOptions& options) {
  return fit_impl(series, options, [&](Rng& rng, std::vector<double>& out) {
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = series[i].value + series[i].std_error * normal(rng);
  });
}

RateFit fit_rate(std::span<const MomentEstimate> series, const RateOptions& options) {
  for (const auto& e : series)
    if (e.samples.size() < 2) throw std::invalid_argument("replica-level bootstrap needs per-replica samples");
  const auto pts = to_rate_points(series);
  return fit_impl(pts, options, [&](Rng& rng, std::vector<double>& out) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& s = series[i].samples;
      std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
      double sum = 0.0;
      for (std::size_t r = 0; r < s.size(); ++r) sum += s[pick(rng)];
      out[i] = sum / static_cast<double>(s.size()) + series[i].offset;
    }
  });
}

}  // namespace mfchaos

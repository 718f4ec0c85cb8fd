#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mfchaos/rates.hpp"

using namespace mfchaos;

namespace {

std::vector<RatePoint> power_law(double c, double p, double rel_se, std::vector<double> ns = {64, 128, 256, 512, 1024}) {
  std::vector<RatePoint> pts;
  for (double n : ns) pts.push_back({n, c * std::pow(n, p), rel_se * c * std::pow(n, p)});
  return pts;
}

}  // namespace

TEST_CASE("exact power law") {
  const auto pts = power_law(2.0, -1.0, 1e-3);
  const auto fit = fit_rate(pts);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(fit.ci_lo <= fit.slope);
  CHECK(fit.ci_hi >= fit.slope);
  CHECK(fit.ci_hi - fit.ci_lo < 0.01);
  CHECK(fit.predict(100.0) == doctest::Approx(0.02).epsilon(1e-10));
  CHECK_FALSE(fit.degenerate);
  CHECK_FALSE(fit.sign_change);
  CHECK(fit.points_used.size() == 5);
}

TEST_CASE("zero standard errors fall back to uniform weights") {
  const auto fit = fit_rate(power_law(1.0, -0.5, 0.0));
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.ci_lo == doctest::Approx(fit.slope));
  CHECK(fit.ci_hi == doctest::Approx(fit.slope));
}

TEST_CASE("noisy slopes and interval coverage") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  int covered = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    auto pts = power_law(1.0, -1.0, 0.05);
    for (auto& p : pts) p.value += p.std_error * gauss(rng);
    RateOptions opt;
    opt.bootstrap = 300;
    opt.seed = static_cast<std::uint64_t>(t);
    const auto fit = fit_rate(pts, opt);
    if (fit.ci_lo <= -1.0 && -1.0 <= fit.ci_hi) ++covered;
  }
  // nominal 95%; binomial sd is about 1.5%
  CHECK(covered >= 0.89 * trials);
  CHECK(covered <= trials);
}

TEST_CASE("fits are reproducible from the seed") {
  auto pts = power_law(1.0, -1.0, 0.2);
  RateOptions opt;
  opt.seed = 11;
  const auto a = fit_rate(pts, opt), b = fit_rate(pts, opt);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_hi == b.ci_hi);
  opt.seed = 12;
  CHECK(fit_rate(pts, opt).ci_lo != a.ci_lo);
}

TEST_CASE("degenerate series") {
  std::vector<RatePoint> pts;
  for (double n : {64.0, 128.0, 256.0, 512.0}) pts.push_back({n, 1e-4, 1e-3});
  const auto fit = fit_rate(pts);
  CHECK(fit.degenerate);
  CHECK(std::isnan(fit.slope));

  for (auto& p : pts) p.value = 0.0, p.std_error = 0.0;
  CHECK(fit_rate(pts).degenerate);

  // one resolved point is enough to fit
  pts = power_law(1.0, -1.0, 0.5);
  pts[0].std_error = 1e-3;
  CHECK_FALSE(fit_rate(pts).degenerate);
}

TEST_CASE("sign changes are reported") {
  auto pts = power_law(1.0, -1.0, 0.01);
  pts[3].value = -pts[3].value;
  const auto fit = fit_rate(pts);
  CHECK(fit.sign_change);
  CHECK_FALSE(fit.warnings.empty());
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("grid requirements") {
  CHECK_THROWS(fit_rate(power_law(1.0, -1.0, 0.1, {64, 128, 256})));
  CHECK_THROWS(fit_rate(power_law(1.0, -1.0, 0.1, {64, 128, 128, 256})));
  CHECK_THROWS(fit_rate(power_law(1.0, -1.0, 0.1, {64, 32, 16, 8})));
  CHECK_THROWS(fit_rate(power_law(1.0, -1.0, 0.1, {64, 128, 256, 1024})));
  CHECK_NOTHROW(fit_rate(power_law(1.0, -1.0, 0.1, {16, 48, 144, 432})));
}

TEST_CASE("replica resampling") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  std::vector<MomentEstimate> series;
  for (std::size_t n : {32u, 64u, 128u, 256u, 512u}) {
    MomentEstimate e;
    e.n = n;
    e.replicas = 400;
    e.offset = 0.5 / static_cast<double>(n);
    double sum = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < e.replicas; ++r) {
      const double y = 0.5 / static_cast<double>(n) * gauss(rng);
      e.samples.push_back(y);
      sum += y;
      sq += y * y;
    }
    const double mean = sum / e.replicas;
    e.value = mean + e.offset;
    e.std_error = std::sqrt((sq / e.replicas - mean * mean) / (e.replicas - 1));
    series.push_back(e);
  }
  const auto pts = to_rate_points(series);
  REQUIRE(pts.size() == 5);
  CHECK(pts[2].n == 128.0);
  CHECK(pts[2].value == series[2].value);

  const auto by_replica = fit_rate(series);
  const auto parametric = fit_rate(pts);
  CHECK(by_replica.slope == doctest::Approx(parametric.slope).epsilon(1e-12));
  CHECK(by_replica.ci_lo < -1.0 + 0.1);
  CHECK(by_replica.ci_hi > -1.0 - 0.1);
  CHECK(by_replica.slope == doctest::Approx(-1.0).epsilon(0.05));
  // widths agree to sampling accuracy
  const double w1 = by_replica.ci_hi - by_replica.ci_lo, w2 = parametric.ci_hi - parametric.ci_lo;
  CHECK(w1 / w2 == doctest::Approx(1.0).epsilon(0.35));
}

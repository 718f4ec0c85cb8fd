#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mfchaos/cumulants.hpp"

using namespace mfchaos;

namespace {

PhaseGrid small_grid(std::size_t nx = 3, std::size_t nv = 2) {
  return PhaseGrid::from_density(DensityModel::steady(VelocityProfile::gaussian(1.0)), nx, nv);
}

DiscreteFunction symmetrized(const DiscreteFunction& phi) {
  DiscreteFunction out(phi.arity(), phi.grid_size());
  std::vector<std::size_t> idx(static_cast<std::size_t>(phi.arity()));
  for (std::size_t flat = 0; flat < phi.size(); ++flat) {
    phi.unflatten(flat, idx);
    std::vector<int> order(idx.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    double acc = 0.0;
    int count = 0;
    do {
      std::vector<std::size_t> p(idx.size());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = idx[static_cast<std::size_t>(order[i])];
      acc += phi.at(p);
      ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    out[flat] = acc / count;
  }
  return out;
}

// exchangeable density F_N = f^{(x)N} (1 + noise), normalized on the grid
DiscreteFunction random_density(const PhaseGrid& grid, int n, std::uint64_t seed, double amp = 0.4) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DiscreteFunction fn(n, grid.size());
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  for (std::size_t flat = 0; flat < fn.size(); ++flat) {
    fn.unflatten(flat, idx);
    double base = 1.0;
    for (auto i : idx) base *= grid.density()[i];
    fn[flat] = base * (1.0 + amp * u(rng));
  }
  fn = symmetrized(fn);
  double mass = 0.0;
  for (std::size_t flat = 0; flat < fn.size(); ++flat) {
    fn.unflatten(flat, idx);
    double w = 1.0;
    for (auto i : idx) w *= grid.weights()[i];
    mass += w * fn[flat];
  }
  for (auto& v : fn.values()) v /= mass;
  return fn;
}

DiscreteFunction random_function(const PhaseGrid& grid, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DiscreteFunction h(n, grid.size());
  for (auto& v : h.values()) v = u(rng);
  return symmetrized(h);
}

double max_diff(const DiscreteFunction& a, const DiscreteFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("set partitions are counted by Bell numbers") {
  const std::uint64_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140};
  for (int m = 1; m <= 8; ++m) {
    CHECK(bell_number(m) == bell[m]);
    CHECK(enumerate_partitions(m).size() == bell[m]);
  }
  for (const auto& p : enumerate_partitions(4)) {
    std::vector<int> seen;
    for (const auto& b : p.blocks) seen.insert(seen.end(), b.begin(), b.end());
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3});
  }
  CHECK_THROWS(enumerate_partitions(9));
  CHECK(binomial_exact(10, 3) == 120);
}

TEST_CASE("grid is normalized against f") {
  const auto grid = small_grid(5, 4);
  double s = 0.0;
  for (double m : grid.measure()) s += m;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("marginals and cluster functions round trip") {
  const auto grid = small_grid();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto fn = random_density(grid, 4, seed);
    std::vector<DiscreteFunction> marg;
    for (int k = 1; k <= 4; ++k) marg.push_back(marginal(fn, grid, k));
    const auto g = marginals_to_G(marg, grid);
    const auto back = G_to_marginals(g);
    for (int k = 0; k < 4; ++k) CHECK(max_diff(back[static_cast<std::size_t>(k)], marg[static_cast<std::size_t>(k)]) < 1e-10);
    // consistent hierarchies give G_m with vanishing slot integrals for m >= 2
    for (const auto& [m, v] : G_slot_integrals(g, grid)) CHECK(v < 1e-10);
  }
}

TEST_CASE("two-particle cluster function by hand") {
  const auto grid = small_grid(2, 2);
  const auto fn = random_density(grid, 2, 7);
  std::vector<DiscreteFunction> marg{marginal(fn, grid, 1), marginal(fn, grid, 2)};
  const auto g = marginals_to_G(marg, grid);
  std::vector<std::size_t> idx(2);
  for (std::size_t flat = 0; flat < fn.size(); ++flat) {
    fn.unflatten(flat, idx);
    const std::size_t a[1] = {idx[0]}, b[1] = {idx[1]};
    CHECK(g.entries.at(2)[flat] == doctest::Approx(fn[flat] - marg[0].at(a) * marg[0].at(b)).epsilon(1e-13));
  }
}

TEST_CASE("inconsistent marginals are rejected") {
  const auto grid = small_grid();
  auto f1 = marginal(random_density(grid, 2, 3), grid, 1);
  for (auto& v : f1.values()) v *= 1.1;
  std::vector<DiscreteFunction> marg{f1};
  CHECK_THROWS(marginals_to_G(marg, grid));
}

TEST_CASE("direct cumulants reconstruct F_N and cancel in every slot") {
  const auto grid = small_grid();
  for (int n = 2; n <= 4; ++n) {
    const auto fn = random_density(grid, n, 10 + n);
    const auto kappa = fn_to_kappa_table(fn, grid);
    CHECK(kappa.entries.at(0)[0] == doctest::Approx(1.0).epsilon(1e-13));
    for (const auto& [k, phi] : kappa.entries)
      if (k > 0) CHECK(slot_residual(phi, grid) < 1e-8);
    CHECK(max_diff(kappa_reconstruct(kappa, grid), fn) < 1e-10);
  }
}

TEST_CASE("tensorized data has no direct cumulants") {
  const auto grid = small_grid();
  const auto fn = DiscreteFunction::from_function(3, grid, [&](std::span<const Phase> z) {
    double p = 1.0;
    for (const auto& q : z)
      for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.nodes()[i].x == q.x && grid.nodes()[i].v == q.v) p *= grid.density()[i];
    return p;
  });
  const auto kappa = fn_to_kappa_table(fn, grid);
  for (int k = 1; k <= 3; ++k) CHECK(kappa.entries.at(k).max_abs() < 1e-12);
}

TEST_CASE("dual cumulants reconstruct h_N") {
  const auto grid = small_grid();
  for (int n = 2; n <= 4; ++n) {
    const auto h = random_function(grid, n, 20 + n);
    const auto dual = h_to_dual_table(h, grid);
    for (const auto& [k, phi] : dual.entries)
      if (k > 0) CHECK(slot_residual(phi, grid) < 1e-8);
    CHECK(max_diff(dual_reconstruct(dual, grid), h) < 1e-10);
  }
}

TEST_CASE("closed-form extraction matches the brute-force expansion") {
  const auto grid = small_grid(2, 2);
  const auto h = random_function(grid, 3, 31);
  const auto brute = brute_force_expansion(h, grid);
  const auto dual = h_to_dual_table(h, grid);
  for (int n = 0; n <= 3; ++n) CHECK(max_diff(brute[static_cast<std::size_t>(n)], dual.entries.at(n)) < 1e-9);
}

TEST_CASE("cumulant pairing reproduces the full expectation") {
  const auto grid = small_grid();
  for (int n = 2; n <= 3; ++n) {
    const auto fn = random_density(grid, n, 40 + n);
    const auto h = random_function(grid, n, 50 + n);
    double direct = 0.0;
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    for (std::size_t flat = 0; flat < fn.size(); ++flat) {
      fn.unflatten(flat, idx);
      double w = 1.0;
      for (auto i : idx) w *= grid.weights()[i];
      direct += w * fn[flat] * h[flat];
    }
    const auto kappa = fn_to_kappa_table(fn, grid);
    const auto dual = h_to_dual_table(h, grid);
    CHECK(cumulant_pairing(kappa, dual, grid) == doctest::Approx(direct).epsilon(1e-12));
    const auto kb = rescale(kappa, n), cb = rescale(dual, n);
    CHECK(cumulant_pairing(kb, cb, grid) == doctest::Approx(direct).epsilon(1e-12));
    CHECK_THROWS(rescale(kb, n));
  }
}

TEST_CASE("projectors") {
  const auto grid = small_grid();
  const auto h = random_function(grid, 2, 61);
  const auto p = project_all(h, grid);
  CHECK(slot_residual(p, grid) < 1e-14);
  CHECK(max_diff(project_all(p, grid), p) < 1e-14);
  CHECK(rescale_factor(4, 2) == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("tables print as csv") {
  const auto grid = small_grid(2, 1);
  const auto dual = rescale(h_to_dual_table(random_function(grid, 2, 3), grid), 2);
  std::ostringstream os;
  dual.write_csv(os);
  const auto text = os.str();
  CHECK(text.rfind("family,n,index,value\n", 0) == 0);
  CHECK(text.find("dual_C_bar") != std::string::npos);
}

#include "mfchaos/cumulants.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "mfchaos/quadrature.hpp"

namespace mfchaos {

namespace {

constexpr int kMaxPartitionOrder = 8;
constexpr int kMaxGridArity = 4;
constexpr double kDensityFloor = 1e-12;

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

void require_same_grid(const DiscreteFunction& phi, const PhaseGrid& grid) {
  if (phi.grid_size() != grid.size()) throw std::invalid_argument("discrete function and grid sizes differ");
}

void require_arity(int arity) {
  if (arity > kMaxGridArity) throw std::invalid_argument("grid cumulants are limited to N <= 4");
}

// value of phi at the sub-configuration idx[slots[0]], idx[slots[1]], ...
template <class Slots>
double at_slots(const DiscreteFunction& phi, std::span<const std::size_t> idx, const Slots& slots) {
  std::size_t flat = 0;
  for (auto s : slots) flat = flat * phi.grid_size() + idx[static_cast<std::size_t>(s)];
  return phi[flat];
}

// out(others) = sum_y weight_y phi(.., y, ..) with y in position `slot`
DiscreteFunction contract_slot(const DiscreteFunction& phi, int slot, const std::vector<double>& weight) {
  const std::size_t g = phi.grid_size();
  const std::size_t stride = ipow(g, phi.arity() - 1 - slot);
  const std::size_t outer = ipow(g, slot);
  DiscreteFunction out(phi.arity() - 1, g);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < stride; ++in) {
      double acc = 0.0;
      for (std::size_t y = 0; y < g; ++y) acc += weight[y] * phi[(o * g + y) * stride + in];
      out[o * stride + in] = acc;
    }
  return out;
}

DiscreteFunction contract_trailing(const DiscreteFunction& phi, int keep, const std::vector<double>& weight) {
  if (keep < 0 || keep > phi.arity()) throw std::invalid_argument("number of kept slots out of range");
  DiscreteFunction cur = phi;
  while (cur.arity() > keep) cur = contract_slot(cur, cur.arity() - 1, weight);
  return cur;
}

double total_integral(const DiscreteFunction& phi, const std::vector<double>& weight) {
  return contract_trailing(phi, 0, weight)[0];
}

// sum over partitions pi of coef(|pi|) prod_blocks parts[|block| - 1](z_block)
DiscreteFunction partition_sum(const std::vector<const DiscreteFunction*>& parts, int m, std::size_t g,
                               const std::function<double(std::size_t)>& coef) {
  const auto partitions = enumerate_partitions(m);
  DiscreteFunction out(m, g);
  std::vector<std::size_t> idx(static_cast<std::size_t>(m));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unflatten(flat, idx);
    double sum = 0.0;
    for (const auto& p : partitions) {
      double prod = coef(p.size());
      for (const auto& b : p.blocks) prod *= at_slots(*parts[b.size() - 1], idx, b);
      sum += prod;
    }
    out[flat] = sum;
  }
  return out;
}

}  // namespace

std::vector<Partition> enumerate_partitions(int m) {
  if (m < 1 || m > kMaxPartitionOrder) throw std::invalid_argument("partition order must be in [1, 8]");
  std::vector<Partition> out;
  std::vector<int> a(static_cast<std::size_t>(m), 0), mx(static_cast<std::size_t>(m), 0);
  while (true) {
    Partition p;
    const int blocks = *std::max_element(a.begin(), a.end()) + 1;
    p.blocks.resize(static_cast<std::size_t>(blocks));
    for (int i = 0; i < m; ++i) p.blocks[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])].push_back(i);
    out.push_back(std::move(p));
    // next restricted growth string: a[0] = 0, a[i] <= 1 + max(a[0..i-1])
    int i = m - 1;
    while (i > 0 && a[static_cast<std::size_t>(i)] > mx[static_cast<std::size_t>(i - 1)]) --i;
    if (i == 0) break;
    ++a[static_cast<std::size_t>(i)];
    mx[static_cast<std::size_t>(i)] = std::max(mx[static_cast<std::size_t>(i - 1)], a[static_cast<std::size_t>(i)]);
    for (int j = i + 1; j < m; ++j) {
      a[static_cast<std::size_t>(j)] = 0;
      mx[static_cast<std::size_t>(j)] = mx[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

std::uint64_t bell_number(int m) {
  if (m < 0) throw std::invalid_argument("Bell number of a negative order");
  if (m == 0) return 1;
  std::vector<std::uint64_t> row{1};
  for (int i = 1; i < m; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.back();
}

std::uint64_t binomial_exact(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

PhaseGrid::PhaseGrid(std::vector<Phase> nodes, std::vector<double> weights, std::vector<double> density)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), density_(std::move(density)) {
  if (nodes_.empty() || nodes_.size() != weights_.size() || nodes_.size() != density_.size())
    throw std::invalid_argument("phase grid needs matching, non-empty nodes, weights and density values");
  double z = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!(weights_[i] > 0.0)) throw std::invalid_argument("phase grid weights must be positive");
    if (!(density_[i] >= 0.0)) throw std::invalid_argument("phase grid density must be nonnegative");
    z += weights_[i] * density_[i];
  }
  if (!(z > 0.0)) throw std::invalid_argument("phase grid density has zero mass");
  normalization_ = z;
  measure_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    density_[i] /= z;
    measure_[i] = weights_[i] * density_[i];
  }
}

PhaseGrid PhaseGrid::from_density(const DensityModel& f, std::size_t nx, std::size_t nv) {
  const QuadratureRule xr = periodic_trapezoid(nx);
  const QuadratureRule vr = f.profile().gauss_rule(nv);
  std::vector<Phase> nodes;
  std::vector<double> w, dens;
  for (std::size_t i = 0; i < xr.size(); ++i)
    for (std::size_t j = 0; j < vr.size(); ++j) {
      nodes.push_back({xr.nodes[i], vr.nodes[j]});
      w.push_back(xr.weights[i] * vr.weights[j]);
      dens.push_back(f.initial_density(xr.nodes[i], vr.nodes[j]));
    }
  return PhaseGrid(std::move(nodes), std::move(w), std::move(dens));
}

DiscreteFunction::DiscreteFunction(int arity, std::size_t grid_size, double fill)
    : arity_(arity), grid_size_(grid_size) {
  if (arity < 0) throw std::invalid_argument("negative arity");
  values_.assign(ipow(grid_size, arity), fill);
}

DiscreteFunction DiscreteFunction::from_function(int arity, const PhaseGrid& grid,
                                                 const std::function<double(std::span<const Phase>)>& fn) {
  DiscreteFunction out(arity, grid.size());
  std::vector<std::size_t> idx(static_cast<std::size_t>(arity));
  std::vector<Phase> z(static_cast<std::size_t>(arity));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unflatten(flat, idx);
    for (std::size_t s = 0; s < idx.size(); ++s) z[s] = grid.nodes()[idx[s]];
    out[flat] = fn(z);
  }
  return out;
}

std::size_t DiscreteFunction::flat_index(std::span<const std::size_t> idx) const {
  if (idx.size() != static_cast<std::size_t>(arity_)) throw std::invalid_argument("index arity mismatch");
  std::size_t flat = 0;
  for (auto i : idx) {
    if (i >= grid_size_) throw std::out_of_range("grid index out of range");
    flat = flat * grid_size_ + i;
  }
  return flat;
}

void DiscreteFunction::unflatten(std::size_t flat, std::span<std::size_t> idx) const {
  for (std::size_t s = idx.size(); s-- > 0;) {
    idx[s] = flat % grid_size_;
    flat /= grid_size_;
  }
}

double DiscreteFunction::symmetry_defect() const {
  double worst = 0.0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(arity_));
  for (std::size_t flat = 0; flat < values_.size(); ++flat) {
    unflatten(flat, idx);
    for (std::size_t s = 0; s + 1 < idx.size(); ++s) {
      std::swap(idx[s], idx[s + 1]);
      worst = std::max(worst, std::abs(values_[flat_index(idx)] - values_[flat]));
      std::swap(idx[s], idx[s + 1]);
    }
  }
  return worst;
}

double DiscreteFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

std::string family_name(CumulantTable::Family family) {
  switch (family) {
    case CumulantTable::Family::G: return "G";
    case CumulantTable::Family::kappa: return "kappa";
    case CumulantTable::Family::dual_C: return "dual_C";
  }
  return "?";
}

void CumulantTable::write_csv(std::ostream& os) const {
  const std::string fam = family_name(family) + (rescaled ? "_bar" : "");
  os << "family,n,index,value\n";
  os.precision(17);
  for (const auto& [n, phi] : entries) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(phi.arity()));
    for (std::size_t flat = 0; flat < phi.size(); ++flat) {
      phi.unflatten(flat, idx);
      os << fam << ',' << n << ',';
      for (std::size_t s = 0; s < idx.size(); ++s) os << (s ? ":" : "") << idx[s];
      os << ',' << phi[flat] << '\n';
    }
  }
  for (const auto& [n, value] : pairings) os << fam << ',' << n << ",pairing," << value << '\n';
}

DiscreteFunction marginal(const DiscreteFunction& density, const PhaseGrid& grid, int keep) {
  require_same_grid(density, grid);
  return contract_trailing(density, keep, grid.weights());
}

DiscreteFunction average_trailing(const DiscreteFunction& phi, const PhaseGrid& grid, int keep) {
  require_same_grid(phi, grid);
  return contract_trailing(phi, keep, grid.measure());
}

CumulantTable marginals_to_G(std::span<const DiscreteFunction> marginals, const PhaseGrid& grid, double tolerance) {
  const int mmax = static_cast<int>(marginals.size());
  if (mmax < 1 || mmax > kMaxPartitionOrder) throw std::invalid_argument("marginal orders must be in [1, 8]");
  std::vector<const DiscreteFunction*> parts;
  for (int k = 0; k < mmax; ++k) {
    const auto& fk = marginals[static_cast<std::size_t>(k)];
    require_same_grid(fk, grid);
    if (fk.arity() != k + 1) throw std::invalid_argument("marginal list must hold orders 1..m in sequence");
    const double mass = total_integral(fk, grid.weights());
    if (std::abs(mass - 1.0) > tolerance)
      throw std::invalid_argument("inconsistent marginal normalization: order " + std::to_string(k + 1) +
                                  " integrates to " + std::to_string(mass));
    parts.push_back(&fk);
  }
  CumulantTable table;
  table.family = CumulantTable::Family::G;
  for (int m = 1; m <= mmax; ++m) {
    table.entries[m] = partition_sum(parts, m, grid.size(), [](std::size_t blocks) {
      const int b = static_cast<int>(blocks);
      return factorial(b - 1) * ((b - 1) % 2 == 0 ? 1.0 : -1.0);
    });
  }
  return table;
}

std::vector<DiscreteFunction> G_to_marginals(const CumulantTable& table) {
  if (table.family != CumulantTable::Family::G) throw std::invalid_argument("expected a G table");
  std::vector<const DiscreteFunction*> parts;
  int mmax = 0;
  for (const auto& [m, phi] : table.entries) {
    if (m != mmax + 1) throw std::invalid_argument("G table must hold orders 1..m in sequence");
    parts.push_back(&phi);
    mmax = m;
  }
  std::vector<DiscreteFunction> out;
  if (parts.empty()) return out;
  const std::size_t g = parts.front()->grid_size();
  for (int m = 1; m <= mmax; ++m) out.push_back(partition_sum(parts, m, g, [](std::size_t) { return 1.0; }));
  return out;
}

std::map<int, double> G_slot_integrals(const CumulantTable& table, const PhaseGrid& grid) {
  std::map<int, double> out;
  for (const auto& [m, phi] : table.entries) {
    if (m < 2) continue;
    double worst = 0.0;
    for (int s = 0; s < phi.arity(); ++s) worst = std::max(worst, contract_slot(phi, s, grid.weights()).max_abs());
    out[m] = worst;
  }
  return out;
}

DiscreteFunction projector_apply(const DiscreteFunction& phi, std::span<const int> slots, const PhaseGrid& grid) {
  require_same_grid(phi, grid);
  DiscreteFunction out = phi;
  const std::size_t g = grid.size();
  const auto& mu = grid.measure();
  for (int slot : slots) {
    if (slot < 0 || slot >= phi.arity()) throw std::out_of_range("projector slot out of range");
    const std::size_t stride = ipow(g, phi.arity() - 1 - slot);
    const std::size_t outer = ipow(g, slot);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t in = 0; in < stride; ++in) {
        double avg = 0.0;
        for (std::size_t y = 0; y < g; ++y) avg += mu[y] * out[(o * g + y) * stride + in];
        for (std::size_t y = 0; y < g; ++y) out[(o * g + y) * stride + in] -= avg;
      }
  }
  return out;
}

DiscreteFunction project_all(const DiscreteFunction& phi, const PhaseGrid& grid) {
  std::vector<int> slots(static_cast<std::size_t>(phi.arity()));
  std::iota(slots.begin(), slots.end(), 0);
  return projector_apply(phi, slots, grid);
}

double slot_residual(const DiscreteFunction& phi, const PhaseGrid& grid) {
  require_same_grid(phi, grid);
  double worst = 0.0;
  for (int s = 0; s < phi.arity(); ++s) worst = std::max(worst, contract_slot(phi, s, grid.measure()).max_abs());
  return worst;
}

DiscreteFunction fn_to_kappa(const DiscreteFunction& fn, const PhaseGrid& grid, int n) {
  require_same_grid(fn, grid);
  require_arity(fn.arity());
  if (n < 0 || n > fn.arity()) throw std::invalid_argument("cumulant order out of range");
  for (double f : grid.density())
    if (f < kDensityFloor) throw std::invalid_argument("f vanishes on the grid (below 1e-12)");
  DiscreteFunction ratio = fn;
  std::vector<std::size_t> idx(static_cast<std::size_t>(fn.arity()));
  for (std::size_t flat = 0; flat < ratio.size(); ++flat) {
    ratio.unflatten(flat, idx);
    double prod = 1.0;
    for (auto i : idx) prod *= grid.density()[i];
    ratio[flat] /= prod;
  }
  return project_all(average_trailing(ratio, grid, n), grid);
}

CumulantTable fn_to_kappa_table(const DiscreteFunction& fn, const PhaseGrid& grid) {
  CumulantTable t;
  t.family = CumulantTable::Family::kappa;
  t.n_particles = static_cast<std::size_t>(fn.arity());
  for (int n = 0; n <= fn.arity(); ++n) t.entries[n] = fn_to_kappa(fn, grid, n);
  return t;
}

namespace {

DiscreteFunction subset_sum(const CumulantTable& table, const PhaseGrid& grid, bool times_density) {
  const int big_n = static_cast<int>(table.n_particles);
  require_arity(big_n);
  if (table.rescaled) throw std::invalid_argument("reconstruction expects an unrescaled table");
  DiscreteFunction out(big_n, grid.size());
  std::vector<std::size_t> idx(static_cast<std::size_t>(big_n));
  std::vector<int> slots;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unflatten(flat, idx);
    double sum = 0.0;
    for (unsigned mask = 0; mask < (1u << big_n); ++mask) {
      slots.clear();
      for (int s = 0; s < big_n; ++s)
        if (mask & (1u << s)) slots.push_back(s);
      auto it = table.entries.find(static_cast<int>(slots.size()));
      if (it == table.entries.end()) continue;
      sum += at_slots(it->second, idx, slots);
    }
    if (times_density)
      for (auto i : idx) sum *= grid.density()[i];
    out[flat] = sum;
  }
  return out;
}

}  // namespace

DiscreteFunction kappa_reconstruct(const CumulantTable& kappa, const PhaseGrid& grid) {
  return subset_sum(kappa, grid, true);
}

DiscreteFunction h_to_dual_cumulants(const DiscreteFunction& h, const PhaseGrid& grid, int n) {
  require_same_grid(h, grid);
  require_arity(h.arity());
  if (n < 0 || n > h.arity()) throw std::invalid_argument("cumulant order out of range");
  return project_all(average_trailing(h, grid, n), grid);
}

CumulantTable h_to_dual_table(const DiscreteFunction& h, const PhaseGrid& grid) {
  CumulantTable t;
  t.family = CumulantTable::Family::dual_C;
  t.n_particles = static_cast<std::size_t>(h.arity());
  for (int n = 0; n <= h.arity(); ++n) t.entries[n] = h_to_dual_cumulants(h, grid, n);
  return t;
}

DiscreteFunction dual_reconstruct(const CumulantTable& dual, const PhaseGrid& grid) {
  return subset_sum(dual, grid, false);
}

double rescale_factor(std::size_t n_particles, int n) {
  if (n < 0 || static_cast<std::size_t>(n) > n_particles) throw std::invalid_argument("rescale order out of range");
  return std::sqrt(static_cast<double>(binomial_exact(n_particles, static_cast<std::uint64_t>(n))));
}

CumulantTable rescale(const CumulantTable& table, std::size_t n_particles) {
  if (table.rescaled) throw std::invalid_argument("table is already rescaled");
  CumulantTable out = table;
  out.rescaled = true;
  out.n_particles = n_particles;
  for (auto& [n, phi] : out.entries) {
    const double c = rescale_factor(n_particles, n);
    for (double& v : phi.values()) v *= c;
  }
  for (auto& [n, value] : out.pairings) value *= rescale_factor(n_particles, n);
  return out;
}

double f_pairing(const DiscreteFunction& a, const DiscreteFunction& b, const PhaseGrid& grid) {
  require_same_grid(a, grid);
  require_same_grid(b, grid);
  if (a.arity() != b.arity()) throw std::invalid_argument("pairing needs equal arities");
  std::vector<std::size_t> idx(static_cast<std::size_t>(a.arity()));
  double sum = 0.0;
  for (std::size_t flat = 0; flat < a.size(); ++flat) {
    a.unflatten(flat, idx);
    double w = 1.0;
    for (auto i : idx) w *= grid.measure()[i];
    sum += w * a[flat] * b[flat];
  }
  return sum;
}

double cumulant_pairing(const CumulantTable& kappa, const CumulantTable& dual, const PhaseGrid& grid) {
  if (kappa.family != CumulantTable::Family::kappa || dual.family != CumulantTable::Family::dual_C)
    throw std::invalid_argument("cumulant pairing needs a kappa table and a dual table");
  if (kappa.rescaled != dual.rescaled) throw std::invalid_argument("both tables must be rescaled, or neither");
  if (kappa.n_particles != dual.n_particles) throw std::invalid_argument("tables describe different N");
  double sum = 0.0;
  for (const auto& [n, k] : kappa.entries) {
    auto it = dual.entries.find(n);
    if (it == dual.entries.end()) continue;
    const double weight =
        kappa.rescaled ? 1.0 : static_cast<double>(binomial_exact(kappa.n_particles, static_cast<std::uint64_t>(n)));
    sum += weight * f_pairing(k, it->second, grid);
  }
  return sum;
}

std::vector<DiscreteFunction> brute_force_expansion(const DiscreteFunction& phi, const PhaseGrid& grid) {
  require_same_grid(phi, grid);
  const int big_n = phi.arity();
  require_arity(big_n);
  const std::size_t g = grid.size();
  // unknown blocks: one per subset (bitmask), each of size g^{|A|}
  const unsigned subsets = 1u << big_n;
  std::vector<std::size_t> offset(subsets + 1, 0);
  for (unsigned a = 0; a < subsets; ++a) offset[a + 1] = offset[a] + ipow(g, std::popcount(a));
  const std::size_t unknowns = offset[subsets];

  std::vector<std::vector<std::pair<std::size_t, double>>> eqs;
  std::vector<double> rhs;
  std::vector<std::size_t> idx(static_cast<std::size_t>(big_n));
  for (std::size_t flat = 0; flat < phi.size(); ++flat) {
    phi.unflatten(flat, idx);
    std::vector<std::pair<std::size_t, double>> eq;
    for (unsigned a = 0; a < subsets; ++a) {
      std::size_t local = 0;
      for (int s = 0; s < big_n; ++s)
        if (a & (1u << s)) local = local * g + idx[static_cast<std::size_t>(s)];
      eq.push_back({offset[a] + local, 1.0});
    }
    eqs.push_back(std::move(eq));
    rhs.push_back(phi[flat]);
  }
  // cancellation of c_A in each of its slots
  for (unsigned a = 1; a < subsets; ++a) {
    const int k = std::popcount(a);
    DiscreteFunction shape(k, g);
    std::vector<std::size_t> local(static_cast<std::size_t>(k));
    for (int slot = 0; slot < k; ++slot) {
      for (std::size_t rest = 0; rest < ipow(g, k - 1); ++rest) {
        std::vector<std::pair<std::size_t, double>> eq;
        for (std::size_t y = 0; y < g; ++y) {
          // insert y at position `slot` into the (k-1)-index `rest`
          std::size_t r = rest;
          for (int s = k - 1; s >= 0; --s) {
            if (s == slot) continue;
            local[static_cast<std::size_t>(s)] = r % g;
            r /= g;
          }
          local[static_cast<std::size_t>(slot)] = y;
          eq.push_back({offset[a] + shape.flat_index(local), grid.measure()[y]});
        }
        eqs.push_back(std::move(eq));
        rhs.push_back(0.0);
      }
    }
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(eqs.size()), static_cast<Eigen::Index>(unknowns));
  Eigen::VectorXd b(static_cast<Eigen::Index>(eqs.size()));
  for (std::size_t r = 0; r < eqs.size(); ++r) {
    for (const auto& [c, v] : eqs[r]) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += v;
    b(static_cast<Eigen::Index>(r)) = rhs[r];
  }
  const Eigen::VectorXd sol = m.colPivHouseholderQr().solve(b);
  std::vector<DiscreteFunction> out;
  for (int n = 0; n <= big_n; ++n) {
    const unsigned a = (1u << n) - 1u;  // subset {0..n-1}
    DiscreteFunction c(n, g);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = sol(static_cast<Eigen::Index>(offset[a] + i));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace mfchaos

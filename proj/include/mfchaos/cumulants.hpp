#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfchaos/density.hpp"
#include "mfchaos/phase.hpp"

namespace mfchaos {

/// A set partition of {0..m-1}; blocks are sorted and ordered by their smallest element.
struct Partition {
  std::vector<std::vector<int>> blocks;
  std::size_t size() const { return blocks.size(); }
};

/// All set partitions of {0..m-1} (restricted growth strings), 1 <= m <= 8.
std::vector<Partition> enumerate_partitions(int m);
/// Bell numbers by the Bell triangle.
std::uint64_t bell_number(int m);
/// binom(n, k) as an exact integer.
std::uint64_t binomial_exact(std::uint64_t n, std::uint64_t k);

/// One-particle quadrature grid with Lebesgue weights w and density values f,
/// normalized so that sum_y w_y f_y = 1 exactly. The f-average of slot i is
/// Pi_i phi = sum_y w_y f_y phi(.., y, ..).
class PhaseGrid {
 public:
  PhaseGrid(std::vector<Phase> nodes, std::vector<double> weights, std::vector<double> density);
  /// nx periodic trapezoid nodes in x times nv Gauss nodes of the velocity profile.
  static PhaseGrid from_density(const DensityModel& f, std::size_t nx, std::size_t nv);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Phase>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& density() const { return density_; }
  /// w_y f_y
  const std::vector<double>& measure() const { return measure_; }
  /// Factor the raw density values were divided by.
  double normalization() const { return normalization_; }

 private:
  std::vector<Phase> nodes_;
  std::vector<double> weights_;
  std::vector<double> density_;
  std::vector<double> measure_;
  double normalization_ = 1.0;
};

/// Values of a function of `arity` phase points on the tensor grid; slot 0 is the
/// most significant index.
class DiscreteFunction {
 public:
  DiscreteFunction() = default;
  DiscreteFunction(int arity, std::size_t grid_size, double fill = 0.0);
  static DiscreteFunction from_function(int arity, const PhaseGrid& grid,
                                        const std::function<double(std::span<const Phase>)>& fn);

  int arity() const { return arity_; }
  std::size_t grid_size() const { return grid_size_; }
  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& operator[](std::size_t flat) { return values_[flat]; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double& at(std::span<const std::size_t> idx) { return values_[flat_index(idx)]; }
  double at(std::span<const std::size_t> idx) const { return values_[flat_index(idx)]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const;
  void unflatten(std::size_t flat, std::span<std::size_t> idx) const;
  /// Largest |phi(sigma z) - phi(z)| over adjacent transpositions sigma.
  double symmetry_defect() const;
  double max_abs() const;

 private:
  int arity_ = 0;
  std::size_t grid_size_ = 0;
  std::vector<double> values_;
};

/// Values of G_{N,m}, kappa_{N,n} or C_{N,n} by order, with optional pairing scalars.
struct CumulantTable {
  enum class Family { G, kappa, dual_C };
  Family family = Family::G;
  std::size_t n_particles = 0;
  bool rescaled = false;
  std::map<int, DiscreteFunction> entries;
  std::map<int, double> pairings;

  /// CSV rows: family,n,index,value (index = colon-joined grid indices, or "pairing").
  void write_csv(std::ostream& os) const;
};
std::string family_name(CumulantTable::Family family);

/// Integrates out the trailing slots of an arity-N density with Lebesgue weights.
DiscreteFunction marginal(const DiscreteFunction& density, const PhaseGrid& grid, int keep);
/// Pi over the trailing slots (f-average), leaving the first `keep` slots.
DiscreteFunction average_trailing(const DiscreteFunction& phi, const PhaseGrid& grid, int keep);

/// G_m = sum over partitions pi of (|pi|-1)! (-1)^{|pi|-1} prod_blocks F_{|block|}, for
/// marginals F_1..F_M (marginals[k] has arity k + 1). Throws when a marginal does not
/// integrate to 1 within `tolerance`.
CumulantTable marginals_to_G(std::span<const DiscreteFunction> marginals, const PhaseGrid& grid,
                             double tolerance = 1e-8);
/// Inverse cluster expansion F_m = sum_pi prod_blocks G_{|block|}.
std::vector<DiscreteFunction> G_to_marginals(const CumulantTable& table);
/// int G_m dz_j for every slot j: the largest absolute slot integral per order.
std::map<int, double> G_slot_integrals(const CumulantTable& table, const PhaseGrid& grid);

/// Applies (Id - Pi_i) for each listed slot (0-based).
DiscreteFunction projector_apply(const DiscreteFunction& phi, std::span<const int> slots, const PhaseGrid& grid);
/// P_n over all slots.
DiscreteFunction project_all(const DiscreteFunction& phi, const PhaseGrid& grid);
/// max over slots i of max |Pi_i phi|.
double slot_residual(const DiscreteFunction& phi, const PhaseGrid& grid);

/// kappa_{N,n} = P_n[ Pi_{n+1..N} (F_N / f^{(x)N}) ]. N <= 4; f must be >= 1e-12 on the grid.
DiscreteFunction fn_to_kappa(const DiscreteFunction& fn, const PhaseGrid& grid, int n);
CumulantTable fn_to_kappa_table(const DiscreteFunction& fn, const PhaseGrid& grid);
/// F_N = f^{(x)N} sum_{A subset of [N]} kappa_{|A|}(z_A).
DiscreteFunction kappa_reconstruct(const CumulantTable& kappa, const PhaseGrid& grid);

/// C_{N,n} = P_n[ Pi_{n+1..N} h_N ]. N <= 4.
DiscreteFunction h_to_dual_cumulants(const DiscreteFunction& h, const PhaseGrid& grid, int n);
CumulantTable h_to_dual_table(const DiscreteFunction& h, const PhaseGrid& grid);
/// h_N = sum_A C_{|A|}(z_A).
DiscreteFunction dual_reconstruct(const CumulantTable& dual, const PhaseGrid& grid);

/// Multiplies each order-n entry and pairing by binom(N, n)^{1/2}.
CumulantTable rescale(const CumulantTable& table, std::size_t n_particles);
double rescale_factor(std::size_t n_particles, int n);

/// sum_y mu^{(x)n}(y) a(y) b(y)
double f_pairing(const DiscreteFunction& a, const DiscreteFunction& b, const PhaseGrid& grid);
/// sum_n <kappa_bar_n, C_bar_n>_f for rescaled tables, or sum_n binom(N,n) <kappa_n, C_n>_f otherwise.
double cumulant_pairing(const CumulantTable& kappa, const CumulantTable& dual, const PhaseGrid& grid);

/// Least-squares solve of the subset expansion phi = sum_A c_A(z_A) with every c_A
/// cancelling in each of its slots; returns c for the subsets {0..n-1}. Validation only.
std::vector<DiscreteFunction> brute_force_expansion(const DiscreteFunction& phi, const PhaseGrid& grid);

}  // namespace mfchaos

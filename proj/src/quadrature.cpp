#include "mfchaos/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "mfchaos/phase.hpp"

namespace mfchaos {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights the
// squared first eigenvector components times mu0.
QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigensolve failed");
  const auto n = static_cast<std::size_t>(diag.size());
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    rule.nodes[i] = solver.eigenvalues()(col);
    const double c = solver.eigenvectors()(0, col);
    rule.weights[i] = mu0 * c * c;
  }
  return rule;
}

}  // namespace

QuadratureRule periodic_trapezoid(std::size_t n) {
  if (n == 0) throw std::invalid_argument("periodic_trapezoid: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.assign(n, kTwoPi / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) rule.nodes[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
  return rule;
}

QuadratureRule trapezoid(std::size_t n, double a, double b) {
  if (n < 2 || !(b > a)) throw std::invalid_argument("trapezoid: need n >= 2 and b > a");
  const double h = (b - a) / static_cast<double>(n - 1);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.assign(n, h);
  rule.weights.front() = rule.weights.back() = 0.5 * h;
  for (std::size_t i = 0; i < n; ++i) rule.nodes[i] = a + h * static_cast<double>(i);
  return rule;
}

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0 || !(b > a)) throw std::invalid_argument("gauss_legendre: need n >= 1 and b > a");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd off(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index k = 1; k < m; ++k) {
    const double kk = static_cast<double>(k);
    off(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  QuadratureRule rule = golub_welsch(diag, off, 2.0);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

QuadratureRule gauss_hermite_probability(std::size_t n, double theta) {
  if (n == 0 || !(theta > 0.0)) throw std::invalid_argument("gauss_hermite_probability: need n >= 1, theta > 0");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd off(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index k = 1; k < m; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  QuadratureRule rule = golub_welsch(diag, off, 1.0);
  const double scale = std::sqrt(theta);
  for (auto& x : rule.nodes) x *= scale;
  return rule;
}

}  // namespace mfchaos

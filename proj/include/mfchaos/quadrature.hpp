#pragma once

#include <cstddef>
#include <vector>

namespace mfchaos {

/// Nodes with Lebesgue weights on an interval or the torus.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Periodic trapezoid rule on [0, 2pi).
QuadratureRule periodic_trapezoid(std::size_t n);

/// Closed trapezoid rule on [a, b].
QuadratureRule trapezoid(std::size_t n, double a, double b);

/// Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

/// Gauss-Hermite rule for the N(0, theta) law; weights are probabilities
/// (they sum to 1 and integrate against the Gaussian density).
QuadratureRule gauss_hermite_probability(std::size_t n, double theta);

}  // namespace mfchaos

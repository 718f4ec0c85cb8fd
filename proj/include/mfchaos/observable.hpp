#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mfchaos/phase.hpp"

namespace mfchaos {

/// One term  coef * trig(k x) * v^power  of a test function.
struct TestTerm {
  enum class Trig { one, cos, sin };
  double coef = 1.0;
  Trig trig = Trig::one;
  int wavenumber = 0;
  int power = 0;
};

/// Test function psi(x, v): a trigonometric polynomial in x times a polynomial in v.
///
/// Text form is a sum of products, e.g. "v^2", "cos(x)*v + 0.5*sin(2x)", "1".
class TestFunction {
 public:
  TestFunction() = default;
  explicit TestFunction(std::vector<TestTerm> terms) : terms_(std::move(terms)) {}

  static TestFunction constant(double c);
  static TestFunction parse(std::string_view text);

  double operator()(double x, double v) const;
  /// (d psi/dx, d psi/dv) at (x, v).
  Phase gradient(double x, double v) const;

  const std::vector<TestTerm>& terms() const { return terms_; }
  bool depends_on_x() const;
  bool depends_on_v() const;
  /// psi - c
  TestFunction shifted(double c) const;
  /// sup |psi| when psi does not depend on v; infinity otherwise.
  double sup_norm() const;
  std::string str() const;

 private:
  std::vector<TestTerm> terms_;
};

}  // namespace mfchaos

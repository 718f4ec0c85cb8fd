#include "mfchaos/observable.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mfchaos {

namespace {

class TermParser {
 public:
  explicit TermParser(std::string_view text) : s_(text) {}

  std::vector<TestTerm> parse() {
    std::vector<TestTerm> terms;
    skip_ws();
    if (pos_ == s_.size()) fail("empty test function");
    double sign = 1.0;
    if (peek() == '-') {
      sign = -1.0;
      ++pos_;
    } else if (peek() == '+') {
      ++pos_;
    }
    while (true) {
      TestTerm t = parse_term();
      t.coef *= sign;
      terms.push_back(t);
      skip_ws();
      if (pos_ == s_.size()) break;
      const char c = s_[pos_++];
      if (c == '+') sign = 1.0;
      else if (c == '-') sign = -1.0;
      else fail("expected '+' or '-'");
    }
    return terms;
  }

 private:
  TestTerm parse_term() {
    TestTerm t;
    bool first = true;
    while (true) {
      skip_ws();
      if (!first) {
        if (pos_ < s_.size() && s_[pos_] == '*') ++pos_;
        else break;
        skip_ws();
      }
      first = false;
      parse_factor(t);
    }
    return t;
  }

  void parse_factor(TestTerm& t) {
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      t.coef *= parse_number();
    } else if (c == 'v') {
      ++pos_;
      int p = 1;
      skip_ws();
      if (peek() == '^') {
        ++pos_;
        p = static_cast<int>(parse_number());
        if (p < 0) fail("negative power");
      }
      t.power += p;
    } else if (s_.substr(pos_, 4) == "cos(" || s_.substr(pos_, 4) == "sin(") {
      if (t.trig != TestTerm::Trig::one) fail("at most one trigonometric factor per term");
      t.trig = s_[pos_] == 'c' ? TestTerm::Trig::cos : TestTerm::Trig::sin;
      pos_ += 4;
      skip_ws();
      int k = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        k = static_cast<int>(parse_number());
        skip_ws();
        if (peek() == '*') ++pos_;
        skip_ws();
      }
      if (peek() != 'x') fail("expected 'x' inside trigonometric factor");
      ++pos_;
      skip_ws();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      if (k <= 0) fail("wavenumber must be positive");
      t.wavenumber = k;
    } else {
      fail("unexpected character");
    }
  }

  double parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' || s_[pos_] == 'e' ||
            ((s_[pos_] == '-' || s_[pos_] == '+') && pos_ > start && s_[pos_ - 1] == 'e')))
      ++pos_;
    const std::string token(s_.substr(start, pos_ - start));
    try {
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) fail("malformed number");
      return value;
    } catch (const std::logic_error&) {
      fail("malformed number");
    }
    return 0.0;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("test function '" + std::string(s_) + "': " + what + " at offset " +
                                std::to_string(pos_));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

TestFunction TestFunction::constant(double c) { return TestFunction({TestTerm{c, TestTerm::Trig::one, 0, 0}}); }

TestFunction TestFunction::parse(std::string_view text) { return TestFunction(TermParser(text).parse()); }

double TestFunction::operator()(double x, double v) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double term = t.coef;
    switch (t.trig) {
      case TestTerm::Trig::cos: term *= std::cos(t.wavenumber * x); break;
      case TestTerm::Trig::sin: term *= std::sin(t.wavenumber * x); break;
      case TestTerm::Trig::one: break;
    }
    for (int p = 0; p < t.power; ++p) term *= v;
    sum += term;
  }
  return sum;
}

Phase TestFunction::gradient(double x, double v) const {
  Phase g{0.0, 0.0};
  for (const auto& t : terms_) {
    double trig = 1.0, dtrig = 0.0;
    const double k = t.wavenumber;
    switch (t.trig) {
      case TestTerm::Trig::cos: trig = std::cos(k * x); dtrig = -k * std::sin(k * x); break;
      case TestTerm::Trig::sin: trig = std::sin(k * x); dtrig = k * std::cos(k * x); break;
      case TestTerm::Trig::one: break;
    }
    double vp = 1.0, dvp = 0.0;
    for (int p = 0; p < t.power; ++p) {
      dvp = dvp * v + vp;
      vp *= v;
    }
    g.x += t.coef * dtrig * vp;
    g.v += t.coef * trig * dvp;
  }
  return g;
}

bool TestFunction::depends_on_x() const {
  for (const auto& t : terms_)
    if (t.trig != TestTerm::Trig::one && t.coef != 0.0) return true;
  return false;
}

bool TestFunction::depends_on_v() const {
  for (const auto& t : terms_)
    if (t.power > 0 && t.coef != 0.0) return true;
  return false;
}

TestFunction TestFunction::shifted(double c) const {
  auto terms = terms_;
  terms.push_back(TestTerm{-c, TestTerm::Trig::one, 0, 0});
  return TestFunction(std::move(terms));
}

double TestFunction::sup_norm() const {
  if (depends_on_v()) return std::numeric_limits<double>::infinity();
  // crude but valid bound: sum of |coef|
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coef);
  return s;
}

std::string TestFunction::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    double c = t.coef;
    if (i) {
      os << (c < 0 ? " - " : " + ");
      c = std::abs(c);
    }
    os << c;
    if (t.trig != TestTerm::Trig::one)
      os << "*" << (t.trig == TestTerm::Trig::cos ? "cos(" : "sin(") << t.wavenumber << "x)";
    if (t.power == 1) os << "*v";
    else if (t.power > 1) os << "*v^" << t.power;
  }
  return os.str();
}

}  // namespace mfchaos

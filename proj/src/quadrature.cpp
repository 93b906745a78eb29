#include "opsplit/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include "opsplit/errors.hpp"

namespace opsplit {
namespace {

void add_orbit3(QuadratureRule& rule, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  rule.points.push_back({a, a, b});
  rule.points.push_back({a, b, a});
  rule.points.push_back({b, a, a});
  for (int k = 0; k < 3; ++k) rule.weights.push_back(0.5 * w);
}

void add_orbit6(QuadratureRule& rule, double a, double b, double w) {
  const double c = 1.0 - a - b;
  for (const auto& p : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c},
                        std::array{b, c, a}, std::array{c, a, b}, std::array{c, b, a}}) {
    rule.points.push_back(p);
    rule.weights.push_back(0.5 * w);
  }
}

// Dunavant (1985) symmetric rules.
QuadratureRule make_degree4() {
  QuadratureRule rule;
  rule.exact_degree = 4;
  add_orbit3(rule, 0.445948490915965, 0.223381589678011);
  add_orbit3(rule, 0.091576213509771, 0.109951743655322);
  return rule;
}

QuadratureRule make_degree6() {
  QuadratureRule rule;
  rule.exact_degree = 6;
  add_orbit3(rule, 0.249286745170910, 0.116786275726379);
  add_orbit3(rule, 0.063089014491502, 0.050844906370207);
  add_orbit6(rule, 0.053145049844817, 0.310352451033784, 0.082851075618374);
  return rule;
}

}  // namespace

const QuadratureRule& triangle_rule_degree4() {
  static const QuadratureRule rule = make_degree4();
  return rule;
}

const QuadratureRule& triangle_rule_degree6() {
  static const QuadratureRule rule = make_degree6();
  return rule;
}

LineRule gauss_line_rule(int n) {
  if (n < 1) throw InvalidArgument("gauss_line_rule: need at least one point");
  // legendre_p_zeros returns the non-negative roots in ascending order.
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> roots;
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it != 0.0) roots.push_back(-*it);
  }
  for (double z : zeros) roots.push_back(z);

  LineRule rule;
  for (double x : roots) {
    const double dp = boost::math::legendre_p_prime(n, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points.push_back(0.5 * (x + 1.0));
    rule.weights.push_back(0.5 * w);
  }
  return rule;
}

QuadratureRule collapsed_gauss_rule(int n) {
  const LineRule line = gauss_line_rule(n);
  QuadratureRule rule;
  rule.exact_degree = 2 * n - 2;
  for (std::size_t a = 0; a < line.points.size(); ++a) {
    for (std::size_t b = 0; b < line.points.size(); ++b) {
      const double s = line.points[a], t = line.points[b];
      const double x = s * (1.0 - t), y = t;
      rule.points.push_back({1.0 - x - y, x, y});
      rule.weights.push_back(line.weights[a] * line.weights[b] * (1.0 - t));
    }
  }
  return rule;
}

}  // namespace opsplit

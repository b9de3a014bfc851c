#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vkde {
namespace quad {

//! Nodes and weights of a Gauss-Legendre rule on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

//! Computes an n-point Gauss-Legendre rule by Newton iteration on the
//! three-term Legendre recurrence.  Nodes converge to machine precision in
//! a handful of iterations; the rule integrates polynomials of degree
//! 2n - 1 exactly.
inline Rule gauss_legendre(std::size_t n)
{
  if (n == 0)
    throw std::invalid_argument("gauss_legendre: order must be positive");
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Tricomi-style initial guess, then Newton on P_n(x).
    double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15)
        break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1)
    rule.nodes[n / 2] = 0.0;
  return rule;
}

//! Shared 64-point rule; the workhorse for all kernel-moment integrals.
inline const Rule& gauss_legendre_64()
{
  static const Rule rule = gauss_legendre(64);
  return rule;
}

//! Integrates f over [a, b] with a composite 64-point Gauss-Legendre rule
//! split into `panels` equal panels.
template <class F>
inline double integrate(F&& f, double a, double b, std::size_t panels = 8)
{
  if (!(a <= b))
    throw std::invalid_argument("integrate: interval is empty");
  if (panels == 0)
    throw std::invalid_argument("integrate: need at least one panel");
  const Rule& rule = gauss_legendre_64();
  const double width = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double mid = lo + 0.5 * width;
    const double half = 0.5 * width;
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
      acc += rule.weights[k] * f(mid + half * rule.nodes[k]);
    total += acc * half;
  }
  return total;
}

//! Tensor-product composite rule over the box [ax, bx] x [ay, by].
template <class F>
inline double integrate_box(F&& f, double ax, double bx, double ay, double by,
                            std::size_t panels = 16)
{
  return integrate(
      [&](double y) {
        return integrate([&](double x) { return f(x, y); }, ax, bx, panels);
      },
      ay, by, panels);
}

} // namespace quad
} // namespace vkde

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace vkde {

//! Smooth clipping of the square-root bandwidth law.
//!
//! The bandwidth multiplier applied to an observation with (pilot) density
//! value s is alpha(s) = c * sqrt(p(s / c^2)), where p >= 1 is a smooth
//! clipping function with p(t) = t for t >= t0 and p(t) = 1 for t <= 0.
//! Above the clipping threshold t0 c^2 this reduces to alpha = sqrt(s); at
//! low density values it saturates at alpha = c, so per-observation
//! bandwidths h / alpha(s) never exceed h / c.
class ClippingSpec {
 public:
  using Fn = std::function<double(double)>;

  //! Builtin clipping function: a degree-ten polynomial splice on [0, 2]
  //! that joins 1 and the identity with five continuous derivatives at
  //! both ends (t0 = 2).
  explicit ClippingSpec(double c)
      : ClippingSpec(c, 2.0, &builtin_p, &builtin_p_prime, &builtin_p_second)
  {
  }

  //! Custom clipping function with its first two derivatives.  The
  //! constructor spot-checks the contract: p >= 1 everywhere, p(t) = t for
  //! t >= t0, p(t) = 1 for t <= 0, and continuity of p and p' at the joins.
  ClippingSpec(double c, double t0, Fn p, Fn p_prime, Fn p_second)
      : c_(c), t0_(t0), p_(std::move(p)), p_prime_(std::move(p_prime)),
        p_second_(std::move(p_second))
  {
    if (!(c_ > 0.0))
      throw std::invalid_argument("clipping: c must be positive");
    if (!(t0_ > 0.0))
      throw std::invalid_argument("clipping: t0 must be positive");
    validate();
  }

  double c() const { return c_; }
  double t0() const { return t0_; }

  double p(double t) const { return p_(t); }
  double p_prime(double t) const { return p_prime_(t); }
  double p_second(double t) const { return p_second_(t); }

  //! Bandwidth multiplier alpha(s) = c sqrt(p(s / c^2)).
  double alpha(double s) const { return c_ * std::sqrt(p_(s / (c_ * c_))); }

  //! First derivative of alpha with respect to the density value.
  double alpha_prime(double s) const
  {
    const double u = s / (c_ * c_);
    return p_prime_(u) / (2.0 * c_ * std::sqrt(p_(u)));
  }

  //! Second derivative of alpha with respect to the density value.
  double alpha_second(double s) const
  {
    const double u = s / (c_ * c_);
    const double pv = p_(u);
    const double dp = p_prime_(u);
    const double root = std::sqrt(pv);
    const double g2 = p_second_(u) / (2.0 * root) - dp * dp / (4.0 * pv * root);
    return g2 / (c_ * c_ * c_);
  }

  //! alpha(s)^d.
  double alpha_pow_d(double s, int d) const
  {
    const double a = alpha(s);
    return d == 1 ? a : std::pow(a, d);
  }

  //! Derivative of alpha(s)^d with respect to s:
  //! d * alpha(s)^(d-1) * alpha'(s).
  double alpha_pow_d_prime(double s, int d) const
  {
    const double a = alpha(s);
    const double base = d == 1 ? 1.0 : std::pow(a, d - 1);
    return static_cast<double>(d) * base * alpha_prime(s);
  }

  //! The builtin clipping function (t0 = 2).
  static double builtin_p(double t)
  {
    if (t <= 0.0)
      return 1.0;
    if (t >= 2.0)
      return t;
    const double w = t - 2.0;
    const double q =
        1.0 + w * (-2.0 + w * (2.25 + w * (-1.75 + w * 0.875)));
    const double t3 = t * t * t;
    return 1.0 + (t3 * t3 / 64.0) * q;
  }

  //! Derivative of the builtin clipping function.
  static double builtin_p_prime(double t)
  {
    if (t <= 0.0)
      return 0.0;
    if (t >= 2.0)
      return 1.0;
    const double w = t - 2.0;
    const double q =
        1.0 + w * (-2.0 + w * (2.25 + w * (-1.75 + w * 0.875)));
    const double dq = -2.0 + w * (4.5 + w * (-5.25 + w * 3.5));
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double t5 = t2 * t3;
    return (6.0 * t5 * q + t3 * t3 * dq) / 64.0;
  }

  //! Second derivative of the builtin clipping function.
  static double builtin_p_second(double t)
  {
    if (t <= 0.0 || t >= 2.0)
      return 0.0;
    const double w = t - 2.0;
    const double q =
        1.0 + w * (-2.0 + w * (2.25 + w * (-1.75 + w * 0.875)));
    const double dq = -2.0 + w * (4.5 + w * (-5.25 + w * 3.5));
    const double d2q = 4.5 + w * (-10.5 + w * 10.5);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double t4 = t2 * t2;
    const double t5 = t4 * t;
    return (30.0 * t4 * q + 12.0 * t5 * dq + t3 * t3 * d2q) / 64.0;
  }

 private:
  void validate() const
  {
    const double eps = 1e-7;
    auto close = [](double a, double b, double tol) {
      return std::abs(a - b) <= tol;
    };
    if (!close(p_(0.0), 1.0, 1e-12) || !close(p_(-1.0), 1.0, 1e-12))
      throw std::invalid_argument("clipping: p must equal 1 for t <= 0");
    for (double t : {t0_, 1.5 * t0_, 4.0 * t0_})
      if (!close(p_(t), t, 1e-12 * std::max(1.0, t)))
        throw std::invalid_argument("clipping: p must equal t for t >= t0");
    const double step = t0_ / 64.0;
    for (double t = 0.0; t <= t0_ + step / 2; t += step)
      if (p_(t) < 1.0 - 1e-12)
        throw std::invalid_argument("clipping: p must stay >= 1");
    // continuity of p and p' across the joins
    if (!close(p_(eps), 1.0, 1e-5) || !close(p_(t0_ - eps), t0_, 1e-5))
      throw std::invalid_argument("clipping: p discontinuous at a join");
    if (!close(p_prime_(eps), p_prime_(0.0), 1e-4) ||
        !close(p_prime_(t0_ - eps), p_prime_(t0_ + eps), 1e-4))
      throw std::invalid_argument("clipping: p' discontinuous at a join");
  }

  double c_;
  double t0_;
  Fn p_;
  Fn p_prime_;
  Fn p_second_;
};

//! Data-driven clipping constant: c = sqrt(r_hat / t0) with r_hat the
//! q-quantile (default 5%) of the pilot density values over the sample,
//! so roughly a (1-q) fraction of observations fall in the exact
//! square-root region.
inline double auto_clipping_constant(std::span<const double> pilot_values,
                                     double t0 = 2.0, double q = 0.05)
{
  if (pilot_values.empty())
    throw std::invalid_argument("auto_clipping_constant: no pilot values");
  if (!(t0 > 0.0))
    throw std::invalid_argument("auto_clipping_constant: t0 must be positive");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("auto_clipping_constant: q must be in (0, 1)");
  std::vector<double> sorted(pilot_values.begin(), pilot_values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  const double r_hat = i + 1 < sorted.size()
                           ? sorted[i] + frac * (sorted[i + 1] - sorted[i])
                           : sorted.back();
  if (!(r_hat > 0.0))
    throw std::domain_error(
        "auto_clipping_constant: pilot quantile is not positive");
  return std::sqrt(r_hat / t0);
}

} // namespace vkde

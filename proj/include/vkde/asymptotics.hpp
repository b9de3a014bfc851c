#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "vkde/clipping.hpp"
#include "vkde/densities.hpp"
#include "vkde/kernels.hpp"
#include "vkde/quadrature.hpp"
#include "vkde/stats.hpp"

namespace vkde {

//! Region on which the asymptotic statements hold: density above a level r
//! that exceeds the clipping threshold t0 c^2 (so the square-root law is
//! exact there) and norm below 1/r.
class EvaluationRegion {
 public:
  EvaluationRegion(const DensityModel& model, const ClippingSpec& clip,
                   double r)
      : model_(&model), r_(r)
  {
    if (!(r > clip.t0() * clip.c() * clip.c()))
      throw std::invalid_argument(
          "evaluation region: r must exceed the clipping threshold t0*c^2");
    if (!(r > 0.0))
      throw std::invalid_argument("evaluation region: r must be positive");
  }

  double r() const { return r_; }

  bool contains(double t) const
  {
    return model_->pdf(t) > r_ && std::abs(t) < 1.0 / r_;
  }

 private:
  const DensityModel* model_;
  double r_;
};

//! Leading bias constant of the variable-bandwidth estimator (d = 1):
//! B(t) = tau_4 (1/f)''''(t) / 4!, so the bias is B(t) h^4 + o(h^4) on the
//! evaluation region.
inline double bias_constant(const DensityModel& model,
                            const KernelMoments& moments, double t)
{
  if (moments.dim != 1)
    throw std::invalid_argument("bias_constant: one-dimensional moments");
  if (moments.max_order < 4)
    throw std::invalid_argument("bias_constant: moments up to order 4 needed");
  return moments.tau1(4) * model.inv_pdf_deriv4(t) / 24.0;
}

//! Central mixed partial derivative D_v g at t (nested five-point-capable
//! stencils per axis, orders up to 4); used for multivariate bias constants
//! when no analytic derivative is available.
inline double fd_mixed_deriv(const std::function<double(std::span<const double>)>& g,
                             std::vector<double> t, const MultiIndex& v,
                             double step = 5e-3)
{
  struct Stencil {
    std::vector<double> offsets;
    std::vector<double> weights;
    int hpow;
  };
  static const std::vector<Stencil> stencils = {
      {{0.0}, {1.0}, 0},
      {{-1.0, 1.0}, {-0.5, 0.5}, 1},
      {{-1.0, 0.0, 1.0}, {1.0, -2.0, 1.0}, 2},
      {{-2.0, -1.0, 1.0, 2.0}, {-0.5, 1.0, -1.0, 0.5}, 3},
      {{-2.0, -1.0, 0.0, 1.0, 2.0}, {1.0, -4.0, 6.0, -4.0, 1.0}, 4}};
  if (v.size() != t.size())
    throw std::invalid_argument("fd_mixed_deriv: order/point size mismatch");
  std::function<double(std::size_t)> recurse = [&](std::size_t axis) -> double {
    if (axis == v.size())
      return g(std::span<const double>(t));
    const int order = v[axis];
    if (order < 0 || order > 4)
      throw std::invalid_argument("fd_mixed_deriv: orders up to 4 only");
    const Stencil& s = stencils[static_cast<std::size_t>(order)];
    const double h = step * std::max(1.0, std::abs(t[axis]));
    const double saved = t[axis];
    double acc = 0.0;
    for (std::size_t k = 0; k < s.offsets.size(); ++k) {
      t[axis] = saved + h * s.offsets[k];
      acc += s.weights[k] * recurse(axis + 1);
    }
    t[axis] = saved;
    return acc / std::pow(h, s.hpow);
  };
  return recurse(0);
}

//! Leading coefficients of the oracle estimator's variance expansion,
//!   n h^d Var = a0 + a2 h^2 + O(h^4),
//! with a0 = gamma^d(t) f(t) mu0 and a2 built from the second derivative of
//! f / gamma^{2-d} (computed by central differences), gamma = alpha(f).
struct VarianceCoeffs {
  double a0 = 0.0;
  double a2 = 0.0;
};

inline VarianceCoeffs ideal_variance_coeffs(const DensityModel& model,
                                            const KernelMoments& moments,
                                            const ClippingSpec& clip, double t)
{
  if (moments.dim != 1)
    throw std::invalid_argument("ideal_variance_coeffs: one-dimensional");
  const double f = model.pdf(t);
  const double gamma = clip.alpha(f);
  VarianceCoeffs out;
  out.a0 = gamma * f * moments.mu0;
  const auto g = [&](double x) {
    const double fx = model.pdf(x);
    return fx / clip.alpha(fx);
  };
  const double h = 1e-2 * std::max(1.0, std::abs(t));
  const double g2 = (g(t - h) - 2.0 * g(t) + g(t + h)) / (h * h);
  out.a2 = 0.5 * moments.mu1(2) * g2;
  return out;
}

//! Asymptotic variance constant of the two-stage estimator at a point with
//! density value f_t, from the central limit theorem:
//!
//!   sigma_t^2 = alpha^d(f) f mu0
//!             + f^3 [(alpha^d)'(f)]^2 / (d^2 alpha^d(f)) * R(L)
//!             + f^2 (alpha^d)'(f) mu0.
//!
//! In the exact square-root region (d = 1) this collapses to
//! f^{3/2} (3 mu0 / 2 + R(L) / 4); where clipping saturates it is c f mu0.
inline double sigma_t_squared(double f_t, const KernelMoments& moments,
                              const ClippingSpec& clip, int d = 1)
{
  if (!(f_t >= 0.0))
    throw std::domain_error("sigma_t_squared: negative density value");
  if (d != moments.dim)
    throw std::invalid_argument("sigma_t_squared: moment table dimension");
  const double ad = clip.alpha_pow_d(f_t, d);
  const double adp = clip.alpha_pow_d_prime(f_t, d);
  const double dd = static_cast<double>(d);
  return ad * f_t * moments.mu0 +
         f_t * f_t * f_t * adp * adp / (dd * dd * ad) * moments.r_of_L +
         f_t * f_t * adp * moments.mu0;
}

//! Two-sided confidence interval for f(t) from an estimate and the CLT
//! variance constant; optionally recentered by an explicit bias shift
//! (bias_constant * h^4) before the band is applied.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline Interval confidence_interval(double estimate, std::size_t n, double h,
                                    int d, double sigma2, double level = 0.95,
                                    double bias_shift = 0.0)
{
  if (!(level > 0.0 && level < 1.0))
    throw std::domain_error("confidence_interval: level must be in (0, 1)");
  if (!(h > 0.0) || n == 0)
    throw std::invalid_argument("confidence_interval: need n, h > 0");
  if (!(sigma2 > 0.0))
    throw std::domain_error(
        "confidence_interval: variance constant must be positive");
  const double z = stats::normal_quantile(0.5 + level / 2.0);
  const double se =
      std::sqrt(sigma2 / (static_cast<double>(n) * std::pow(h, d)));
  const double center = estimate - bias_shift;
  return {center - z * se, center + z * se};
}

//! Integrals of the squared bias constant and of the variance constant over
//! the evaluation region, the two ingredients of the asymptotic IMSE.  The
//! region is scanned on a uniform cell grid over [-1/r, 1/r]; cells whose
//! endpoints and midpoint all lie in the region are integrated with a
//! 4-point Gauss-Legendre rule.
struct RegionIntegrals {
  double int_B2 = 0.0;
  double int_sigma2 = 0.0;
  double lo = 0.0; //!< leftmost member cell edge
  double hi = 0.0; //!< rightmost member cell edge
};

inline RegionIntegrals region_integrals(const DensityModel& model,
                                        const KernelMoments& moments,
                                        const ClippingSpec& clip,
                                        const EvaluationRegion& region,
                                        std::size_t cells = 2048)
{
  if (cells < 2)
    throw std::invalid_argument("region_integrals: need at least two cells");
  static const quad::Rule rule = quad::gauss_legendre(4);
  const double bound = 1.0 / region.r();
  const double width = 2.0 * bound / static_cast<double>(cells);
  RegionIntegrals out;
  bool any = false;
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = -bound + width * static_cast<double>(i);
    const double b = a + width;
    const double mid = 0.5 * (a + b);
    if (!(region.contains(a) && region.contains(mid) && region.contains(b)))
      continue;
    if (!any) {
      out.lo = a;
      any = true;
    }
    out.hi = b;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double x = mid + 0.5 * width * rule.nodes[k];
      const double w = 0.5 * width * rule.weights[k];
      const double B = bias_constant(model, moments, x);
      out.int_B2 += w * B * B;
      out.int_sigma2 +=
          w * sigma_t_squared(model.pdf(x), moments, clip, moments.dim);
    }
  }
  if (!any)
    throw std::domain_error("region_integrals: evaluation region is empty");
  return out;
}

//! Asymptotic IMSE of the two-stage estimator over the evaluation region at
//! main bandwidth h: h^8 * int B^2 + int sigma^2 / (n h^d).
inline double imse(const RegionIntegrals& ri, std::size_t n, double h,
                   int d = 1)
{
  if (!(h > 0.0) || n == 0)
    throw std::invalid_argument("imse: need n, h > 0");
  return std::pow(h, 8) * ri.int_B2 +
         ri.int_sigma2 / (static_cast<double>(n) * std::pow(h, d));
}

//! Bandwidth minimizing the asymptotic IMSE.  Two forms are reported: the
//! calculus minimizer h_exact = (d * int sigma^2 / (8 n int B^2))^{1/(8+d)}
//! and the rounded rule h_simple = (n int B^2 / int sigma^2)^{-1/(8+d)}
//! that drops the d/8 factor; they differ by exactly (d/8)^{1/(8+d)}.
struct BandwidthSolution {
  double h_exact = 0.0;
  double h_simple = 0.0;
  double int_B2 = 0.0;
  double int_sigma2 = 0.0;
};

inline BandwidthSolution optimal_bandwidth(const RegionIntegrals& ri,
                                           std::size_t n, int d = 1)
{
  if (n == 0)
    throw std::invalid_argument("optimal_bandwidth: n must be positive");
  if (!(ri.int_B2 > 0.0))
    throw std::domain_error(
        "optimal_bandwidth: the bias constant vanishes on the region; the "
        "asymptotic IMSE has no interior minimum");
  if (!(ri.int_sigma2 > 0.0))
    throw std::domain_error("optimal_bandwidth: variance integral is zero");
  const double dn = static_cast<double>(n);
  const double expo = 1.0 / (8.0 + static_cast<double>(d));
  BandwidthSolution out;
  out.int_B2 = ri.int_B2;
  out.int_sigma2 = ri.int_sigma2;
  out.h_simple = std::pow(dn * ri.int_B2 / ri.int_sigma2, -expo);
  out.h_exact = std::pow(
      static_cast<double>(d) * ri.int_sigma2 / (8.0 * dn * ri.int_B2), expo);
  return out;
}

//! Pilot-rate diagnostic U(h1, n) = sqrt(log(1/h1) / (n h1^d)) + h1^2.  The
//! two-stage expansion needs U = o(h2^2); the companion ratio U / h2^2
//! quantifies how far a concrete configuration is from that regime.
inline double rate_u(double h1, std::size_t n, int d = 1)
{
  if (!(h1 > 0.0) || !(h1 < 1.0))
    throw std::domain_error("rate_u: h1 must lie in (0, 1)");
  if (n == 0)
    throw std::invalid_argument("rate_u: n must be positive");
  return std::sqrt(std::log(1.0 / h1) /
                   (static_cast<double>(n) * std::pow(h1, d))) +
         h1 * h1;
}

struct RateDiagnostic {
  double u = 0.0;
  double ratio = 0.0; //!< U / h2^2
  bool separated = false; //!< ratio < 1
};

inline RateDiagnostic rate_diagnostic(double h1, double h2, std::size_t n,
                                      int d = 1)
{
  if (!(h2 > 0.0))
    throw std::domain_error("rate_diagnostic: h2 must be positive");
  RateDiagnostic out;
  out.u = rate_u(h1, n, d);
  out.ratio = out.u / (h2 * h2);
  out.separated = out.ratio < 1.0;
  return out;
}

} // namespace vkde

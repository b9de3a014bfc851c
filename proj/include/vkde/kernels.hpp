#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vkde/quadrature.hpp"

namespace vkde {

//! Multi-index of partial-derivative / monomial orders, one entry per axis.
using MultiIndex = std::vector<int>;

//! Compactly supported radial kernel K(t) = profile(||t||^2).
//!
//! The profile carries the dimension-dependent normalization, so that
//! K integrates to one over R^d.  All evaluations return exact zeros
//! outside the support, which windowed summation relies on.
class Kernel {
 public:
  //! Tricube kernel (70/81)(1 - |u|^3)^3 on [-1, 1]; one-dimensional.
  static Kernel tricube()
  {
    return Kernel("tricube", 1, Family::tricube, 1.0, false);
  }

  //! Epanechnikov kernel c_d (1 - ||t||^2)_+ for d in {1, 2}.
  static Kernel epanechnikov(int dim = 1)
  {
    return Kernel("epanechnikov", dim, Family::epanechnikov, 1.0, false);
  }

  //! Biweight kernel c_d (1 - ||t||^2)_+^2 for d in {1, 2}.
  static Kernel biweight(int dim = 1)
  {
    return Kernel("biweight", dim, Family::biweight, 1.0, true);
  }

  //! Looks a builtin kernel up by name ("tricube", "epanechnikov",
  //! "biweight").
  static Kernel from_name(std::string_view name, int dim = 1)
  {
    if (name == "tricube") {
      if (dim != 1)
        throw std::invalid_argument("tricube kernel is one-dimensional");
      return tricube();
    }
    if (name == "epanechnikov")
      return epanechnikov(dim);
    if (name == "biweight")
      return biweight(dim);
    throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
  }

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }

  //! Radius of the support ball: K vanishes for ||t|| >= support_radius().
  double support_radius() const { return support_radius_; }

  //! True when the profile has a bounded second derivative on its support
  //! (biweight); tricube and Epanechnikov profiles do not, which weakens
  //! the smoothness hypotheses some asymptotic statements assume.
  bool smooth_profile() const { return smooth_profile_; }

  //! Profile value PHI(s) at squared radius s.
  double profile(double s) const
  {
    if (s >= 1.0 || s < 0.0)
      return 0.0;
    switch (family_) {
      case Family::tricube: {
        const double g = 1.0 - s * std::sqrt(s);
        return tricube_c * g * g * g;
      }
      case Family::epanechnikov:
        return epan_c(dim_) * (1.0 - s);
      case Family::biweight: {
        const double g = 1.0 - s;
        return biweight_c(dim_) * g * g;
      }
    }
    return 0.0;
  }

  //! Profile derivative PHI'(s) (zero outside the open support).
  double profile_deriv(double s) const
  {
    if (s >= 1.0 || s < 0.0)
      return 0.0;
    switch (family_) {
      case Family::tricube: {
        const double r = std::sqrt(s);
        const double g = 1.0 - s * r;
        return -4.5 * tricube_c * r * g * g;
      }
      case Family::epanechnikov:
        return -epan_c(dim_);
      case Family::biweight:
        return -2.0 * biweight_c(dim_) * (1.0 - s);
    }
    return 0.0;
  }

  //! One-dimensional evaluation K(u).
  double operator()(double u) const { return profile(u * u); }

  //! Evaluation at a d-dimensional point.
  double eval(std::span<const double> t) const
  {
    check_dim(t.size());
    return profile(squared_norm(t));
  }

  //! Gradient of K at t; component i equals 2 t_i PHI'(||t||^2).
  std::vector<double> grad(std::span<const double> t) const
  {
    check_dim(t.size());
    const double dp = profile_deriv(squared_norm(t));
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      g[i] = 2.0 * t[i] * dp;
    return g;
  }

  //! Second-order kernel L(t) = d K(t) + sum_i t_i dK/dt_i(t), which
  //! integrates to zero and drives the variance contribution of the
  //! estimated bandwidth factor.
  double second_order(std::span<const double> t) const
  {
    check_dim(t.size());
    const double s = squared_norm(t);
    return dim_ * profile(s) + 2.0 * s * profile_deriv(s);
  }

  //! One-dimensional L(u) = K(u) + u K'(u).
  double second_order(double u) const
  {
    const double s = u * u;
    return profile(s) + 2.0 * s * profile_deriv(s);
  }

 private:
  enum class Family { tricube, epanechnikov, biweight };

  Kernel(std::string name, int dim, Family family, double support_radius,
         bool smooth)
      : name_(std::move(name)), dim_(dim), family_(family),
        support_radius_(support_radius), smooth_profile_(smooth)
  {
    if (dim < 1 || dim > 2)
      throw std::invalid_argument("kernel dimension must be 1 or 2");
    if (family == Family::tricube && dim != 1)
      throw std::invalid_argument("tricube kernel is one-dimensional");
  }

  static constexpr double tricube_c = 70.0 / 81.0;
  static double epan_c(int dim) { return dim == 1 ? 0.75 : 2.0 / M_PI; }
  static double biweight_c(int dim) { return dim == 1 ? 15.0 / 16.0 : 3.0 / M_PI; }

  static double squared_norm(std::span<const double> t)
  {
    double s = 0.0;
    for (double v : t)
      s += v * v;
    return s;
  }

  void check_dim(std::size_t got) const
  {
    if (static_cast<int>(got) != dim_)
      throw std::invalid_argument("kernel: point dimension mismatch");
  }

  std::string name_;
  int dim_;
  Family family_;
  double support_radius_;
  bool smooth_profile_;
};

//! Moment table of a kernel: monomial moments tau_v of K, squared-kernel
//! moments mu_v of K^2, and the roughness of the second-order kernel L.
//! Only even total orders are stored; odd ones vanish by symmetry.
struct KernelMoments {
  int dim = 1;
  int max_order = 4;
  double mu0 = 0.0;    //!< integral of K^2
  double r_of_L = 0.0; //!< integral of L^2
  std::map<MultiIndex, double> tau; //!< t^v K(t) dt, |v| even, <= max_order
  std::map<MultiIndex, double> mu;  //!< t^v K(t)^2 dt, |v| even, <= 2

  //! One-dimensional accessor tau_{order}.
  double tau1(int order) const { return tau.at(MultiIndex{order}); }
  //! One-dimensional accessor mu_{order}.
  double mu1(int order) const { return mu.at(MultiIndex{order}); }
};

namespace detail {

inline void multi_indices_of_order(int dim, int order, MultiIndex& head,
                                   std::vector<MultiIndex>& out)
{
  if (static_cast<int>(head.size()) == dim - 1) {
    head.push_back(order);
    out.push_back(head);
    head.pop_back();
    return;
  }
  for (int k = 0; k <= order; ++k) {
    head.push_back(k);
    multi_indices_of_order(dim, order - k, head, out);
    head.pop_back();
  }
}

//! All multi-indices over `dim` axes with |v| = order.
inline std::vector<MultiIndex> multi_indices_of_order(int dim, int order)
{
  std::vector<MultiIndex> out;
  MultiIndex head;
  multi_indices_of_order(dim, order, head, out);
  return out;
}

} // namespace detail

//! Integrates t^v g(t) over the kernel support box with a composite
//! Gauss-Legendre rule (64 points per panel, tensor product for d = 2).
//! The panel count splits the box at zero so the piecewise-polynomial
//! profiles are integrated exactly in one dimension.
template <class G>
inline double kernel_box_integral(const Kernel& k, const MultiIndex& v, G&& g,
                                  std::size_t panels_1d = 8,
                                  std::size_t panels_2d = 32)
{
  const double R = k.support_radius();
  if (k.dim() == 1) {
    const int p = v.at(0);
    return quad::integrate(
        [&](double x) { return std::pow(x, p) * g(std::span(&x, 1)); }, -R, R,
        panels_1d);
  }
  const int px = v.at(0);
  const int py = v.at(1);
  return quad::integrate_box(
      [&](double x, double y) {
        const double pt[2] = {x, y};
        return std::pow(x, px) * std::pow(y, py) * g(std::span(pt, 2));
      },
      -R, R, -R, R, panels_2d);
}

//! Computes the moment table of a kernel by quadrature: tau_v for all even
//! |v| <= max_order, mu_v for even |v| <= 2, mu0, and the roughness of L.
inline KernelMoments compute_moments(const Kernel& k, int max_order = 4)
{
  if (max_order < 0)
    throw std::invalid_argument("compute_moments: negative max_order");
  KernelMoments m;
  m.dim = k.dim();
  m.max_order = max_order;
  const auto kernel_value = [&](std::span<const double> t) { return k.eval(t); };
  const auto kernel_sq = [&](std::span<const double> t) {
    const double v = k.eval(t);
    return v * v;
  };
  const auto l_sq = [&](std::span<const double> t) {
    const double v = k.second_order(t);
    return v * v;
  };
  for (int order = 0; order <= max_order; order += 2)
    for (const MultiIndex& v : detail::multi_indices_of_order(k.dim(), order))
      m.tau[v] = kernel_box_integral(k, v, kernel_value);
  for (int order = 0; order <= 2; order += 2)
    for (const MultiIndex& v : detail::multi_indices_of_order(k.dim(), order))
      m.mu[v] = kernel_box_integral(k, v, kernel_sq);
  const MultiIndex zero(static_cast<std::size_t>(k.dim()), 0);
  m.mu0 = m.mu.at(zero);
  m.r_of_L = kernel_box_integral(k, zero, l_sq);
  return m;
}

} // namespace vkde

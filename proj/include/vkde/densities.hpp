#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vkde/rng.hpp"
#include "vkde/stats.hpp"

namespace vkde {

//! Reference density with everything the estimators and the asymptotic
//! formulas need from an oracle: density values, distribution function,
//! quantiles, a seeded sampler, and the fourth derivative of 1/f that the
//! bias constant is built from.
//!
//! Builtin models are one-dimensional; custom models (any dim) can be
//! assembled through the public constructor.
class DensityModel {
 public:
  using Fn = std::function<double(double)>;
  using Sampler = std::function<std::vector<double>(std::uint64_t, std::size_t)>;

  //! Standard normal.
  static DensityModel normal()
  {
    DensityModel m("normal");
    m.pdf_ = [](double t) { return stats::normal_pdf(t); };
    m.cdf_ = [](double t) { return stats::normal_cdf(t); };
    m.quantile_ = [](double p) { return stats::normal_quantile(p); };
    m.sampler_ = make_sampler([](rng::Engine& e) { return e.normal(); });
    m.inv_pdf_deriv4_ = [](double t) {
      const double t2 = t * t;
      return std::sqrt(2.0 * M_PI) * std::exp(0.5 * t2) *
             (t2 * t2 + 6.0 * t2 + 3.0);
    };
    return m;
  }

  //! Student t with four degrees of freedom.
  static DensityModel student_t4()
  {
    DensityModel m("t4");
    m.pdf_ = [](double t) {
      const double w = 1.0 + 0.25 * t * t;
      return 0.375 / (w * w * std::sqrt(w));
    };
    m.cdf_ = [](double t) {
      const double s = t / std::sqrt(4.0 + t * t);
      return 0.5 + s * (0.75 - 0.25 * s * s);
    };
    m.quantile_ = [](double p) {
      // closed form for four degrees of freedom
      const double alpha = 4.0 * p * (1.0 - p);
      const double root = std::sqrt(alpha);
      const double mag =
          2.0 * std::sqrt(std::cos(std::acos(root) / 3.0) / root - 1.0);
      return p < 0.5 ? -mag : mag;
    };
    m.sampler_ = make_sampler([](rng::Engine& e) { return e.student_t4(); });
    return m; // 1/f fourth derivative by finite differences
  }

  //! Standard Cauchy; 1/f is a quadratic, so the bias constant vanishes.
  static DensityModel cauchy()
  {
    DensityModel m("cauchy");
    m.pdf_ = [](double t) { return 1.0 / (M_PI * (1.0 + t * t)); };
    m.cdf_ = [](double t) { return 0.5 + std::atan(t) / M_PI; };
    m.quantile_ = [](double p) { return std::tan(M_PI * (p - 0.5)); };
    m.sampler_ = make_sampler([](rng::Engine& e) { return e.cauchy(); });
    m.inv_pdf_deriv4_ = [](double) { return 0.0; };
    return m;
  }

  //! Pareto in the shifted (Lomax) parameterization, f(x) = (1 + x)^{-2}
  //! on x >= 0; again 1/f is quadratic on the support.
  static DensityModel pareto()
  {
    DensityModel m("pareto");
    m.support_lo_ = 0.0;
    m.pdf_ = [](double t) {
      if (t < 0.0)
        return 0.0;
      const double w = 1.0 + t;
      return 1.0 / (w * w);
    };
    m.cdf_ = [](double t) { return t <= 0.0 ? 0.0 : t / (1.0 + t); };
    m.quantile_ = [](double p) { return p / (1.0 - p); };
    m.sampler_ = make_sampler([](rng::Engine& e) { return e.lomax(); });
    m.inv_pdf_deriv4_ = [](double t) {
      if (t < 0.0)
        throw std::domain_error("pareto: point outside support");
      return 0.0;
    };
    return m;
  }

  //! Classical Pareto with unit shape and scale, f(x) = x^{-2} on x >= 1.
  static DensityModel pareto_classical()
  {
    DensityModel m("pareto-classical");
    m.support_lo_ = 1.0;
    m.pdf_ = [](double t) { return t < 1.0 ? 0.0 : 1.0 / (t * t); };
    m.cdf_ = [](double t) { return t <= 1.0 ? 0.0 : 1.0 - 1.0 / t; };
    m.quantile_ = [](double p) { return 1.0 / (1.0 - p); };
    m.sampler_ = make_sampler([](rng::Engine& e) { return e.pareto1(); });
    m.inv_pdf_deriv4_ = [](double t) {
      if (t < 1.0)
        throw std::domain_error("pareto-classical: point outside support");
      return 0.0;
    };
    return m;
  }

  //! Looks a builtin model up by name.
  static DensityModel from_name(std::string_view name)
  {
    if (name == "normal")
      return normal();
    if (name == "t4" || name == "student-t4")
      return student_t4();
    if (name == "cauchy")
      return cauchy();
    if (name == "pareto")
      return pareto();
    if (name == "pareto-classical")
      return pareto_classical();
    throw std::invalid_argument("unknown density model '" + std::string(name) +
                                "'");
  }

  //! Custom one-dimensional model.  Pass an empty inv_pdf_deriv4 to fall
  //! back to finite differences.
  DensityModel(std::string name, Fn pdf, Fn cdf, Fn quantile, Sampler sampler,
               Fn inv_pdf_deriv4 = nullptr,
               double support_lo = -std::numeric_limits<double>::infinity(),
               double support_hi = std::numeric_limits<double>::infinity())
      : name_(std::move(name)), pdf_(std::move(pdf)), cdf_(std::move(cdf)),
        quantile_(std::move(quantile)), sampler_(std::move(sampler)),
        inv_pdf_deriv4_(std::move(inv_pdf_deriv4)), support_lo_(support_lo),
        support_hi_(support_hi)
  {
  }

  const std::string& name() const { return name_; }
  int dim() const { return 1; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }

  double pdf(double t) const { return pdf_(t); }
  double cdf(double t) const { return cdf_(t); }

  double quantile(double p) const
  {
    if (!(p > 0.0 && p < 1.0))
      throw std::domain_error("quantile: p must be in (0, 1)");
    return quantile_(p);
  }

  //! Draws n observations; a given (seed, n) yields a bitwise-identical
  //! sample on every platform and run.
  std::vector<double> sample(std::uint64_t seed, std::size_t n) const
  {
    if (n == 0)
      throw std::invalid_argument("sample: n must be positive");
    return sampler_(seed, n);
  }

  //! Fourth derivative of 1/f at t: analytic when the model carries one,
  //! otherwise the finite-difference fallback below.
  double inv_pdf_deriv4(double t) const
  {
    if (inv_pdf_deriv4_)
      return inv_pdf_deriv4_(t);
    return fd_inv_pdf_deriv4(t);
  }

  bool has_analytic_inv_pdf_deriv4() const
  {
    return static_cast<bool>(inv_pdf_deriv4_);
  }

  //! Finite-difference fourth derivative of 1/f: five-point central
  //! stencil with step 5e-3 * max(1, |t|).  Exposed so the fallback can be
  //! checked against the analytic forms.
  double fd_inv_pdf_deriv4(double t) const
  {
    const double h = 5e-3 * std::max(1.0, std::abs(t));
    double g[5];
    for (int i = -2; i <= 2; ++i) {
      const double f = pdf_(t + h * static_cast<double>(i));
      if (!(f > 0.0))
        throw std::domain_error(
            "inv_pdf_deriv4: density vanishes near t; point must lie in the "
            "support interior");
      g[i + 2] = 1.0 / f;
    }
    const double h2 = h * h;
    return (g[0] - 4.0 * g[1] + 6.0 * g[2] - 4.0 * g[3] + g[4]) / (h2 * h2);
  }

 private:
  explicit DensityModel(std::string name) : name_(std::move(name)) {}

  template <class Draw>
  static Sampler make_sampler(Draw draw)
  {
    return [draw](std::uint64_t seed, std::size_t n) {
      rng::Engine engine(seed);
      std::vector<double> out(n);
      for (double& v : out)
        v = draw(engine);
      return out;
    };
  }

  std::string name_;
  Fn pdf_;
  Fn cdf_;
  Fn quantile_;
  Sampler sampler_;
  Fn inv_pdf_deriv4_;
  double support_lo_ = -std::numeric_limits<double>::infinity();
  double support_hi_ = std::numeric_limits<double>::infinity();
};

} // namespace vkde

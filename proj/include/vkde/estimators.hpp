#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vkde/clipping.hpp"
#include "vkde/densities.hpp"
#include "vkde/kernels.hpp"
#include "vkde/stats.hpp"

namespace vkde {

//! Observation container.  One-dimensional samples keep an ascending copy
//! of the data so estimator sums always run in sorted order (fixing the
//! summation order makes evaluations permutation-invariant) and windows
//! can be located by binary search.
class Sample {
 public:
  //! One-dimensional sample.
  explicit Sample(std::vector<double> values) : Sample(std::move(values), 1) {}

  //! Row-major n x dim sample, dim in {1, 2}.
  Sample(std::vector<double> data, int dim) : data_(std::move(data)), dim_(dim)
  {
    if (dim_ < 1 || dim_ > 2)
      throw std::invalid_argument("sample: dim must be 1 or 2");
    if (data_.empty() || data_.size() % static_cast<std::size_t>(dim_) != 0)
      throw std::invalid_argument("sample: row count must be positive");
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::invalid_argument("sample: values must be finite");
    if (dim_ == 1) {
      sorted_ = data_;
      std::sort(sorted_.begin(), sorted_.end());
    }
  }

  //! Draws from a reference model (one-dimensional).
  static Sample from_model(const DensityModel& model, std::uint64_t seed,
                           std::size_t n)
  {
    return Sample(model.sample(seed, n));
  }

  std::size_t size() const
  {
    return data_.size() / static_cast<std::size_t>(dim_);
  }
  int dim() const { return dim_; }
  const std::vector<double>& data() const { return data_; }

  //! Ascending data copy; one-dimensional samples only.
  const std::vector<double>& sorted() const
  {
    if (dim_ != 1)
      throw std::logic_error("sample: sorted order is one-dimensional");
    return sorted_;
  }

  double min() const { return dim_ == 1 ? sorted_.front() : minmax(0).first; }
  double max() const { return dim_ == 1 ? sorted_.back() : minmax(0).second; }

  //! Componentwise range for multivariate samples.
  std::pair<double, double> minmax(int axis) const
  {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < size(); ++i) {
      const double v = data_[i * static_cast<std::size_t>(dim_) +
                             static_cast<std::size_t>(axis)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

 private:
  std::vector<double> data_;
  int dim_;
  std::vector<double> sorted_;
};

namespace detail {

//! Deterministic pairwise (tree) reduction of term(i) over [lo, hi).
template <class Term>
inline double tree_sum(std::size_t lo, std::size_t hi, const Term& term)
{
  const std::size_t len = hi - lo;
  if (len <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      s += term(i);
    return s;
  }
  const std::size_t mid = lo + len / 2;
  return tree_sum(lo, mid, term) + tree_sum(mid, hi, term);
}

} // namespace detail

//! Evaluation core shared by all six estimators:
//!
//!   value(t) = (1/(n h^d)) sum_i w_i(t) K(lambda_i(t) (t - x_i) / h)
//!
//! with w_i(t) = lambda_i(t)^d, an optional hard cut at |t - x_i| >= h*cap
//! (the indicator variant), and an optional t-dependent floor
//! lambda_i(t) = max(lambda_i, floor(t)) (the pairwise-maximum variant).
//!
//! One-dimensional evaluation walks only the window of observations that
//! can contribute: every per-observation scale is bounded below by
//! lambda_floor, so terms with |t - x_i| >= h * support_radius /
//! lambda_floor vanish identically and the window loses nothing.
//! Multivariate evaluation is a brute-force pass.  Evaluation is const and
//! allocation-free, hence safe to call concurrently.
class KdeEvaluator {
 public:
  //! Uniform scales (classical KDE).
  KdeEvaluator(const Sample& sample, Kernel kernel)
      : KdeEvaluator(sample, std::move(kernel),
                     std::vector<double>(sample.size(), 1.0))
  {
  }

  //! Per-observation scales aligned with the *sorted* order for d = 1 and
  //! with the data order otherwise.
  KdeEvaluator(const Sample& sample, Kernel kernel,
               std::vector<double> lambdas)
      : dim_(sample.dim()), n_(sample.size()), kernel_(std::move(kernel)),
        xs_(dim_ == 1 ? sample.sorted() : sample.data()),
        lambda_(std::move(lambdas))
  {
    if (kernel_.dim() != dim_)
      throw std::invalid_argument("evaluator: kernel/sample dim mismatch");
    if (lambda_.size() != n_)
      throw std::invalid_argument("evaluator: one scale per observation");
    lambda_floor_ = std::numeric_limits<double>::infinity();
    for (double l : lambda_) {
      if (!(l > 0.0) || !std::isfinite(l))
        throw std::invalid_argument("evaluator: scales must be positive");
      lambda_floor_ = std::min(lambda_floor_, l);
    }
  }

  //! Hard cut radius in units of h (indicator estimators); infinity = none.
  void set_cap(double cap)
  {
    if (!(cap > 0.0))
      throw std::invalid_argument("evaluator: cap must be positive");
    cap_ = cap;
  }

  //! t-dependent scale floor (pairwise-maximum estimators).
  void set_scale_floor(std::function<double(double)> floor_fn)
  {
    floor_fn_ = std::move(floor_fn);
  }

  std::size_t size() const { return n_; }
  int dim() const { return dim_; }
  const Kernel& kernel() const { return kernel_; }
  double lambda_floor() const { return lambda_floor_; }
  double lambda_max() const
  {
    return *std::max_element(lambda_.begin(), lambda_.end());
  }
  const std::vector<double>& scales() const { return lambda_; }
  const std::vector<double>& points() const { return xs_; }

  //! One-dimensional point evaluation (windowed).
  double eval1(double t, double h) const
  {
    check_h(h);
    if (dim_ != 1)
      throw std::logic_error("evaluator: eval1 needs a one-dimensional sample");
    const double tfloor =
        floor_fn_ ? std::max(lambda_floor_, floor_fn_(t)) : lambda_floor_;
    double radius = h * kernel_.support_radius() / tfloor;
    if (cap_ < std::numeric_limits<double>::infinity())
      radius = std::min(radius, h * cap_);
    const auto lo_it =
        std::lower_bound(xs_.begin(), xs_.end(), t - radius);
    const auto hi_it = std::upper_bound(lo_it, xs_.end(), t + radius);
    const std::size_t lo = static_cast<std::size_t>(lo_it - xs_.begin());
    const std::size_t hi = static_cast<std::size_t>(hi_it - xs_.begin());
    const double sum = detail::tree_sum(lo, hi, [&](std::size_t i) {
      return term1(i, t, h, tfloor);
    });
    return sum / (static_cast<double>(n_) * h);
  }

  //! One-dimensional brute-force evaluation over all observations; used to
  //! cross-check the windowed path.
  double eval1_brute(double t, double h) const
  {
    check_h(h);
    const double tfloor =
        floor_fn_ ? std::max(lambda_floor_, floor_fn_(t)) : lambda_floor_;
    const double sum = detail::tree_sum(0, n_, [&](std::size_t i) {
      return term1(i, t, h, tfloor);
    });
    return sum / (static_cast<double>(n_) * h);
  }

  //! Multivariate point evaluation (brute force).
  double eval(std::span<const double> t, double h) const
  {
    check_h(h);
    if (static_cast<int>(t.size()) != dim_)
      throw std::invalid_argument("evaluator: point dimension mismatch");
    if (dim_ == 1)
      return eval1(t[0], h);
    const double sum = detail::tree_sum(0, n_, [&](std::size_t i) {
      const double* row = xs_.data() + i * 2;
      const double lam = lambda_[i];
      const double ax = lam * (t[0] - row[0]) / h;
      const double ay = lam * (t[1] - row[1]) / h;
      const double val = kernel_.profile(ax * ax + ay * ay);
      return lam * lam * val;
    });
    return sum / (static_cast<double>(n_) * h * h);
  }

  //! Evaluates a one-dimensional grid.
  std::vector<double> eval_grid(std::span<const double> grid, double h) const
  {
    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
      out[j] = eval1(grid[j], h);
    return out;
  }

  //! Trapezoid mass of the estimate on an implicit uniform grid that covers
  //! every contribution, accumulated observation-by-observation so huge
  //! ranges cost no memory.  The spacing resolves the narrowest effective
  //! bandwidth: spacing = h * support_radius / (lambda_max * points_per_bw).
  double mass_trapezoid(double h, double points_per_bw = 12.0) const
  {
    check_h(h);
    if (dim_ != 1 || floor_fn_ ||
        cap_ < std::numeric_limits<double>::infinity())
      throw std::logic_error("mass_trapezoid: plain one-dimensional sums only");
    const double R = kernel_.support_radius();
    const double spacing = h * R / (lambda_max() * points_per_bw);
    const double origin = xs_.front() - h * R / lambda_floor_ - spacing;
    const double sum = detail::tree_sum(0, n_, [&](std::size_t i) {
      const double lam = lambda_[i];
      const double reach = h * R / lam;
      const auto j_lo =
          static_cast<std::int64_t>(std::ceil((xs_[i] - reach - origin) / spacing));
      const auto j_hi =
          static_cast<std::int64_t>(std::floor((xs_[i] + reach - origin) / spacing));
      double acc = 0.0;
      for (std::int64_t j = j_lo; j <= j_hi; ++j) {
        const double arg = lam * (origin + spacing * static_cast<double>(j) - xs_[i]) / h;
        acc += kernel_.profile(arg * arg);
      }
      return lam * acc;
    });
    return sum * spacing / (static_cast<double>(n_) * h);
  }

 private:
  double term1(std::size_t i, double t, double h, double tfloor) const
  {
    const double dx = t - xs_[i];
    if (cap_ < std::numeric_limits<double>::infinity() &&
        !(std::abs(dx) < h * cap_))
      return 0.0;
    const double lam = floor_fn_ ? std::max(lambda_[i], tfloor) : lambda_[i];
    const double arg = lam * dx / h;
    return lam * kernel_.profile(arg * arg);
  }

  static void check_h(double h)
  {
    if (!(h > 0.0) || !std::isfinite(h))
      throw std::invalid_argument("evaluator: bandwidth must be positive");
  }

  int dim_;
  std::size_t n_;
  Kernel kernel_;
  std::vector<double> xs_;
  std::vector<double> lambda_;
  double lambda_floor_ = 1.0;
  double cap_ = std::numeric_limits<double>::infinity();
  std::function<double(double)> floor_fn_;
};

//! Pilot and main bandwidths of the two-stage estimator.
struct BandwidthPair {
  double h1 = 0.0;
  double h2 = 0.0;
};

//! Reference rates: pilot bandwidth n^{-1/5}, main bandwidth n^{-1/9}.
inline BandwidthPair default_rates(std::size_t n)
{
  if (n == 0)
    throw std::invalid_argument("default_rates: n must be positive");
  const double dn = static_cast<double>(n);
  return {std::pow(dn, -0.2), std::pow(dn, -1.0 / 9.0)};
}

//! Silverman's rule-of-thumb bandwidth, rescaled to the given kernel
//! through the canonical-bandwidth ratio (the usual constant 0.9 is stated
//! for the Gaussian kernel).
inline double silverman_bandwidth(const Sample& sample, const Kernel& kernel)
{
  if (sample.dim() != 1)
    throw std::invalid_argument("silverman_bandwidth: one-dimensional only");
  if (sample.size() < 2)
    throw std::invalid_argument("silverman_bandwidth: need n >= 2");
  const auto& xs = sample.sorted();
  const auto m = stats::sample_moments(xs);
  const double sd = std::sqrt(m.variance);
  const double iqr =
      stats::sorted_quantile(xs, 0.75) - stats::sorted_quantile(xs, 0.25);
  double scale = std::min(sd, iqr / 1.349);
  if (!(scale > 0.0))
    scale = std::max(sd, iqr / 1.349);
  if (!(scale > 0.0))
    throw std::domain_error("silverman_bandwidth: degenerate sample spread");
  const KernelMoments km = compute_moments(kernel, 2);
  const double canon_k = std::pow(km.mu0 / (km.tau1(2) * km.tau1(2)), 0.2);
  const double canon_gauss = std::pow(0.5 / std::sqrt(M_PI), 0.2);
  return 0.9 * scale * std::pow(static_cast<double>(sample.size()), -0.2) *
         canon_k / canon_gauss;
}

//! A density estimate evaluated on a grid.
struct DensityEstimate {
  std::string kind;
  std::string kernel;
  std::size_t n = 0;
  double h1 = 0.0; //!< pilot bandwidth (two-stage estimator only)
  double h2 = 0.0; //!< main bandwidth
  std::vector<double> grid;
  std::vector<double> values;
};

//! Equispaced evaluation grid covering the data range plus a margin of one
//! maximal kernel reach on each side.
inline std::vector<double> default_grid(const Sample& sample, double margin,
                                        std::size_t m = 512)
{
  if (m < 2)
    throw std::invalid_argument("default_grid: need at least two points");
  const double lo = sample.min() - margin;
  const double hi = sample.max() + margin;
  std::vector<double> grid(m);
  for (std::size_t j = 0; j < m; ++j)
    grid[j] =
        lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 1);
  return grid;
}

// -- evaluator factories ----------------------------------------------------

//! Classical fixed-bandwidth KDE core.
inline KdeEvaluator make_classical(const Sample& sample, const Kernel& kernel)
{
  return KdeEvaluator(sample, kernel);
}

namespace detail {

template <class F>
inline std::vector<double> scales_from_1d(const Sample& sample, F&& f)
{
  const auto& xs = sample.sorted();
  std::vector<double> lam(sample.size());
  for (std::size_t i = 0; i < lam.size(); ++i)
    lam[i] = f(xs[i]);
  return lam;
}

template <class F>
inline std::vector<double> scales_from_rows(const Sample& sample, F&& f)
{
  const auto& xs = sample.data();
  const auto d = static_cast<std::size_t>(sample.dim());
  std::vector<double> lam(sample.size());
  for (std::size_t i = 0; i < lam.size(); ++i)
    lam[i] = f(std::span(xs.data() + i * d, d));
  return lam;
}

} // namespace detail

//! Ideal (oracle) variable-bandwidth core: scales alpha(f(x_i)) from the
//! true density.
inline KdeEvaluator make_ideal(const Sample& sample, const Kernel& kernel,
                               const ClippingSpec& clip,
                               const DensityModel& model)
{
  if (sample.dim() != 1)
    throw std::invalid_argument("ideal estimator: builtin models are "
                                "one-dimensional; use make_ideal_nd");
  return KdeEvaluator(sample, kernel,
                      detail::scales_from_1d(sample, [&](double x) {
                        return clip.alpha(model.pdf(x));
                      }));
}

//! Multivariate ideal core with a density callback.
inline KdeEvaluator
make_ideal_nd(const Sample& sample, const Kernel& kernel,
              const ClippingSpec& clip,
              const std::function<double(std::span<const double>)>& pdf)
{
  return KdeEvaluator(sample, kernel,
                      detail::scales_from_rows(
                          sample, [&](std::span<const double> pt) {
                            return clip.alpha(pdf(pt));
                          }));
}

//! Unclipped square-root-law core (oracle scales f(x_i)^{1/2}).
inline KdeEvaluator make_sqrt_law(const Sample& sample, const Kernel& kernel,
                                  const DensityModel& model)
{
  if (sample.dim() != 1)
    throw std::invalid_argument(
        "square-root-law estimator: builtin models are one-dimensional");
  return KdeEvaluator(sample, kernel,
                      detail::scales_from_1d(sample, [&](double x) {
                        const double f = model.pdf(x);
                        if (!(f > 0.0))
                          throw std::domain_error(
                              "square-root-law estimator: zero density at an "
                              "observation");
                        return std::sqrt(f);
                      }));
}

//! Pairwise-maximum (Abramson-style) core: scales
//! max(f(x_i), f(t)/10)^{1/2} with the t-dependent floor applied at
//! evaluation time.
inline KdeEvaluator make_pairwise_max(const Sample& sample,
                                      const Kernel& kernel,
                                      const DensityModel& model)
{
  KdeEvaluator ev = make_sqrt_law(sample, kernel, model);
  ev.set_scale_floor(
      [model](double t) { return std::sqrt(model.pdf(t) / 10.0); });
  return ev;
}

//! Indicator-truncated square-root core: the square-root law with the hard
//! cut |t - x_i| < h * cut_radius. One-dimensional.
inline KdeEvaluator make_truncated_sqrt(const Sample& sample,
                                        const Kernel& kernel,
                                        const DensityModel& model,
                                        double cut_radius = 1.0)
{
  if (sample.dim() != 1)
    throw std::invalid_argument(
        "truncated square-root estimator: one-dimensional only");
  KdeEvaluator ev = make_sqrt_law(sample, kernel, model);
  ev.set_cap(cut_radius);
  return ev;
}

//! Classical KDE values of the sample at its own observations: the pilot
//! stage of the two-stage estimator.  Leave-self-in by default; the
//! leave-one-out variant removes each observation's own kernel term and
//! renormalizes by n - 1.
inline std::vector<double> pilot_density(const Sample& sample,
                                         const Kernel& kernel, double h1,
                                         bool leave_one_out = false)
{
  if (sample.dim() != 1)
    throw std::invalid_argument("pilot_density: one-dimensional only");
  const KdeEvaluator ev(sample, kernel);
  const auto& xs = sample.sorted();
  const double n = static_cast<double>(sample.size());
  if (leave_one_out && sample.size() < 2)
    throw std::invalid_argument("pilot_density: leave-one-out needs n >= 2");
  std::vector<double> out(xs.size());
  const double self = kernel.profile(0.0) / h1;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double v = ev.eval1(xs[i], h1);
    if (leave_one_out)
      v = (n * v - self) / (n - 1.0);
    out[i] = v;
  }
  return out;
}

//! Two-stage (plug-in) variable-bandwidth estimator.  The pilot classical
//! KDE at bandwidth h1 feeds the clipped square-root law; the main pass
//! runs at bandwidth h2, which can vary per evaluation so bandwidth sweeps
//! reuse the pilot.
struct PluginOptions {
  std::optional<double> c; //!< clipping constant; empty = data-driven rule
  double t0 = 2.0;
  double clip_quantile = 0.05; //!< pilot quantile for the data-driven rule
  bool leave_one_out = false;
};

class PluginVkde {
 public:
  using Options = PluginOptions;

  PluginVkde(const Sample& sample, const Kernel& kernel, double h1,
             Options options = {})
      : h1_(h1),
        pilot_(pilot_density(sample, kernel, h1, options.leave_one_out)),
        clip_(resolve_clipping(pilot_, options)),
        evaluator_(sample, kernel, scales(pilot_, clip_))
  {
  }

  double h1() const { return h1_; }
  double c() const { return clip_.c(); }
  const ClippingSpec& clipping() const { return clip_; }
  //! Pilot density values aligned with the sorted sample.
  const std::vector<double>& pilot() const { return pilot_; }
  const KdeEvaluator& evaluator() const { return evaluator_; }

  double eval(double t, double h2) const { return evaluator_.eval1(t, h2); }

  std::vector<double> eval_grid(std::span<const double> grid, double h2) const
  {
    return evaluator_.eval_grid(grid, h2);
  }

 private:
  static ClippingSpec resolve_clipping(const std::vector<double>& pilot,
                                       const Options& options)
  {
    if (options.t0 != 2.0)
      throw std::invalid_argument(
          "plugin estimator: the builtin clipping function has t0 = 2");
    const double c = options.c ? *options.c
                               : auto_clipping_constant(pilot, options.t0,
                                                        options.clip_quantile);
    return ClippingSpec(c);
  }

  static std::vector<double> scales(const std::vector<double>& pilot,
                                    const ClippingSpec& clip)
  {
    std::vector<double> lam(pilot.size());
    for (std::size_t i = 0; i < pilot.size(); ++i)
      lam[i] = clip.alpha(pilot[i]);
    return lam;
  }

  double h1_;
  std::vector<double> pilot_;
  ClippingSpec clip_;
  KdeEvaluator evaluator_;
};

// -- one-call curve estimators ----------------------------------------------

namespace detail {

inline DensityEstimate curve(std::string kind, const KdeEvaluator& ev,
                             double h, std::vector<double> grid)
{
  DensityEstimate est;
  est.kind = std::move(kind);
  est.kernel = ev.kernel().name();
  est.n = ev.size();
  est.h2 = h;
  est.values = ev.eval_grid(grid, h);
  est.grid = std::move(grid);
  return est;
}

} // namespace detail

//! Classical fixed-bandwidth kernel density estimate.
inline DensityEstimate classical_kde(const Sample& sample,
                                     const Kernel& kernel, double h,
                                     std::vector<double> grid)
{
  return detail::curve("classical", make_classical(sample, kernel), h,
                       std::move(grid));
}

//! Oracle variable-bandwidth estimate with clipped square-root scales.
inline DensityEstimate ideal_vkde(const Sample& sample, const Kernel& kernel,
                                  double h, const ClippingSpec& clip,
                                  const DensityModel& model,
                                  std::vector<double> grid)
{
  return detail::curve("ideal-vkde", make_ideal(sample, kernel, clip, model),
                       h, std::move(grid));
}

//! Oracle square-root-law estimate without clipping.
inline DensityEstimate hall_marron(const Sample& sample, const Kernel& kernel,
                                   double h, const DensityModel& model,
                                   std::vector<double> grid)
{
  return detail::curve("hall-marron", make_sqrt_law(sample, kernel, model), h,
                       std::move(grid));
}

//! Oracle pairwise-maximum estimate.
inline DensityEstimate abramson(const Sample& sample, const Kernel& kernel,
                                double h, const DensityModel& model,
                                std::vector<double> grid)
{
  return detail::curve("abramson", make_pairwise_max(sample, kernel, model),
                       h, std::move(grid));
}

//! Oracle indicator-truncated square-root estimate.
inline DensityEstimate hhm_kde(const Sample& sample, const Kernel& kernel,
                               double h, const DensityModel& model,
                               std::vector<double> grid,
                               double cut_radius = 1.0)
{
  return detail::curve(
      "hhm", make_truncated_sqrt(sample, kernel, model, cut_radius), h,
      std::move(grid));
}

//! Two-stage estimate; returns the curve along with the pilot by-products.
struct PluginEstimate {
  DensityEstimate estimate;
  double c = 0.0;
  std::vector<double> pilot; //!< aligned with the sorted sample
};

inline PluginEstimate plugin_vkde(const Sample& sample, const Kernel& kernel,
                                  BandwidthPair bw, std::vector<double> grid,
                                  PluginVkde::Options options = {})
{
  const PluginVkde est(sample, kernel, bw.h1, options);
  PluginEstimate out;
  out.estimate =
      detail::curve("plugin-vkde", est.evaluator(), bw.h2, std::move(grid));
  out.estimate.h1 = bw.h1;
  out.c = est.c();
  out.pilot = est.pilot();
  return out;
}

} // namespace vkde

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vkde/asymptotics.hpp"
#include "vkde/estimators.hpp"
#include "vkde/io.hpp"
#include "vkde/rng.hpp"
#include "vkde/stats.hpp"

namespace vkde {
namespace simlab {

using nlohmann::ordered_json;

//! Worker count: the requested value (0 = hardware concurrency), capped by
//! the VKDE_THREADS environment variable when set.
inline unsigned resolve_threads(unsigned requested = 0)
{
  unsigned t = requested ? requested : std::thread::hardware_concurrency();
  if (t == 0)
    t = 1;
  if (const char* env = std::getenv("VKDE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1)
      t = std::min<unsigned>(t, static_cast<unsigned>(cap));
  }
  return t;
}

//! Runs body(i) for i in [0, count) on a small worker pool.  Results must
//! be written to preallocated, index-addressed slots; together with
//! per-replicate seeding this keeps every experiment schedule-independent.
template <class Body>
inline void parallel_for(std::size_t count, unsigned threads, const Body& body)
{
  threads = std::max(1u, std::min<unsigned>(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count)
          return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error)
            error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  for (auto& th : pool)
    th.join();
  if (error)
    std::rethrow_exception(error);
}

namespace detail {

inline void require(bool ok, const char* msg)
{
  if (!ok)
    throw std::invalid_argument(msg);
}

//! Trapezoid integral of (est - f)^2 on an equispaced grid.
inline double ise_trapezoid(const std::vector<double>& grid,
                            const std::vector<double>& est,
                            const std::vector<double>& truth)
{
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const double e0 = est[j] - truth[j];
    const double e1 = est[j + 1] - truth[j + 1];
    acc += 0.5 * (e0 * e0 + e1 * e1) * (grid[j + 1] - grid[j]);
  }
  return acc;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t m)
{
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j)
    out[j] =
        lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 1);
  return out;
}

template <class T>
inline void set_if(const ordered_json& j, const char* key, T& field)
{
  if (j.contains(key))
    field = j.at(key).get<T>();
}

//! Validates config keys.  The "experiment" tag is always accepted (and
//! checked when present) so a written manifest can be fed back as a config.
inline void check_keys(const ordered_json& j, const char* experiment,
                       std::initializer_list<const char*> known)
{
  if (j.contains("experiment")) {
    const auto tag = j.at("experiment").get<std::string>();
    if (tag != experiment)
      throw io::ParseError("config: experiment tag '" + tag +
                           "' does not match requested experiment '" +
                           experiment + "'");
  }
  for (const auto& item : j.items()) {
    if (item.key() == "experiment")
      continue;
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k)
        ok = true;
    if (!ok)
      throw io::ParseError("config: unknown key '" + item.key() + "'");
  }
}

} // namespace detail

// ===========================================================================
// bias-order experiment
// ===========================================================================

//! Pointwise bias of the oracle variable-bandwidth estimator against the
//! classical estimator over a bandwidth ladder: Monte Carlo means of
//! f_hat(t) - f(t), their log-log slopes in h, and the ratio of the
//! observed bias to the predicted  bias_constant * h^4.
struct BiasConfig {
  std::string model = "normal";
  std::string kernel = "tricube";
  double c = 0.3;
  double t = 0.0;
  std::size_t n = 2000;
  std::size_t replicates = 200;
  std::vector<double> hs = {0.9, 0.68, 0.51, 0.38, 0.29};
  std::uint64_t seed = 1u;
  unsigned threads = 0;
};

inline void from_json(const ordered_json& j, BiasConfig& c)
{
  detail::check_keys(j, "bias",
                     {"model", "kernel", "c", "t", "n", "replicates", "hs",
                      "seed", "threads"});
  detail::set_if(j, "model", c.model);
  detail::set_if(j, "kernel", c.kernel);
  detail::set_if(j, "c", c.c);
  detail::set_if(j, "t", c.t);
  detail::set_if(j, "n", c.n);
  detail::set_if(j, "replicates", c.replicates);
  detail::set_if(j, "hs", c.hs);
  detail::set_if(j, "seed", c.seed);
  detail::set_if(j, "threads", c.threads);
}

inline ordered_json to_json(const BiasConfig& c)
{
  return ordered_json{{"experiment", "bias"}, {"model", c.model},
                      {"kernel", c.kernel},   {"c", c.c},
                      {"t", c.t},             {"n", c.n},
                      {"replicates", c.replicates},
                      {"hs", c.hs},           {"seed", c.seed},
                      {"threads", c.threads}};
}

struct BiasPerBandwidth {
  double h = 0.0;
  double mean_bias_ideal = 0.0;
  double se_ideal = 0.0;
  double ratio_ideal = 0.0; //!< mean bias / (bias_constant * h^4)
  double mean_bias_classical = 0.0;
  double se_classical = 0.0;
};

struct BiasResult {
  BiasConfig config;
  double f_t = 0.0;
  double bias_const = 0.0;
  //! rows: replicate, h, ideal estimate, classical estimate
  std::vector<std::vector<double>> records;
  std::vector<BiasPerBandwidth> per_h;
  double slope_ideal = 0.0;
  double slope_classical = 0.0;
  bool inconclusive_ideal = false; //!< |mean| < 2 SE at every bandwidth
  bool inconclusive_classical = false;

  ordered_json summary() const
  {
    ordered_json per = ordered_json::array();
    for (const auto& row : per_h)
      per.push_back(ordered_json{{"h", row.h},
                                 {"mean_bias_ideal", row.mean_bias_ideal},
                                 {"se_ideal", row.se_ideal},
                                 {"ratio_ideal", row.ratio_ideal},
                                 {"mean_bias_classical", row.mean_bias_classical},
                                 {"se_classical", row.se_classical}});
    return ordered_json{{"experiment", "bias"},
                        {"f_t", f_t},
                        {"bias_constant", bias_const},
                        {"slope_ideal", slope_ideal},
                        {"slope_classical", slope_classical},
                        {"inconclusive_ideal", inconclusive_ideal},
                        {"inconclusive_classical", inconclusive_classical},
                        {"per_bandwidth", per}};
  }

  void write(const std::filesystem::path& dir, bool svg = false) const
  {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    io::write_csv(dir / "records.csv",
                  {"replicate", "h", "ideal", "classical"}, records);
    io::write_json(dir / "summary.json", summary());
    io::write_json(dir / "manifest.json", to_json(config));
    std::vector<std::vector<double>> plot;
    std::vector<double> hs, bi, bc, ref;
    for (const auto& row : per_h) {
      hs.push_back(row.h);
      bi.push_back(std::abs(row.mean_bias_ideal));
      bc.push_back(std::abs(row.mean_bias_classical));
      ref.push_back(std::abs(bias_const) * std::pow(row.h, 4));
      plot.push_back({row.h, bi.back(), bc.back(), ref.back()});
    }
    io::write_csv(dir / "plot_bias.csv",
                  {"h", "abs_bias_ideal", "abs_bias_classical",
                   "predicted_ideal"},
                  plot);
    if (svg)
      io::write_svg_lines(dir / "plot_bias.svg", hs,
                          {{"|bias| ideal", bi},
                           {"|bias| classical", bc},
                           {"B(t) h^4", ref}},
                          "pointwise bias vs bandwidth", "h", "|bias|");
  }
};

inline BiasResult run_bias_experiment(const BiasConfig& cfg)
{
  detail::require(!cfg.hs.empty(), "bias experiment: bandwidth grid is empty");
  detail::require(cfg.replicates >= 2, "bias experiment: need replicates >= 2");
  for (double h : cfg.hs)
    detail::require(h > 0.0, "bias experiment: bandwidths must be positive");
  const DensityModel model = DensityModel::from_name(cfg.model);
  const Kernel kernel = Kernel::from_name(cfg.kernel);
  const ClippingSpec clip(cfg.c);
  const KernelMoments moments = compute_moments(kernel);

  BiasResult out;
  out.config = cfg;
  out.f_t = model.pdf(cfg.t);
  out.bias_const = bias_constant(model, moments, cfg.t);

  const std::size_t H = cfg.hs.size();
  const std::size_t M = cfg.replicates;
  std::vector<double> ideal_vals(M * H), classical_vals(M * H);
  parallel_for(M, resolve_threads(cfg.threads), [&](std::size_t m) {
    const Sample sample = Sample::from_model(
        model, rng::replicate_seed(cfg.seed, m), cfg.n);
    const KdeEvaluator ideal = make_ideal(sample, kernel, clip, model);
    const KdeEvaluator classical = make_classical(sample, kernel);
    for (std::size_t k = 0; k < H; ++k) {
      ideal_vals[m * H + k] = ideal.eval1(cfg.t, cfg.hs[k]);
      classical_vals[m * H + k] = classical.eval1(cfg.t, cfg.hs[k]);
    }
  });

  out.records.reserve(M * H);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < H; ++k)
      out.records.push_back({static_cast<double>(m), cfg.hs[k],
                             ideal_vals[m * H + k],
                             classical_vals[m * H + k]});

  std::vector<double> log_h, log_bias_ideal, log_bias_classical;
  bool ideal_seen = false, classical_seen = false;
  for (std::size_t k = 0; k < H; ++k) {
    std::vector<double> iv(M), cv(M);
    for (std::size_t m = 0; m < M; ++m) {
      iv[m] = ideal_vals[m * H + k];
      cv[m] = classical_vals[m * H + k];
    }
    const auto im = stats::sample_moments(iv);
    const auto cm = stats::sample_moments(cv);
    BiasPerBandwidth row;
    row.h = cfg.hs[k];
    row.mean_bias_ideal = im.mean - out.f_t;
    row.se_ideal = std::sqrt(im.variance / static_cast<double>(M));
    const double predicted = out.bias_const * std::pow(row.h, 4);
    row.ratio_ideal = predicted != 0.0 ? row.mean_bias_ideal / predicted : 0.0;
    row.mean_bias_classical = cm.mean - out.f_t;
    row.se_classical = std::sqrt(cm.variance / static_cast<double>(M));
    out.per_h.push_back(row);
    if (std::abs(row.mean_bias_ideal) > 2.0 * row.se_ideal)
      ideal_seen = true;
    if (std::abs(row.mean_bias_classical) > 2.0 * row.se_classical)
      classical_seen = true;
    log_h.push_back(std::log(row.h));
    log_bias_ideal.push_back(std::log(std::abs(row.mean_bias_ideal)));
    log_bias_classical.push_back(std::log(std::abs(row.mean_bias_classical)));
  }
  out.inconclusive_ideal = !ideal_seen;
  out.inconclusive_classical = !classical_seen;
  out.slope_ideal = stats::ols_slope(log_h, log_bias_ideal);
  out.slope_classical = stats::ols_slope(log_h, log_bias_classical);
  return out;
}

// ===========================================================================
// variance-constant experiment
// ===========================================================================

//! Scaled Monte Carlo variance n h Var(f_hat(t)) against the predicted
//! constants: a0 for the oracle estimator, sigma_t^2 for the two-stage one.
struct VarianceConfig {
  std::string model = "normal";
  std::string kernel = "tricube";
  std::string estimator = "ideal"; //!< "ideal" or "plugin"
  double c = 0.3;
  double t = 0.0;
  std::size_t n = 50000;
  double h = 0.0;  //!< 0 = n^{-1/9}
  double h1 = 0.0; //!< pilot bandwidth for "plugin"; 0 = n^{-1/5}
  std::size_t replicates = 1000;
  std::uint64_t seed = 1u;
  unsigned threads = 0;
};

inline void from_json(const ordered_json& j, VarianceConfig& c)
{
  detail::check_keys(j, "variance",
                     {"model", "kernel", "estimator", "c", "t", "n", "h",
                      "h1", "replicates", "seed", "threads"});
  detail::set_if(j, "model", c.model);
  detail::set_if(j, "kernel", c.kernel);
  detail::set_if(j, "estimator", c.estimator);
  detail::set_if(j, "c", c.c);
  detail::set_if(j, "t", c.t);
  detail::set_if(j, "n", c.n);
  detail::set_if(j, "h", c.h);
  detail::set_if(j, "h1", c.h1);
  detail::set_if(j, "replicates", c.replicates);
  detail::set_if(j, "seed", c.seed);
  detail::set_if(j, "threads", c.threads);
}

inline ordered_json to_json(const VarianceConfig& c)
{
  return ordered_json{{"experiment", "variance"},
                      {"model", c.model},
                      {"kernel", c.kernel},
                      {"estimator", c.estimator},
                      {"c", c.c},
                      {"t", c.t},
                      {"n", c.n},
                      {"h", c.h},
                      {"h1", c.h1},
                      {"replicates", c.replicates},
                      {"seed", c.seed},
                      {"threads", c.threads}};
}

struct VarianceResult {
  VarianceConfig config;
  double h = 0.0;
  double h1 = 0.0;
  double f_t = 0.0;
  double a0 = 0.0;
  double sigma2 = 0.0;
  double var_emp = 0.0;
  double scaled_var = 0.0; //!< n h Var_emp
  double ratio_a0 = 0.0;
  double ratio_sigma2 = 0.0;
  std::vector<std::vector<double>> records; //!< replicate, estimate

  ordered_json summary() const
  {
    return ordered_json{{"experiment", "variance"},
                        {"estimator", config.estimator},
                        {"h", h},
                        {"h1", h1},
                        {"f_t", f_t},
                        {"a0", a0},
                        {"sigma2", sigma2},
                        {"var_emp", var_emp},
                        {"scaled_var", scaled_var},
                        {"ratio_a0", ratio_a0},
                        {"ratio_sigma2", ratio_sigma2}};
  }

  void write(const std::filesystem::path& dir, bool = false) const
  {
    std::filesystem::create_directories(dir);
    io::write_csv(dir / "records.csv", {"replicate", "estimate"}, records);
    io::write_json(dir / "summary.json", summary());
    io::write_json(dir / "manifest.json", to_json(config));
  }
};

inline VarianceResult run_variance_experiment(const VarianceConfig& cfg)
{
  detail::require(cfg.replicates >= 2, "variance experiment: replicates >= 2");
  detail::require(cfg.estimator == "ideal" || cfg.estimator == "plugin",
                  "variance experiment: estimator must be ideal or plugin");
  const DensityModel model = DensityModel::from_name(cfg.model);
  const Kernel kernel = Kernel::from_name(cfg.kernel);
  const ClippingSpec clip(cfg.c);
  const KernelMoments moments = compute_moments(kernel);
  const BandwidthPair rates = default_rates(cfg.n);

  VarianceResult out;
  out.config = cfg;
  out.h = cfg.h > 0.0 ? cfg.h : rates.h2;
  out.h1 = cfg.h1 > 0.0 ? cfg.h1 : rates.h1;
  out.config.h = out.h;
  out.config.h1 = out.h1;
  out.f_t = model.pdf(cfg.t);
  out.a0 = ideal_variance_coeffs(model, moments, clip, cfg.t).a0;
  out.sigma2 = sigma_t_squared(out.f_t, moments, clip);

  const std::size_t M = cfg.replicates;
  std::vector<double> values(M);
  const bool plugin = cfg.estimator == "plugin";
  parallel_for(M, resolve_threads(cfg.threads), [&](std::size_t m) {
    const Sample sample = Sample::from_model(
        model, rng::replicate_seed(cfg.seed, m), cfg.n);
    if (plugin) {
      PluginVkde::Options opt;
      opt.c = cfg.c;
      const PluginVkde est(sample, kernel, out.h1, opt);
      values[m] = est.eval(cfg.t, out.h);
    } else {
      values[m] = make_ideal(sample, kernel, clip, model).eval1(cfg.t, out.h);
    }
  });

  out.records.reserve(M);
  for (std::size_t m = 0; m < M; ++m)
    out.records.push_back({static_cast<double>(m), values[m]});
  out.var_emp = stats::sample_moments(values).variance;
  out.scaled_var = static_cast<double>(cfg.n) * out.h * out.var_emp;
  out.ratio_a0 = out.scaled_var / out.a0;
  out.ratio_sigma2 = out.scaled_var / out.sigma2;
  return out;
}

// ===========================================================================
// central-limit experiment
// ===========================================================================

//! Standardized two-stage estimates at a point: Kolmogorov-Smirnov distance
//! to the standard normal, moment diagnostics, confidence-interval
//! coverage, and the mean shift under truth-centering.
struct CltConfig {
  std::string model = "t4";
  std::string kernel = "tricube";
  double c = 0.3;
  double t = 0.0;
  std::size_t n = 5000;
  double h1 = 0.0; //!< 0 = n^{-1/5}
  double h2 = 0.0; //!< 0 = n^{-1/9}
  std::size_t replicates = 1000;
  std::uint64_t seed = 1u;
  unsigned threads = 0;
};

inline void from_json(const ordered_json& j, CltConfig& c)
{
  detail::check_keys(j, "clt",
                     {"model", "kernel", "c", "t", "n", "h1", "h2",
                      "replicates", "seed", "threads"});
  detail::set_if(j, "model", c.model);
  detail::set_if(j, "kernel", c.kernel);
  detail::set_if(j, "c", c.c);
  detail::set_if(j, "t", c.t);
  detail::set_if(j, "n", c.n);
  detail::set_if(j, "h1", c.h1);
  detail::set_if(j, "h2", c.h2);
  detail::set_if(j, "replicates", c.replicates);
  detail::set_if(j, "seed", c.seed);
  detail::set_if(j, "threads", c.threads);
}

inline ordered_json to_json(const CltConfig& c)
{
  return ordered_json{{"experiment", "clt"},
                      {"model", c.model},
                      {"kernel", c.kernel},
                      {"c", c.c},
                      {"t", c.t},
                      {"n", c.n},
                      {"h1", c.h1},
                      {"h2", c.h2},
                      {"replicates", c.replicates},
                      {"seed", c.seed},
                      {"threads", c.threads}};
}

struct CltResult {
  CltConfig config;
  double h1 = 0.0, h2 = 0.0;
  double f_t = 0.0;
  double sigma2 = 0.0;
  double bias_const = 0.0;
  double ks = 0.0;
  double ks_threshold = 0.0; //!< 1.63 / sqrt(replicates)
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double coverage90 = 0.0, coverage95 = 0.0, coverage99 = 0.0;
  double z_truth_mean = 0.0;      //!< mean of sqrt(n h2)(f_hat - f)/sigma
  double predicted_mean = 0.0;    //!< c2^{(d+8)/2} B(t) / sigma
  double z_truth_mean_se = 0.0;
  std::vector<std::vector<double>> records; //!< replicate, estimate, z

  ordered_json summary() const
  {
    return ordered_json{{"experiment", "clt"},
                        {"h1", h1},
                        {"h2", h2},
                        {"f_t", f_t},
                        {"sigma2", sigma2},
                        {"bias_constant", bias_const},
                        {"ks", ks},
                        {"ks_threshold", ks_threshold},
                        {"skewness", skewness},
                        {"excess_kurtosis", excess_kurtosis},
                        {"coverage90", coverage90},
                        {"coverage95", coverage95},
                        {"coverage99", coverage99},
                        {"z_truth_mean", z_truth_mean},
                        {"predicted_mean", predicted_mean},
                        {"z_truth_mean_se", z_truth_mean_se}};
  }

  void write(const std::filesystem::path& dir, bool svg = false) const
  {
    std::filesystem::create_directories(dir);
    io::write_csv(dir / "records.csv", {"replicate", "estimate", "z"},
                  records);
    io::write_json(dir / "summary.json", summary());
    io::write_json(dir / "manifest.json", to_json(config));
    // QQ plot data: empirical quantiles of Z against standard normal ones
    std::vector<double> z(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
      z[i] = records[i][2];
    std::sort(z.begin(), z.end());
    std::vector<double> theo(z.size());
    std::vector<std::vector<double>> rows(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      theo[i] = stats::normal_quantile(
          (static_cast<double>(i) + 0.5) / static_cast<double>(z.size()));
      rows[i] = {theo[i], z[i]};
    }
    io::write_csv(dir / "plot_qq.csv", {"normal_quantile", "z_quantile"},
                  rows);
    if (svg)
      io::write_svg_lines(dir / "plot_qq.svg", theo,
                          {{"empirical", z}, {"identity", theo}},
                          "standardized estimates: normal QQ", "N(0,1) quantile",
                          "Z quantile");
  }
};

inline CltResult run_clt_experiment(const CltConfig& cfg)
{
  detail::require(cfg.replicates >= 8, "clt experiment: replicates >= 8");
  const DensityModel model = DensityModel::from_name(cfg.model);
  const Kernel kernel = Kernel::from_name(cfg.kernel);
  const ClippingSpec clip(cfg.c);
  const KernelMoments moments = compute_moments(kernel);
  const BandwidthPair rates = default_rates(cfg.n);

  CltResult out;
  out.config = cfg;
  out.h1 = cfg.h1 > 0.0 ? cfg.h1 : rates.h1;
  out.h2 = cfg.h2 > 0.0 ? cfg.h2 : rates.h2;
  out.config.h1 = out.h1;
  out.config.h2 = out.h2;
  out.f_t = model.pdf(cfg.t);
  if (!(out.f_t > clip.t0() * cfg.c * cfg.c))
    throw std::domain_error(
        "clt experiment: t lies outside the exact square-root region "
        "(f(t) <= t0 c^2)");
  out.sigma2 = sigma_t_squared(out.f_t, moments, clip);
  if (!(out.sigma2 > 0.0))
    throw std::domain_error("clt experiment: sigma_t^2 is not positive");
  out.bias_const = bias_constant(model, moments, cfg.t);

  const std::size_t M = cfg.replicates;
  std::vector<double> values(M);
  parallel_for(M, resolve_threads(cfg.threads), [&](std::size_t m) {
    const Sample sample = Sample::from_model(
        model, rng::replicate_seed(cfg.seed, m), cfg.n);
    PluginVkde::Options opt;
    opt.c = cfg.c;
    const PluginVkde est(sample, kernel, out.h1, opt);
    values[m] = est.eval(cfg.t, out.h2);
  });

  const double root_nh = std::sqrt(static_cast<double>(cfg.n) * out.h2);
  const double sigma = std::sqrt(out.sigma2);
  const auto vm = stats::sample_moments(values);
  std::vector<double> z(M), z_truth(M);
  for (std::size_t m = 0; m < M; ++m) {
    z[m] = root_nh * (values[m] - vm.mean) / sigma;
    z_truth[m] = root_nh * (values[m] - out.f_t) / sigma;
  }
  out.records.reserve(M);
  for (std::size_t m = 0; m < M; ++m)
    out.records.push_back({static_cast<double>(m), values[m], z[m]});

  out.ks = stats::ks_statistic(z, [](double v) { return stats::normal_cdf(v); });
  out.ks_threshold = 1.63 / std::sqrt(static_cast<double>(M));
  const auto zm = stats::sample_moments(z);
  out.skewness = zm.skewness;
  out.excess_kurtosis = zm.excess_kurtosis;

  const double dM = static_cast<double>(M);
  for (double level : {0.90, 0.95, 0.99}) {
    std::size_t hits = 0;
    for (double v : values) {
      const Interval ci =
          confidence_interval(v, cfg.n, out.h2, 1, out.sigma2, level);
      if (ci.lo <= out.f_t && out.f_t <= ci.hi)
        ++hits;
    }
    const double cov = static_cast<double>(hits) / dM;
    if (level == 0.90)
      out.coverage90 = cov;
    else if (level == 0.95)
      out.coverage95 = cov;
    else
      out.coverage99 = cov;
  }

  const auto ztm = stats::sample_moments(z_truth);
  out.z_truth_mean = ztm.mean;
  out.z_truth_mean_se = std::sqrt(ztm.variance / dM);
  // h2 = c2 n^{-1/(8+d)}  =>  sqrt(n h2) h2^4 = c2^{(8+d)/2}
  const double c2 = out.h2 * std::pow(static_cast<double>(cfg.n), 1.0 / 9.0);
  out.predicted_mean = std::pow(c2, 4.5) * out.bias_const / sigma;
  return out;
}

// ===========================================================================
// mode/tail comparison experiment
// ===========================================================================

//! Classical KDE (rule-of-thumb bandwidth) against the two-stage estimator,
//! replicate by replicate, with integrated squared error measured
//! separately over a central region and a tail region of each model.
struct TailConfig {
  std::vector<std::string> models = {"t4", "cauchy", "pareto"};
  std::string kernel = "tricube";
  double c = 0.0;          //!< 0 = data-driven per replicate
  double baseline_h = 0.0; //!< 0 = Silverman rule per replicate
  std::size_t n = 10000;
  std::size_t replicates = 200;
  double mode_lo = 0.05, mode_hi = 0.95; //!< central region quantiles
  double tail_lo = 0.95, tail_hi = 0.999; //!< tail region quantiles
  std::size_t mode_points = 512;
  std::size_t tail_points = 256;
  std::uint64_t seed = 1u;
  unsigned threads = 0;
};

inline void from_json(const ordered_json& j, TailConfig& c)
{
  detail::check_keys(j, "tails",
                     {"models", "kernel", "c", "baseline_h", "n",
                      "replicates", "mode_lo", "mode_hi", "tail_lo",
                      "tail_hi", "mode_points", "tail_points", "seed",
                      "threads"});
  detail::set_if(j, "models", c.models);
  detail::set_if(j, "kernel", c.kernel);
  detail::set_if(j, "c", c.c);
  detail::set_if(j, "baseline_h", c.baseline_h);
  detail::set_if(j, "n", c.n);
  detail::set_if(j, "replicates", c.replicates);
  detail::set_if(j, "mode_lo", c.mode_lo);
  detail::set_if(j, "mode_hi", c.mode_hi);
  detail::set_if(j, "tail_lo", c.tail_lo);
  detail::set_if(j, "tail_hi", c.tail_hi);
  detail::set_if(j, "mode_points", c.mode_points);
  detail::set_if(j, "tail_points", c.tail_points);
  detail::set_if(j, "seed", c.seed);
  detail::set_if(j, "threads", c.threads);
}

inline ordered_json to_json(const TailConfig& c)
{
  return ordered_json{{"experiment", "tails"},
                      {"models", c.models},
                      {"kernel", c.kernel},
                      {"c", c.c},
                      {"baseline_h", c.baseline_h},
                      {"n", c.n},
                      {"replicates", c.replicates},
                      {"mode_lo", c.mode_lo},
                      {"mode_hi", c.mode_hi},
                      {"tail_lo", c.tail_lo},
                      {"tail_hi", c.tail_hi},
                      {"mode_points", c.mode_points},
                      {"tail_points", c.tail_points},
                      {"seed", c.seed},
                      {"threads", c.threads}};
}

struct TailModelSummary {
  std::string model;
  double mean_ise_mode_kde = 0.0, mean_ise_mode_vkde = 0.0;
  double mean_ise_tail_kde = 0.0, mean_ise_tail_vkde = 0.0;
  double win_fraction_mode = 0.0; //!< fraction of replicates vkde < kde
  double win_fraction_tail = 0.0;
  std::vector<double> mode_grid, tail_grid;
  std::vector<double> mode_truth, tail_truth;
  std::vector<double> mode_kde, tail_kde;   //!< replicate means
  std::vector<double> mode_vkde, tail_vkde; //!< replicate means
};

struct TailResult {
  TailConfig config;
  //! rows: model index, replicate, region (0 mode / 1 tail), ise_kde,
  //! ise_vkde, baseline h, clipping c
  std::vector<std::vector<double>> records;
  std::vector<TailModelSummary> per_model;

  ordered_json summary() const
  {
    ordered_json models = ordered_json::array();
    for (const auto& s : per_model)
      models.push_back(ordered_json{
          {"model", s.model},
          {"mean_ise_mode_kde", s.mean_ise_mode_kde},
          {"mean_ise_mode_vkde", s.mean_ise_mode_vkde},
          {"mean_ise_tail_kde", s.mean_ise_tail_kde},
          {"mean_ise_tail_vkde", s.mean_ise_tail_vkde},
          {"win_fraction_mode", s.win_fraction_mode},
          {"win_fraction_tail", s.win_fraction_tail}});
    return ordered_json{{"experiment", "tails"}, {"models", models}};
  }

  void write(const std::filesystem::path& dir, bool svg = false) const
  {
    std::filesystem::create_directories(dir);
    io::write_csv(dir / "records.csv",
                  {"model", "replicate", "region", "ise_kde", "ise_vkde",
                   "baseline_h", "c"},
                  records);
    io::write_json(dir / "summary.json", summary());
    io::write_json(dir / "manifest.json", to_json(config));
    for (const auto& s : per_model) {
      for (const char* region : {"mode", "tail"}) {
        const bool mode = std::string(region) == "mode";
        const auto& grid = mode ? s.mode_grid : s.tail_grid;
        const auto& truth = mode ? s.mode_truth : s.tail_truth;
        const auto& kde = mode ? s.mode_kde : s.tail_kde;
        const auto& vkde = mode ? s.mode_vkde : s.tail_vkde;
        std::vector<std::vector<double>> rows(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
          rows[i] = {grid[i], truth[i], kde[i], vkde[i]};
        const std::string stem = "curves_" + s.model + "_" + region;
        io::write_csv(dir / (stem + ".csv"), {"t", "truth", "kde", "vkde"},
                      rows);
        if (svg)
          io::write_svg_lines(dir / (stem + ".svg"), grid,
                              {{"truth", truth}, {"kde", kde}, {"vkde", vkde}},
                              s.model + " (" + region + " region)", "t",
                              "density");
      }
    }
  }
};

inline TailResult run_tail_experiment(const TailConfig& cfg)
{
  detail::require(!cfg.models.empty(), "tail experiment: no models");
  detail::require(cfg.replicates >= 1, "tail experiment: replicates >= 1");
  detail::require(cfg.mode_points >= 2 && cfg.tail_points >= 2,
                  "tail experiment: need at least two grid points");
  const Kernel kernel = Kernel::from_name(cfg.kernel);
  const BandwidthPair rates = default_rates(cfg.n);

  TailResult out;
  out.config = cfg;
  const std::size_t M = cfg.replicates;

  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const DensityModel model = DensityModel::from_name(cfg.models[mi]);
    TailModelSummary s;
    s.model = model.name();
    s.mode_grid = detail::linspace(model.quantile(cfg.mode_lo),
                                   model.quantile(cfg.mode_hi),
                                   cfg.mode_points);
    s.tail_grid = detail::linspace(model.quantile(cfg.tail_lo),
                                   model.quantile(cfg.tail_hi),
                                   cfg.tail_points);
    s.mode_truth.resize(s.mode_grid.size());
    for (std::size_t i = 0; i < s.mode_grid.size(); ++i)
      s.mode_truth[i] = model.pdf(s.mode_grid[i]);
    s.tail_truth.resize(s.tail_grid.size());
    for (std::size_t i = 0; i < s.tail_grid.size(); ++i)
      s.tail_truth[i] = model.pdf(s.tail_grid[i]);

    struct Rep {
      double ise_mode_kde, ise_mode_vkde, ise_tail_kde, ise_tail_vkde;
      double h_base, c_used;
      std::vector<double> mode_kde, mode_vkde, tail_kde, tail_vkde;
    };
    std::vector<Rep> reps(M);
    parallel_for(M, resolve_threads(cfg.threads), [&](std::size_t m) {
      const Sample sample = Sample::from_model(
          model, rng::replicate_seed(cfg.seed, mi * M + m), cfg.n);
      Rep& rep = reps[m];
      rep.h_base = cfg.baseline_h > 0.0 ? cfg.baseline_h
                                        : silverman_bandwidth(sample, kernel);
      const KdeEvaluator classical = make_classical(sample, kernel);
      PluginVkde::Options opt;
      if (cfg.c > 0.0)
        opt.c = cfg.c;
      const PluginVkde plugin(sample, kernel, rates.h1, opt);
      rep.c_used = plugin.c();
      rep.mode_kde = classical.eval_grid(s.mode_grid, rep.h_base);
      rep.tail_kde = classical.eval_grid(s.tail_grid, rep.h_base);
      rep.mode_vkde = plugin.eval_grid(s.mode_grid, rates.h2);
      rep.tail_vkde = plugin.eval_grid(s.tail_grid, rates.h2);
      rep.ise_mode_kde = detail::ise_trapezoid(s.mode_grid, rep.mode_kde,
                                               s.mode_truth);
      rep.ise_mode_vkde = detail::ise_trapezoid(s.mode_grid, rep.mode_vkde,
                                                s.mode_truth);
      rep.ise_tail_kde = detail::ise_trapezoid(s.tail_grid, rep.tail_kde,
                                               s.tail_truth);
      rep.ise_tail_vkde = detail::ise_trapezoid(s.tail_grid, rep.tail_vkde,
                                                s.tail_truth);
    });

    s.mode_kde.assign(s.mode_grid.size(), 0.0);
    s.mode_vkde.assign(s.mode_grid.size(), 0.0);
    s.tail_kde.assign(s.tail_grid.size(), 0.0);
    s.tail_vkde.assign(s.tail_grid.size(), 0.0);
    std::size_t wins_mode = 0, wins_tail = 0;
    for (std::size_t m = 0; m < M; ++m) {
      const Rep& rep = reps[m];
      out.records.push_back({static_cast<double>(mi), static_cast<double>(m),
                             0.0, rep.ise_mode_kde, rep.ise_mode_vkde,
                             rep.h_base, rep.c_used});
      out.records.push_back({static_cast<double>(mi), static_cast<double>(m),
                             1.0, rep.ise_tail_kde, rep.ise_tail_vkde,
                             rep.h_base, rep.c_used});
      s.mean_ise_mode_kde += rep.ise_mode_kde;
      s.mean_ise_mode_vkde += rep.ise_mode_vkde;
      s.mean_ise_tail_kde += rep.ise_tail_kde;
      s.mean_ise_tail_vkde += rep.ise_tail_vkde;
      wins_mode += rep.ise_mode_vkde < rep.ise_mode_kde;
      wins_tail += rep.ise_tail_vkde < rep.ise_tail_kde;
      for (std::size_t i = 0; i < s.mode_grid.size(); ++i) {
        s.mode_kde[i] += rep.mode_kde[i];
        s.mode_vkde[i] += rep.mode_vkde[i];
      }
      for (std::size_t i = 0; i < s.tail_grid.size(); ++i) {
        s.tail_kde[i] += rep.tail_kde[i];
        s.tail_vkde[i] += rep.tail_vkde[i];
      }
    }
    const double dM = static_cast<double>(M);
    s.mean_ise_mode_kde /= dM;
    s.mean_ise_mode_vkde /= dM;
    s.mean_ise_tail_kde /= dM;
    s.mean_ise_tail_vkde /= dM;
    s.win_fraction_mode = static_cast<double>(wins_mode) / dM;
    s.win_fraction_tail = static_cast<double>(wins_tail) / dM;
    for (auto* curve : {&s.mode_kde, &s.mode_vkde})
      for (double& v : *curve)
        v /= dM;
    for (auto* curve : {&s.tail_kde, &s.tail_vkde})
      for (double& v : *curve)
        v /= dM;
    out.per_model.push_back(std::move(s));
  }
  return out;
}

// ===========================================================================
// bandwidth-sweep experiment
// ===========================================================================

//! Empirical IMSE of the two-stage estimator over the evaluation region on
//! a bandwidth grid, against the asymptotic IMSE and its minimizers.
struct SweepConfig {
  std::string model = "normal";
  std::string kernel = "tricube";
  double c = 0.3;
  double r = 0.2;
  std::size_t n = 5000;
  double h1 = 0.0; //!< 0 = n^{-1/5}
  std::vector<double> hs; //!< empty = 12 log-spaced points around h_exact
  std::size_t grid_points = 257;
  std::size_t replicates = 200;
  std::uint64_t seed = 1u;
  unsigned threads = 0;
};

inline void from_json(const ordered_json& j, SweepConfig& c)
{
  detail::check_keys(j, "sweep",
                     {"model", "kernel", "c", "r", "n", "h1", "hs",
                      "grid_points", "replicates", "seed", "threads"});
  detail::set_if(j, "model", c.model);
  detail::set_if(j, "kernel", c.kernel);
  detail::set_if(j, "c", c.c);
  detail::set_if(j, "r", c.r);
  detail::set_if(j, "n", c.n);
  detail::set_if(j, "h1", c.h1);
  detail::set_if(j, "hs", c.hs);
  detail::set_if(j, "grid_points", c.grid_points);
  detail::set_if(j, "replicates", c.replicates);
  detail::set_if(j, "seed", c.seed);
  detail::set_if(j, "threads", c.threads);
}

inline ordered_json to_json(const SweepConfig& c)
{
  return ordered_json{{"experiment", "sweep"},
                      {"model", c.model},
                      {"kernel", c.kernel},
                      {"c", c.c},
                      {"r", c.r},
                      {"n", c.n},
                      {"h1", c.h1},
                      {"hs", c.hs},
                      {"grid_points", c.grid_points},
                      {"replicates", c.replicates},
                      {"seed", c.seed},
                      {"threads", c.threads}};
}

struct SweepResult {
  SweepConfig config;
  double h1 = 0.0;
  std::vector<double> hs;
  std::vector<double> imse_emp;  //!< mean ISE per bandwidth
  std::vector<double> imse_se;
  std::vector<double> imse_asym; //!< asymptotic IMSE per bandwidth
  double h_empirical = 0.0; //!< grid argmin of the empirical IMSE
  double h_exact = 0.0;
  double h_simple = 0.0;
  bool interior_minimum = false;
  std::vector<std::vector<double>> records; //!< replicate, h, ise

  ordered_json summary() const
  {
    ordered_json per = ordered_json::array();
    for (std::size_t k = 0; k < hs.size(); ++k)
      per.push_back(ordered_json{{"h", hs[k]},
                                 {"imse_emp", imse_emp[k]},
                                 {"se", imse_se[k]},
                                 {"imse_asymptotic", imse_asym[k]}});
    return ordered_json{{"experiment", "sweep"},
                        {"h1", h1},
                        {"h_empirical", h_empirical},
                        {"h_exact", h_exact},
                        {"h_simple", h_simple},
                        {"interior_minimum", interior_minimum},
                        {"per_bandwidth", per}};
  }

  void write(const std::filesystem::path& dir, bool svg = false) const
  {
    std::filesystem::create_directories(dir);
    io::write_csv(dir / "records.csv", {"replicate", "h", "ise"}, records);
    io::write_json(dir / "summary.json", summary());
    io::write_json(dir / "manifest.json", to_json(config));
    std::vector<std::vector<double>> rows(hs.size());
    for (std::size_t k = 0; k < hs.size(); ++k)
      rows[k] = {hs[k], imse_emp[k], imse_se[k], imse_asym[k]};
    io::write_csv(dir / "plot_imse.csv",
                  {"h", "imse_emp", "se", "imse_asymptotic"}, rows);
    if (svg)
      io::write_svg_lines(dir / "plot_imse.svg", hs,
                          {{"empirical", imse_emp}, {"asymptotic", imse_asym}},
                          "IMSE over the evaluation region vs h", "h", "IMSE");
  }
};

inline SweepResult run_sweep_experiment(const SweepConfig& cfg)
{
  detail::require(cfg.replicates >= 2, "sweep experiment: replicates >= 2");
  detail::require(cfg.grid_points >= 3, "sweep experiment: grid too small");
  const DensityModel model = DensityModel::from_name(cfg.model);
  const Kernel kernel = Kernel::from_name(cfg.kernel);
  const ClippingSpec clip(cfg.c);
  const KernelMoments moments = compute_moments(kernel);
  const EvaluationRegion region(model, clip, cfg.r);
  const RegionIntegrals ri = region_integrals(model, moments, clip, region);
  const BandwidthSolution opt = optimal_bandwidth(ri, cfg.n);

  SweepResult out;
  out.config = cfg;
  out.h1 = cfg.h1 > 0.0 ? cfg.h1 : default_rates(cfg.n).h1;
  out.h_exact = opt.h_exact;
  out.h_simple = opt.h_simple;
  out.hs = cfg.hs;
  if (out.hs.empty()) {
    const double lo = opt.h_exact / 3.0, hi = opt.h_exact * 3.0;
    for (std::size_t k = 0; k < 12; ++k)
      out.hs.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / 11.0));
  }
  for (double h : out.hs)
    detail::require(h > 0.0, "sweep experiment: bandwidths must be positive");
  out.config.h1 = out.h1;
  out.config.hs = out.hs;

  const std::vector<double> grid =
      detail::linspace(ri.lo, ri.hi, cfg.grid_points);
  std::vector<double> truth(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    truth[i] = model.pdf(grid[i]);

  const std::size_t H = out.hs.size();
  const std::size_t M = cfg.replicates;
  std::vector<double> ise(M * H);
  parallel_for(M, resolve_threads(cfg.threads), [&](std::size_t m) {
    const Sample sample = Sample::from_model(
        model, rng::replicate_seed(cfg.seed, m), cfg.n);
    PluginVkde::Options popt;
    popt.c = cfg.c;
    const PluginVkde plugin(sample, kernel, out.h1, popt);
    for (std::size_t k = 0; k < H; ++k) {
      const auto est = plugin.eval_grid(grid, out.hs[k]);
      ise[m * H + k] = detail::ise_trapezoid(grid, est, truth);
    }
  });

  out.records.reserve(M * H);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < H; ++k)
      out.records.push_back(
          {static_cast<double>(m), out.hs[k], ise[m * H + k]});

  std::size_t best = 0;
  for (std::size_t k = 0; k < H; ++k) {
    std::vector<double> col(M);
    for (std::size_t m = 0; m < M; ++m)
      col[m] = ise[m * H + k];
    const auto mo = stats::sample_moments(col);
    out.imse_emp.push_back(mo.mean);
    out.imse_se.push_back(std::sqrt(mo.variance / static_cast<double>(M)));
    out.imse_asym.push_back(imse(ri, cfg.n, out.hs[k]));
    if (out.imse_emp[k] < out.imse_emp[best])
      best = k;
  }
  out.h_empirical = out.hs[best];
  out.interior_minimum = best > 0 && best + 1 < H;
  return out;
}

} // namespace simlab
} // namespace vkde

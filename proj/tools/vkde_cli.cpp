//! Command-line front end: estimation on data or models, the Monte Carlo
//! experiments, bandwidth selection, pilot-rate diagnostics, and kernel
//! moment tables.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <vkde/vkde.hpp>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

//! "auto" (or empty) -> empty optional; otherwise a finite double.
std::optional<double> parse_auto(const std::string& s, const char* flag)
{
  if (s.empty() || s == "auto")
    return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v))
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError(std::string(flag) +
                               ": expected a number or 'auto', got '" + s +
                               "'");
  }
}

ordered_json load_config(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw vkde::io::FileError("cannot open config file: " + path.string());
  try {
    return ordered_json::parse(in, nullptr, true, true); // allow comments
  } catch (const nlohmann::json::exception& e) {
    throw vkde::io::ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string data;
  std::string model;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string estimator = "plugin";
  std::string kernel = "tricube";
  std::string h1 = "auto";
  std::string h2 = "auto";
  std::string c = "auto";
  double clip_quantile = 0.05;
  double cut_radius = 1.0;
  std::string grid = "auto";
  std::size_t grid_points = 512;
  std::string out = "out";
  bool svg = false;
};

std::vector<double> resolve_grid(const std::string& spec, std::size_t points,
                                 const vkde::Sample& sample, double reach)
{
  if (points < 2)
    throw CLI::ValidationError("--grid-points: need at least 2");
  if (spec == "auto")
    return vkde::default_grid(sample, reach, points);
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--grid: expected 'auto' or 'lo:hi'");
  const double lo = *parse_auto(spec.substr(0, colon), "--grid");
  const double hi = *parse_auto(spec.substr(colon + 1), "--grid");
  if (!(lo < hi))
    throw CLI::ValidationError("--grid: need lo < hi");
  std::vector<double> grid(points);
  for (std::size_t j = 0; j < points; ++j)
    grid[j] = lo + (hi - lo) * static_cast<double>(j) /
                       static_cast<double>(points - 1);
  return grid;
}

int run_estimate(const EstimateArgs& a)
{
  using namespace vkde;
  if (a.data.empty() && a.model.empty())
    throw CLI::RequiredError("estimate: one of --data or --model");
  const bool oracle_needed = a.estimator == "ideal" ||
                             a.estimator == "hall-marron" ||
                             a.estimator == "abramson" || a.estimator == "hhm";
  if (oracle_needed && a.model.empty())
    throw CLI::RequiredError("estimate: --model (oracle estimator '" +
                             a.estimator + "')");

  std::optional<DensityModel> model;
  if (!a.model.empty())
    model = DensityModel::from_name(a.model);
  const Sample sample = !a.data.empty()
                            ? io::load_sample(a.data)
                            : Sample::from_model(*model, a.seed, a.n);
  const Kernel kernel = Kernel::from_name(a.kernel, sample.dim());
  const BandwidthPair rates = default_rates(sample.size());

  const std::optional<double> h1_opt = parse_auto(a.h1, "--h1");
  const std::optional<double> h2_opt = parse_auto(a.h2, "--h2");
  const std::optional<double> c_opt = parse_auto(a.c, "--c");
  const double h1 = h1_opt.value_or(rates.h1);
  double h2 = h2_opt.value_or(rates.h2);
  if (!h2_opt && a.estimator == "classical")
    h2 = silverman_bandwidth(sample, kernel);

  // Build the evaluator core; resolve the clipping constant where one is
  // used (plugin: pilot quantile rule; ideal: the same rule on oracle
  // density values).
  std::optional<double> c_resolved;
  std::optional<KdeEvaluator> ev;
  std::optional<PluginVkde> plugin;
  if (a.estimator == "classical") {
    ev = make_classical(sample, kernel);
  } else if (a.estimator == "ideal") {
    double c;
    if (c_opt) {
      c = *c_opt;
    } else {
      std::vector<double> fx(sample.size());
      for (std::size_t i = 0; i < fx.size(); ++i)
        fx[i] = model->pdf(sample.sorted()[i]);
      c = auto_clipping_constant(fx, 2.0, a.clip_quantile);
    }
    c_resolved = c;
    ev = make_ideal(sample, kernel, ClippingSpec(c), *model);
  } else if (a.estimator == "hall-marron") {
    ev = make_sqrt_law(sample, kernel, *model);
  } else if (a.estimator == "abramson") {
    ev = make_pairwise_max(sample, kernel, *model);
  } else if (a.estimator == "hhm") {
    ev = make_truncated_sqrt(sample, kernel, *model, a.cut_radius);
  } else if (a.estimator == "plugin") {
    PluginVkde::Options opt;
    opt.c = c_opt;
    opt.clip_quantile = a.clip_quantile;
    plugin.emplace(sample, kernel, h1, opt);
    c_resolved = plugin->c();
  } else {
    throw CLI::ValidationError("estimate: unknown estimator '" + a.estimator +
                               "'");
  }

  const KdeEvaluator& core = plugin ? plugin->evaluator() : *ev;
  const double reach = h2 * kernel.support_radius() / core.lambda_floor();
  const std::vector<double> grid =
      resolve_grid(a.grid, a.grid_points, sample, reach);
  const std::vector<double> values = core.eval_grid(grid, h2);

  fs::create_directories(a.out);
  std::vector<std::vector<double>> rows(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    rows[j] = {grid[j], values[j]};
  io::write_csv(fs::path(a.out) / "est.csv", {"t", "fhat"}, rows);

  ordered_json manifest{{"subcommand", "estimate"},
                        {"estimator", a.estimator},
                        {"kernel", a.kernel},
                        {"n", sample.size()},
                        {"dim", sample.dim()},
                        {"h1", h1},
                        {"h2", h2},
                        {"grid_lo", grid.front()},
                        {"grid_hi", grid.back()},
                        {"grid_points", grid.size()},
                        {"out", a.out},
                        {"svg", a.svg}};
  if (!a.data.empty())
    manifest["data"] = a.data;
  else {
    manifest["model"] = a.model;
    manifest["seed"] = a.seed;
  }
  if (c_resolved)
    manifest["c"] = *c_resolved;
  if (a.estimator == "hhm")
    manifest["cut_radius"] = a.cut_radius;
  io::write_json(fs::path(a.out) / "manifest.json", manifest);

  ordered_json summary{{"estimator", a.estimator},
                       {"n", sample.size()},
                       {"h2", h2}};
  if (c_resolved)
    summary["c"] = *c_resolved;
  // Total mass of the estimate (plain cores only: the pairwise-maximum and
  // truncated estimators are t-dependent reweightings without a closed
  // scatter form).
  if (sample.dim() == 1 && a.estimator != "abramson" && a.estimator != "hhm") {
    summary["mass"] = core.mass_trapezoid(h2);
  }
  io::write_json(fs::path(a.out) / "summary.json", summary);

  if (a.svg) {
    std::vector<vkde::io::Series> series;
    series.push_back({"estimate", values});
    if (model && sample.dim() == 1) {
      std::vector<double> truth(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j)
        truth[j] = model->pdf(grid[j]);
      series.push_back({"truth", truth});
    }
    io::write_svg_lines(fs::path(a.out) / "est.svg", grid, series,
                        a.estimator + " density estimate", "t", "density");
  }
  std::printf("estimate: wrote %s (n=%zu, h2=%.6g)\n", a.out.c_str(),
              sample.size(), h2);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string experiment;
  std::string config;
  std::string out = "out";
  bool svg = false;
  bool full_scale = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<unsigned> threads;
};

template <class Config>
Config make_config(const SimulateArgs& a)
{
  Config cfg;
  if (!a.config.empty())
    from_json(load_config(a.config), cfg);
  if (a.seed)
    cfg.seed = *a.seed;
  if (a.replicates)
    cfg.replicates = *a.replicates;
  if (a.threads)
    cfg.threads = *a.threads;
  return cfg;
}

int run_simulate(const SimulateArgs& a)
{
  using namespace vkde::simlab;
  const fs::path out = a.out;
  if (a.experiment == "bias") {
    const auto res = run_bias_experiment(make_config<BiasConfig>(a));
    res.write(out, a.svg);
    std::printf("bias: slope ideal %.3f, slope classical %.3f -> %s\n",
                res.slope_ideal, res.slope_classical, a.out.c_str());
  } else if (a.experiment == "variance") {
    const auto res = run_variance_experiment(make_config<VarianceConfig>(a));
    res.write(out, a.svg);
    std::printf("variance: n h Var = %.6g (a0 ratio %.3f) -> %s\n",
                res.scaled_var, res.ratio_a0, a.out.c_str());
  } else if (a.experiment == "clt") {
    const auto res = run_clt_experiment(make_config<CltConfig>(a));
    res.write(out, a.svg);
    std::printf("clt: KS %.4f (threshold %.4f), coverage95 %.3f -> %s\n",
                res.ks, res.ks_threshold, res.coverage95, a.out.c_str());
  } else if (a.experiment == "tails") {
    TailConfig cfg = make_config<TailConfig>(a);
    if (a.full_scale) {
      cfg.n = 50000;
      cfg.replicates = 1;
    }
    const auto res = run_tail_experiment(cfg);
    res.write(out, a.svg);
    for (const auto& s : res.per_model)
      std::printf("tails[%s]: tail ISE vkde/kde %.3g/%.3g, wins %.0f%%\n",
                  s.model.c_str(), s.mean_ise_tail_vkde, s.mean_ise_tail_kde,
                  100.0 * s.win_fraction_tail);
    std::printf("tails: wrote %s\n", a.out.c_str());
  } else if (a.experiment == "sweep") {
    const auto res = run_sweep_experiment(make_config<SweepConfig>(a));
    res.write(out, a.svg);
    std::printf("sweep: empirical h* %.4g, h_exact %.4g, h_simple %.4g -> %s\n",
                res.h_empirical, res.h_exact, res.h_simple, a.out.c_str());
  } else {
    throw CLI::ValidationError("simulate: unknown experiment '" +
                               a.experiment + "'");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bandwidth
// ---------------------------------------------------------------------------

struct BandwidthArgs {
  std::string model = "normal";
  std::string kernel = "tricube";
  double c = 0.3;
  double r = 0.2;
  std::size_t n = 5000;
  std::string out;
};

int run_bandwidth(const BandwidthArgs& a)
{
  using namespace vkde;
  const DensityModel model = DensityModel::from_name(a.model);
  const Kernel kernel = Kernel::from_name(a.kernel);
  const ClippingSpec clip(a.c);
  const KernelMoments moments = compute_moments(kernel);
  const EvaluationRegion region(model, clip, a.r);
  const RegionIntegrals ri = region_integrals(model, moments, clip, region);
  const BandwidthSolution sol = optimal_bandwidth(ri, a.n);
  ordered_json j{{"subcommand", "bandwidth"},
                 {"model", a.model},
                 {"kernel", a.kernel},
                 {"c", a.c},
                 {"r", a.r},
                 {"n", a.n},
                 {"region_lo", ri.lo},
                 {"region_hi", ri.hi},
                 {"int_B2", ri.int_B2},
                 {"int_sigma2", ri.int_sigma2},
                 {"h_exact", sol.h_exact},
                 {"h_simple", sol.h_simple},
                 {"ratio", sol.h_exact / sol.h_simple}};
  std::printf("%s\n", j.dump(2).c_str());
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    io::write_json(fs::path(a.out) / "bandwidth.json", j);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::vector<std::size_t> ns = {1000, 10000, 100000};
  int d = 1;
  std::string h1 = "auto";
  std::string out;
};

int run_diagnose(const DiagnoseArgs& a)
{
  using namespace vkde;
  const std::optional<double> h1_opt = parse_auto(a.h1, "--h1");
  ordered_json rows = ordered_json::array();
  std::vector<std::vector<double>> csv;
  for (std::size_t n : a.ns) {
    const BandwidthPair rates = default_rates(n);
    const double h1 = h1_opt.value_or(rates.h1);
    const RateDiagnostic diag = rate_diagnostic(h1, rates.h2, n, a.d);
    rows.push_back(ordered_json{{"n", n},
                                {"h1", h1},
                                {"h2", rates.h2},
                                {"u", diag.u},
                                {"u_over_h2sq", diag.ratio},
                                {"separated", diag.separated}});
    csv.push_back({static_cast<double>(n), h1, rates.h2, diag.u, diag.ratio,
                   diag.separated ? 1.0 : 0.0});
  }
  const ordered_json j{{"subcommand", "diagnose"}, {"d", a.d}, {"rows", rows}};
  std::printf("%s\n", j.dump(2).c_str());
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    io::write_json(fs::path(a.out) / "diagnose.json", j);
    io::write_csv(fs::path(a.out) / "diagnose.csv",
                  {"n", "h1", "h2", "u", "u_over_h2sq", "separated"}, csv);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

struct MomentsArgs {
  std::string kernel = "tricube";
  int dim = 1;
  std::string out;
};

int run_moments(const MomentsArgs& a)
{
  using namespace vkde;
  const Kernel kernel = Kernel::from_name(a.kernel, a.dim);
  const KernelMoments m = compute_moments(kernel);
  const MultiIndex zero(static_cast<std::size_t>(kernel.dim()), 0);
  const double int_L = kernel_box_integral(
      kernel, zero, [&](std::span<const double> t) {
        return kernel.second_order(t);
      });
  ordered_json j{{"subcommand", "moments"},
                 {"kernel", kernel.name()},
                 {"dim", kernel.dim()},
                 {"mu0", m.mu0},
                 {"int_L2", m.r_of_L},
                 {"int_L", int_L}};
  if (kernel.dim() == 1) {
    MultiIndex one{1};
    const double int_uL = kernel_box_integral(
        kernel, one, [&](std::span<const double> t) {
          return kernel.second_order(t);
        });
    j["tau2"] = m.tau1(2);
    j["tau4"] = m.tau1(4);
    j["mu2"] = m.mu1(2);
    j["int_uL"] = int_uL;
  } else {
    for (const auto& [v, val] : m.tau) {
      std::string key = "tau_";
      for (int p : v)
        key += std::to_string(p);
      j[key] = val;
    }
    for (const auto& [v, val] : m.mu) {
      std::string key = "mu_";
      for (int p : v)
        key += std::to_string(p);
      j[key] = val;
    }
  }
  std::printf("%s\n", j.dump(2).c_str());
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    io::write_json(fs::path(a.out) / "moments.json", j);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"variable-bandwidth kernel density estimation toolkit"};
  app.require_subcommand(1);

  EstimateArgs est;
  CLI::App* cmd_est =
      app.add_subcommand("estimate", "density estimate on data or a model");
  cmd_est->add_option("--data", est.data, "input CSV (1 or 2 columns)");
  cmd_est->add_option("--model", est.model,
                      "model name (normal|t4|cauchy|pareto|pareto-classical)");
  cmd_est->add_option("--n", est.n, "sample size when generating from a model");
  cmd_est->add_option("--seed", est.seed, "generation seed");
  cmd_est->add_option(
      "--estimator", est.estimator,
      "classical|ideal|hall-marron|abramson|hhm|plugin (default plugin)");
  cmd_est->add_option("--kernel", est.kernel,
                      "tricube|epanechnikov|biweight (default tricube)");
  cmd_est->add_option("--h1", est.h1, "pilot bandwidth or 'auto' (n^-1/5)");
  cmd_est->add_option("--h2", est.h2,
                      "main bandwidth or 'auto' (n^-1/9; Silverman rule for "
                      "the classical estimator)");
  cmd_est->add_option("--c", est.c, "clipping constant or 'auto'");
  cmd_est->add_option("--clip-quantile", est.clip_quantile,
                      "pilot quantile for the data-driven clipping constant");
  cmd_est->add_option("--cut-radius", est.cut_radius,
                      "truncation radius (hhm estimator, units of h)");
  cmd_est->add_option("--grid", est.grid, "'auto' or 'lo:hi'");
  cmd_est->add_option("--grid-points", est.grid_points, "grid size");
  cmd_est->add_option("--out", est.out, "output directory");
  cmd_est->add_flag("--svg", est.svg, "also render an SVG plot");

  SimulateArgs sim;
  CLI::App* cmd_sim =
      app.add_subcommand("simulate", "run a Monte Carlo experiment");
  cmd_sim
      ->add_option("--experiment", sim.experiment,
                   "bias|variance|clt|tails|sweep")
      ->required();
  cmd_sim->add_option("--config", sim.config, "JSON config file");
  cmd_sim->add_option("--out", sim.out, "output directory");
  cmd_sim->add_flag("--svg", sim.svg, "render SVG plots of the plot data");
  cmd_sim->add_flag("--full-scale", sim.full_scale,
                    "tails: n=50000, one replicate (visual output)");
  std::uint64_t sim_seed = 0;
  std::size_t sim_reps = 0;
  unsigned sim_threads = 0;
  CLI::Option* o_seed = cmd_sim->add_option("--seed", sim_seed, "seed override");
  CLI::Option* o_reps =
      cmd_sim->add_option("--replicates", sim_reps, "replicate override");
  CLI::Option* o_thr =
      cmd_sim->add_option("--threads", sim_threads,
                          "worker threads (0 = hardware, capped by "
                          "VKDE_THREADS)");

  BandwidthArgs bw;
  CLI::App* cmd_bw = app.add_subcommand(
      "bandwidth", "asymptotically optimal main bandwidth over a region");
  cmd_bw->add_option("--model", bw.model, "model name");
  cmd_bw->add_option("--kernel", bw.kernel, "kernel name");
  cmd_bw->add_option("--c", bw.c, "clipping constant");
  cmd_bw->add_option("--r", bw.r, "region level r (requires r > t0 c^2)");
  cmd_bw->add_option("--n", bw.n, "sample size");
  cmd_bw->add_option("--out", bw.out, "optional output directory");

  DiagnoseArgs diag;
  CLI::App* cmd_diag = app.add_subcommand(
      "diagnose", "pilot uniform-rate diagnostic U(h1, n) vs h2^2");
  cmd_diag->add_option("--n", diag.ns, "sample sizes");
  cmd_diag->add_option("--d", diag.d, "dimension");
  cmd_diag->add_option("--h1", diag.h1, "pilot bandwidth or 'auto'");
  cmd_diag->add_option("--out", diag.out, "optional output directory");

  MomentsArgs mom;
  CLI::App* cmd_mom =
      app.add_subcommand("moments", "kernel moment functionals");
  cmd_mom->add_option("--kernel", mom.kernel, "kernel name");
  cmd_mom->add_option("--dim", mom.dim, "dimension (1 or 2)");
  cmd_mom->add_option("--out", mom.out, "optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cmd_est)
      return run_estimate(est);
    if (*cmd_sim) {
      if (*o_seed)
        sim.seed = sim_seed;
      if (*o_reps)
        sim.replicates = sim_reps;
      if (*o_thr)
        sim.threads = sim_threads;
      return run_simulate(sim);
    }
    if (*cmd_bw)
      return run_bandwidth(bw);
    if (*cmd_diag)
      return run_diagnose(diag);
    if (*cmd_mom)
      return run_moments(mom);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const vkde::io::FileError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const vkde::io::ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}

#include "mfchaos/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <spdlog/spdlog.h>
#include <sstream>

#include "mfchaos/cumulants.hpp"
#include "mfchaos/meanfield.hpp"
#include "mfchaos/parallel.hpp"

#ifndef MFCHAOS_VERSION
#define MFCHAOS_VERSION "0.0.0"
#endif

namespace mfchaos {

namespace {

constexpr std::uint64_t kReferenceStream = 5;
constexpr std::uint64_t kBootstrapStream = 6;
constexpr std::uint64_t kSelftestStream = 7;

struct Setup {
  explicit Setup(DensityModel d) : density(std::move(d)) {}
  TrigKernel kernel;
  DensityModel density;
  std::unique_ptr<MeanFieldReference> reference;
  SimulationContext ctx;
  std::string density_id;
};

std::size_t largest_n(const RunConfig& cfg) {
  std::size_t n = cfg.plan.n_grid.empty() ? 0 : cfg.plan.n_grid.back();
  return std::max(n, cfg.duality.particles);
}

std::unique_ptr<Setup> make_setup(const RunConfig& cfg, const DensityModel& density, std::string density_id,
                                  std::vector<double> times) {
  auto s = std::make_unique<Setup>(density);
  s->kernel = cfg.kernel.build();
  s->density_id = std::move(density_id);
  const std::size_t floor_m = density.is_steady() ? 0 : 100 * largest_n(cfg);
  s->reference = std::make_unique<MeanFieldReference>(build_reference(cfg.phase, density, s->kernel, cfg.integrator,
                                                                      std::move(times),
                                                                      derive_seed(cfg.plan.master_seed, {kReferenceStream}),
                                                                      floor_m));
  s->ctx = SimulationContext{cfg.phase, s->kernel, cfg.integrator, s->reference.get(), nullptr};
  return s;
}

RateOptions rate_options(const RunConfig& cfg, std::uint64_t tag, int order, std::size_t time_index) {
  RateOptions o;
  o.bootstrap = cfg.fit.bootstrap;
  o.confidence = cfg.fit.confidence;
  o.seed = derive_seed(cfg.plan.master_seed, {kBootstrapStream, tag, static_cast<std::uint64_t>(order), time_index});
  return o;
}

// Groups estimates by (order, time) in plan order and fits each series over N.
std::vector<FitRow> fit_series(const RunConfig& cfg, const std::string& experiment, std::uint64_t tag,
                               const std::vector<MomentEstimate>& est, std::vector<std::string>& warnings) {
  std::vector<FitRow> rows;
  if (cfg.plan.n_grid.size() < 4) {
    warnings.push_back(experiment + ": fewer than 4 N values, no rate fitted");
    return rows;
  }
  std::vector<int> orders;
  for (const auto& e : est)
    if (std::find(orders.begin(), orders.end(), e.order) == orders.end()) orders.push_back(e.order);
  for (int order : orders)
    for (std::size_t k = 0; k < cfg.plan.times.size(); ++k) {
      const double t = cfg.plan.times[k];
      std::vector<MomentEstimate> series;
      for (const auto& e : est)
        if (e.order == order && e.time == t) series.push_back(e);
      std::sort(series.begin(), series.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
      FitRow row{experiment, order, t, fit_rate(series, rate_options(cfg, tag, order, k))};
      for (const auto& w : row.fit.warnings) {
        warnings.push_back(fmt::format("{} order {} t={}: {}", experiment, order, t, w));
        spdlog::warn("{} order {} t={}: {}", experiment, order, t, w);
      }
      rows.push_back(std::move(row));
    }
  return rows;
}

void add_estimates(RunOutcome& out, const std::string& experiment, const std::string& quantity, const RunConfig& cfg,
                   const std::string& density_id, const std::vector<MomentEstimate>& est) {
  for (const auto& e : est) {
    out.results.push_back(result_row(experiment, quantity, cfg.kernel.id, density_id, e));
    if (e.reference_flagged) {
      const auto msg = fmt::format("{} N={} order={} t={}: reference uncertainty exceeds 20% of the estimate",
                                   experiment, e.n, e.order, e.time);
      out.warnings.push_back(msg);
      spdlog::warn("{}", msg);
    }
  }
}

void add_report(RunOutcome& out, const RunConfig& cfg, const std::string& check, std::size_t n, int order, double dt,
                const DualityReport& rep) {
  out.duality.push_back({check, n, order, dt, rep});
  out.results.push_back(result_row("duality", check + "_lhs", cfg.kernel.id, cfg.density.id, rep.lhs));
  out.results.push_back(result_row("duality", check + "_rhs", cfg.kernel.id, cfg.density.id, rep.rhs));
}

std::vector<PlotSeries> plot_series(const std::vector<ResultRow>& rows, const std::vector<FitRow>& fits,
                                    const std::string& prefix) {
  std::vector<PlotSeries> out;
  for (const auto& f : fits) {
    PlotSeries s;
    s.label = fmt::format("{}={} t={}", prefix, f.order, f.time);
    for (const auto& r : rows)
      if (r.order == f.order && r.time == f.time) s.points.push_back({static_cast<double>(r.n), r.estimate, r.std_error});
    s.fit = f.fit;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<MomentEstimate> weak_series(const RunConfig& cfg, RunOutcome& out, Setup*& active,
                                        std::unique_ptr<Setup>& primary, std::unique_ptr<Setup>& fallback,
                                        std::ostream* trajectory) {
  primary->ctx.trajectory = trajectory;
  auto est = weak_error(cfg.plan, primary->ctx);
  auto fits = fit_series(cfg, "weak-error", 1, est, out.warnings);
  const bool all_degenerate =
      !fits.empty() && std::all_of(fits.begin(), fits.end(), [](const FitRow& f) { return f.fit.degenerate; });
  if (all_degenerate && cfg.fallback.enabled && primary->density.is_steady()) {
    const std::size_t m = cfg.fallback.oracle_size > 0 ? cfg.fallback.oracle_size : 100 * largest_n(cfg);
    const auto msg = fmt::format(
        "weak-error signal indistinguishable from zero at every N; falling back to perturbed_oracle (eps={}, mode={}, M={})",
        cfg.fallback.epsilon, cfg.fallback.mode, m);
    spdlog::warn("{}", msg);
    out.warnings.push_back(msg);
    out.fallback_used = true;
    const auto dens = DensityModel::perturbed(cfg.density.velocity_profile(), cfg.fallback.epsilon, cfg.fallback.mode, m);
    fallback = make_setup(cfg, dens, "perturbed_oracle", cfg.plan.times);
    fallback->ctx.trajectory = trajectory;
    est = weak_error(cfg.plan, fallback->ctx);
    fits = fit_series(cfg, "weak-error", 1, est, out.warnings);
    active = fallback.get();
  }
  add_estimates(out, "weak-error", "weak_error", cfg, active->density_id, est);
  out.fits.insert(out.fits.end(), fits.begin(), fits.end());
  return est;
}

CheckRow check_le(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, "<=", value <= threshold};
}
CheckRow check_lt(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, "<", value < threshold};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("MFCHAOS_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

std::vector<CheckRow> selftest_checks(const RunConfig& cfg) {
  std::vector<CheckRow> checks;
  Rng rng(derive_seed(cfg.plan.master_seed, {kSelftestStream}));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  {
    std::vector<double> y(10);
    for (auto& v : y) v = unit(rng);
    double brute = 0.0;
    int count = 0;
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j)
        for (int k = j + 1; k < 10; ++k, ++count) brute += y[i] * y[j] * y[k];
    checks.push_back(check_le("ustat_bruteforce", std::abs(ustat_from_values(y, 3) - brute / count), 1e-12));
  }

  {
    const auto dens = DensityModel::steady(VelocityProfile::gaussian(1.0));
    const PhaseGrid grid = PhaseGrid::from_density(dens, 3, 2);
    DiscreteFunction fn(3, grid.size()), h(3, grid.size());
    std::vector<std::size_t> idx(3);
    double mass = 0.0;
    for (std::size_t flat = 0; flat < fn.size(); ++flat) {
      fn.unflatten(flat, idx);
      double base = 1.0, w = 1.0;
      for (auto i : idx) {
        base *= grid.density()[i];
        w *= grid.weights()[i];
      }
      fn[flat] = base * (1.0 + 0.3 * unit(rng));
      h[flat] = unit(rng);
      mass += w * fn[flat];
    }
    for (auto& v : fn.values()) v /= mass;
    // the expansions assume exchangeable arguments
    const auto symmetrize = [&](DiscreteFunction& phi) {
      DiscreteFunction sym(3, grid.size());
      std::vector<std::size_t> p(3);
      for (std::size_t flat = 0; flat < phi.size(); ++flat) {
        phi.unflatten(flat, p);
        std::sort(p.begin(), p.end());
        double acc = 0.0;
        int count = 0;
        do {
          acc += phi.at(p);
          ++count;
        } while (std::next_permutation(p.begin(), p.end()));
        sym[flat] = acc / count;
      }
      phi = sym;
    };
    symmetrize(fn);
    symmetrize(h);
    const auto kappa = fn_to_kappa_table(fn, grid);
    const auto dual = h_to_dual_table(h, grid);
    double slot = 0.0;
    for (const auto& [n, k] : kappa.entries)
      if (n > 0) slot = std::max(slot, slot_residual(k, grid));
    for (const auto& [n, c] : dual.entries)
      if (n > 0) slot = std::max(slot, slot_residual(c, grid));
    const double err = std::max(max_abs_diff(kappa_reconstruct(kappa, grid).values(), fn.values()),
                                max_abs_diff(dual_reconstruct(dual, grid).values(), h.values()));
    checks.push_back(check_le("cumulant_round_trip", err, 1e-10));
    checks.push_back(check_le("cumulant_slot_cancellation", slot, 1e-8));
  }

  {
    const TrigKernel k = cfg.kernel.build();
    double worst = 0.0;
    for (std::size_t n : {2, 3, 17, 256}) {
      ParticleEnsemble ens;
      for (std::size_t i = 0; i < n; ++i) {
        ens.x.push_back(wrap_torus(kTwoPi * 0.5 * (unit(rng) + 1.0)));
        ens.v.push_back(unit(rng));
      }
      const auto direct = force_direct(ens, k);
      const auto spectral = force_spectral(ens, k);
      double scale = 0.0;
      for (double f : direct) scale = std::max(scale, std::abs(f));
      if (scale > 0.0) worst = std::max(worst, max_abs_diff(direct, spectral) / scale);
    }
    checks.push_back(check_le("force_equivalence", worst, 1e-12));
  }

  {
    const TrigKernel k = cfg.kernel.build();
    const auto dens = DensityModel::steady(VelocityProfile::gaussian(1.0));
    ParticleEnsemble ens = sample_chaotic(64, dens, rng);
    const auto before = diagnostics(ens, k);
    IntegratorSpec spec{IntegratorSpec::Method::rk4, cfg.integrator.dt};
    Propagator(k, spec, 0.0).advance(ens, 0.5);
    const auto after = diagnostics(ens, k);
    checks.push_back(check_le("energy_drift", std::abs(after.energy - before.energy) / std::abs(before.energy), 1e-8));
  }

  {
    PhaseConfig phase = cfg.phase;
    phase.sigma = 0.0;
    const auto dens = DensityModel::steady(VelocityProfile::gaussian(1.0));
    IntegratorSpec spec{IntegratorSpec::Method::rk4, cfg.integrator.dt};
    const TrigKernel zero = TrigKernel::zero();
    const auto ref = build_reference(phase, dens, zero, spec, {phase.horizon}, 0);
    SimulationContext ctx{phase, zero, spec, &ref, nullptr};
    ExperimentPlan plan = cfg.plan;
    plan.n_grid.assign(cfg.plan.n_grid.begin(), cfg.plan.n_grid.begin() + std::min<std::size_t>(2, cfg.plan.n_grid.size()));
    plan.times = {phase.horizon};
    plan.orders = {1, 2};
    plan.variance = ExperimentPlan::Variance::none;
    double worst = 0.0;
    for (const auto& e : weak_error(plan, ctx))
      worst = std::max(worst, e.std_error > 0.0 ? std::abs(e.value) / e.std_error : 0.0);
    checks.push_back(check_lt("null_weak_error_z", worst, 3.0));

    const auto sref = build_reference(phase, dens, cfg.kernel.build(), spec, {phase.horizon}, 0);
    SimulationContext sctx{phase, cfg.kernel.build(), spec, &sref, nullptr};
    ExperimentPlan dplan = cfg.plan;
    dplan.replicas = 20;
    const TerminalObservable term{cfg.plan.psi, 1, 8};
    const auto rep = check_forward_duality(term, dplan, sctx, {IntegratorSpec::Method::rk4, 1e-4});
    checks.push_back(check_le("forward_duality_residual", rep.max_residual, 1e-8));
  }
  return checks;
}

RunOutcome run_experiment(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  out.output_dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(out.output_dir);
  spdlog::info("experiment {} -> {}", cfg.experiment, out.output_dir.string());

  std::unique_ptr<std::ofstream> trajectory;
  if (cfg.trajectory) {
    trajectory = std::make_unique<std::ofstream>(out.output_dir / "trajectory.csv", std::ios::binary);
    *trajectory << "replica,t,i,x,v\n";
  }

  std::vector<double> times = cfg.plan.times;
  if (std::find(times.begin(), times.end(), cfg.phase.horizon) == times.end()) times.push_back(cfg.phase.horizon);
  std::sort(times.begin(), times.end());
  auto primary = make_setup(cfg, cfg.density.build(largest_n(cfg)), cfg.density.id, times);
  std::unique_ptr<Setup> fallback;
  Setup* active = primary.get();
  std::vector<PlotSeries> plot;
  std::string plot_title, plot_label;

  if (cfg.experiment == "weak-error") {
    weak_series(cfg, out, active, primary, fallback, trajectory.get());
    plot = plot_series(out.results, out.fits, "m");
    plot_title = "weak error, " + cfg.kernel.id;
    plot_label = "|<psi^m, F_{N,m} - f^m>|";
  } else if (cfg.experiment == "kappa-scaling") {
    primary->ctx.trajectory = trajectory.get();
    for (int n : cfg.plan.orders) {
      const auto est = kappa_pairing(cfg.plan, primary->ctx, n);
      add_estimates(out, "kappa-scaling", "kappa_pairing", cfg, primary->density_id, est);
      const auto fits = fit_series(cfg, "kappa-scaling", 2, est, out.warnings);
      out.fits.insert(out.fits.end(), fits.begin(), fits.end());
      primary->ctx.trajectory = nullptr;
    }
    plot = plot_series(out.results, out.fits, "n");
    plot_title = "direct cumulant pairings, " + cfg.kernel.id;
    plot_label = "|<kappa_{N,n}, g^n f^n>|";
  } else if (cfg.experiment == "duality-check") {
    const TerminalObservable term{cfg.plan.psi, cfg.duality.order, cfg.duality.particles};
    const IntegratorSpec ref_flow{cfg.integrator.method, cfg.duality.reference_dt};
    std::vector<double> steps{cfg.integrator.dt};
    for (double dt : cfg.duality.dt_sweep)
      if (dt != cfg.integrator.dt) steps.push_back(dt);
    ExperimentPlan fplan = cfg.plan;
    fplan.replicas = cfg.duality.forward_replicas;
    for (double dt : steps) {
      SimulationContext ctx = primary->ctx;
      ctx.integrator.dt = dt;
      const auto rep = check_forward_duality(term, fplan, ctx, ref_flow);
      spdlog::info("forward duality dt={} residual={:.3e}", dt, rep.max_residual);
      add_report(out, cfg, "forward", term.n_particles, term.m, dt, rep);
    }
    const auto prop = check_prop_identity(term, cfg.plan, primary->ctx, cfg.duality.rhs_samples);
    spdlog::info("identity lhs={:.4e} rhs={:.4e} z={:.2f}", prop.lhs.value, prop.rhs.value, prop.z_score);
    add_report(out, cfg, "prop_identity", term.n_particles, term.m, cfg.integrator.dt, prop);
  } else if (cfg.experiment == "conservation") {
    const TerminalObservable term{cfg.plan.psi, cfg.duality.order, cfg.duality.particles};
    const auto rep = check_cumulant_pairing_conservation(term, primary->ctx, cfg.duality.grid_nx, cfg.duality.grid_nv,
                                                         cfg.duality.tolerance);
    spdlog::info("pairing conservation |lhs - rhs| = {:.3e} (tolerance {})", rep.max_residual, rep.tolerance);
    add_report(out, cfg, "cumulant_pairing", term.n_particles, term.m, cfg.integrator.dt, rep);
  } else if (cfg.experiment == "selftest") {
    out.checks = selftest_checks(cfg);
    weak_series(cfg, out, active, primary, fallback, trajectory.get());
    for (const auto& f : out.fits)
      if (f.time == cfg.phase.horizon)
        out.checks.push_back({fmt::format("weak_error_slope_m{}", f.order), f.fit.slope, -0.5, "<=",
                              !f.fit.degenerate && f.fit.slope <= -0.5});
    plot = plot_series(out.results, out.fits, "m");
    plot_title = "selftest weak error";
    plot_label = "|weak error|";
    for (const auto& c : out.checks) {
      if (c.pass) spdlog::info("PASS {} = {:.3e} ({} {})", c.name, c.value, c.relation, c.threshold);
      else spdlog::error("FAIL {} = {:.3e} ({} {})", c.name, c.value, c.relation, c.threshold);
    }
    if (std::any_of(out.checks.begin(), out.checks.end(), [](const CheckRow& c) { return !c.pass; }))
      out.exit_code = kExitSelftestFailed;
  } else {
    throw ConfigError("run.experiment", "unsupported experiment " + cfg.experiment);
  }
  if (trajectory) trajectory->close();

  const RowStamp stamp{cfg.plan.master_seed, cfg.hash()};
  std::vector<std::string> files;
  {
    std::ostringstream os;
    write_results_csv(os, out.results, stamp);
    write_file(out.output_dir / "results.csv", os.str());
    files.push_back("results.csv");
  }
  {
    std::ostringstream os;
    write_fits_csv(os, out.fits, stamp);
    write_file(out.output_dir / "fits.csv", os.str());
    files.push_back("fits.csv");
  }
  if (!out.duality.empty()) {
    std::ostringstream os;
    write_duality_csv(os, out.duality, stamp);
    write_file(out.output_dir / "duality.csv", os.str());
    files.push_back("duality.csv");
  }
  if (!out.checks.empty()) {
    std::ostringstream os;
    write_checks_csv(os, out.checks, stamp);
    write_file(out.output_dir / "selftest.csv", os.str());
    files.push_back("selftest.csv");
  }
  if (trajectory) files.push_back("trajectory.csv");
  if (cfg.emit_svg && !plot.empty()) {
    const std::string name = cfg.experiment + ".svg";
    write_file(out.output_dir / name, render_loglog_svg(plot_title, plot_label, plot));
    files.push_back(name);
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::ordered_json m;
  m["experiment"] = cfg.experiment;
  m["config_hash"] = stamp.config_hash;
  m["master_seed"] = cfg.plan.master_seed;
  m["seed_streams"] = {{"weak_error", 1}, {"kappa", 2},          {"forward_duality", 3}, {"identity", 4},
                       {"reference", kReferenceStream}, {"bootstrap", kBootstrapStream}, {"selftest", kSelftestStream}};
  m["version"] = MFCHAOS_VERSION;
  m["compiler"] = fmt::format("{} {}", __VERSION__, sizeof(void*) * 8);
  m["workers"] = resolve_workers(cfg.plan.workers);
  m["wall_time_s"] = wall;
  m["kernel"] = primary->kernel.describe();
  m["density"] = active->density.describe();
  m["fallback"] = {{"triggered", out.fallback_used}, {"density", active->density_id}};
  m["warnings"] = out.warnings;
  m["exit_code"] = out.exit_code;
  nlohmann::ordered_json fj = nlohmann::ordered_json::object();
  for (const auto& f : files) fj[f] = sha256_hex(read_file(out.output_dir / f));
  m["files"] = fj;
  m["config"] = cfg.canonical();
  write_file(out.output_dir / "manifest.json", m.dump(2) + "\n");
  spdlog::info("done in {:.1f} s", wall);
  return out;
}

}  // namespace mfchaos

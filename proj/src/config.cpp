#include "mfchaos/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mfchaos {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(key, "expected a real number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) throw ConfigError(key, "expected an integer, got '" + s + "'");
  return v;
}

std::size_t to_count(const std::string& key, const std::string& s, std::size_t min_value) {
  const long long v = to_int(key, s);
  if (v < static_cast<long long>(min_value))
    throw ConfigError(key, fmt::format("must be >= {}, got {}", min_value, v));
  return static_cast<std::size_t>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key, "expected an unsigned integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  const auto t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + s + "'");
}

std::string choice(const std::string& key, const std::string& s, std::initializer_list<const char*> allowed) {
  const auto t = trim(s);
  for (const char* a : allowed)
    if (t == a) return t;
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : " | ") + std::string(a);
  throw ConfigError(key, "expected one of " + list + ", got '" + s + "'");
}

std::string real_str(double v) { return fmt::format("{:.17g}", v); }

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

struct Field {
  SchemaEntry entry;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const char* method_name(IntegratorSpec::Method m) {
  switch (m) {
    case IntegratorSpec::Method::rk4: return "rk4";
    case IntegratorSpec::Method::velocity_verlet: return "velocity_verlet";
    case IntegratorSpec::Method::euler_maruyama: return "euler_maruyama";
  }
  return "rk4";
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto add = [&](std::string key, std::string type, std::string fallback, std::string help, auto set, auto get,
                   bool hashed = true) {
      f.push_back({{std::move(key), std::move(type), std::move(fallback), std::move(help), hashed}, set, get});
    };
    using C = RunConfig;
    using S = const std::string&;

    add("run.experiment", "string", "weak-error", "weak-error | kappa-scaling | duality-check | conservation | selftest",
        [](C& c, S s) {
          c.experiment =
              choice("run.experiment", s, {"weak-error", "kappa-scaling", "duality-check", "conservation", "selftest"});
        },
        [](const C& c) { return c.experiment; });
    add("run.output_dir", "path", "out", "output directory (MFCHAOS_OUTPUT_DIR overrides)",
        [](C& c, S s) { c.output_dir = trim(s); }, [](const C& c) { return c.output_dir.string(); }, false);
    add("run.emit_svg", "bool", "true", "write log-log SVG plots", [](C& c, S s) { c.emit_svg = to_bool("run.emit_svg", s); },
        [](const C& c) { return std::string(c.emit_svg ? "true" : "false"); }, false);
    add("run.trajectory", "bool", "false", "dump (replica, t, i, x, v) rows to trajectory.csv",
        [](C& c, S s) { c.trajectory = to_bool("run.trajectory", s); },
        [](const C& c) { return std::string(c.trajectory ? "true" : "false"); }, false);
    add("run.workers", "int", "0", "worker threads, 0 = available parallelism",
        [](C& c, S s) { c.plan.workers = to_count("run.workers", s, 0); },
        [](const C& c) { return std::to_string(c.plan.workers); }, false);

    add("phase.sigma", "real", "0", "velocity diffusion coefficient (>= 0)",
        [](C& c, S s) {
          c.phase.sigma = to_real("phase.sigma", s);
          if (c.phase.sigma < 0.0) throw ConfigError("phase.sigma", "must be >= 0");
        },
        [](const C& c) { return real_str(c.phase.sigma); });
    add("phase.horizon", "real", "0.5", "time horizon T (> 0)",
        [](C& c, S s) {
          c.phase.horizon = to_real("phase.horizon", s);
          if (!(c.phase.horizon > 0.0)) throw ConfigError("phase.horizon", "must be > 0");
        },
        [](const C& c) { return real_str(c.phase.horizon); });

    add("kernel.type", "string", "smooth", "smooth | rough | zero",
        [](C& c, S s) { c.kernel.type = choice("kernel.type", s, {"smooth", "rough", "zero"}); },
        [](const C& c) { return c.kernel.type; });
    add("kernel.modes", "modes", "1:0.5,2:0.2", "smooth kernel modes k:a_k, comma separated",
        [](C& c, S s) {
          c.kernel.modes.clear();
          for (const auto& item : split(s, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError("kernel.modes", "expected k:a_k, got '" + item + "'");
            const long long k = to_int("kernel.modes", item.substr(0, colon));
            if (k < 1) throw ConfigError("kernel.modes", "wavenumbers must be >= 1");
            c.kernel.modes.push_back({static_cast<int>(k), to_real("kernel.modes", item.substr(colon + 1))});
          }
        },
        [](const C& c) {
          return join(c.kernel.modes, [](const KernelMode& m) { return fmt::format("{}:{}", m.wavenumber, real_str(m.amplitude)); });
        });
    add("kernel.rough_s", "real", "1", "regularity s of the rough kernel (> 0)",
        [](C& c, S s) {
          c.kernel.rough_s = to_real("kernel.rough_s", s);
          if (!(c.kernel.rough_s > 0.0)) throw ConfigError("kernel.rough_s", "must be > 0");
        },
        [](const C& c) { return real_str(c.kernel.rough_s); });
    add("kernel.rough_modes", "int", "32", "number of wavenumbers of the rough kernel",
        [](C& c, S s) { c.kernel.rough_modes = static_cast<int>(to_count("kernel.rough_modes", s, 1)); },
        [](const C& c) { return std::to_string(c.kernel.rough_modes); });
    add("kernel.mollification", "real", "0", "Gaussian spectral damping width delta (>= 0)",
        [](C& c, S s) {
          c.kernel.mollification = to_real("kernel.mollification", s);
          if (c.kernel.mollification < 0.0) throw ConfigError("kernel.mollification", "must be >= 0");
        },
        [](const C& c) { return real_str(c.kernel.mollification); });
    add("kernel.id", "string", "", "label written to the CSVs (default: kernel.type)",
        [](C& c, S s) { c.kernel.id = trim(s); }, [](const C& c) { return c.kernel.id; });

    add("density.kind", "string", "analytic_steady", "analytic_steady | perturbed_oracle",
        [](C& c, S s) { c.density.kind = choice("density.kind", s, {"analytic_steady", "perturbed_oracle"}); },
        [](const C& c) { return c.density.kind; });
    add("density.profile", "string", "gaussian", "gaussian | cosine_bump",
        [](C& c, S s) { c.density.profile = choice("density.profile", s, {"gaussian", "cosine_bump"}); },
        [](const C& c) { return c.density.profile; });
    add("density.theta", "real", "1", "gaussian temperature (> 0)",
        [](C& c, S s) {
          c.density.theta = to_real("density.theta", s);
          if (!(c.density.theta > 0.0)) throw ConfigError("density.theta", "must be > 0");
        },
        [](const C& c) { return real_str(c.density.theta); });
    add("density.half_width", "real", "2", "support half width of the cosine bump (> 0)",
        [](C& c, S s) {
          c.density.half_width = to_real("density.half_width", s);
          if (!(c.density.half_width > 0.0)) throw ConfigError("density.half_width", "must be > 0");
        },
        [](const C& c) { return real_str(c.density.half_width); });
    add("density.epsilon", "real", "0.1", "perturbation amplitude, |eps| < 1",
        [](C& c, S s) {
          c.density.epsilon = to_real("density.epsilon", s);
          if (!(std::abs(c.density.epsilon) < 1.0)) throw ConfigError("density.epsilon", "must satisfy |eps| < 1");
        },
        [](const C& c) { return real_str(c.density.epsilon); });
    add("density.mode", "int", "1", "perturbation wavenumber",
        [](C& c, S s) { c.density.mode = static_cast<int>(to_count("density.mode", s, 1)); },
        [](const C& c) { return std::to_string(c.density.mode); });
    add("density.oracle_size", "int", "0", "oracle particles M, 0 = 100 x largest N",
        [](C& c, S s) { c.density.oracle_size = to_count("density.oracle_size", s, 0); },
        [](const C& c) { return std::to_string(c.density.oracle_size); });
    add("density.id", "string", "", "label written to the CSVs (default: kind)",
        [](C& c, S s) { c.density.id = trim(s); }, [](const C& c) { return c.density.id; });

    add("integrator.method", "string", "rk4", "rk4 | velocity_verlet | euler_maruyama (sigma > 0)",
        [](C& c, S s) {
          const auto m = choice("integrator.method", s, {"rk4", "velocity_verlet", "euler_maruyama"});
          c.integrator.method = m == "rk4"               ? IntegratorSpec::Method::rk4
                                : m == "velocity_verlet" ? IntegratorSpec::Method::velocity_verlet
                                                         : IntegratorSpec::Method::euler_maruyama;
        },
        [](const C& c) { return std::string(method_name(c.integrator.method)); });
    add("integrator.dt", "real", "0.001", "time step (> 0); when omitted, 0.001 x horizon / 0.5",
        [](C& c, S s) {
          c.integrator.dt = to_real("integrator.dt", s);
          if (!(c.integrator.dt > 0.0)) throw ConfigError("integrator.dt", "must be > 0");
        },
        [](const C& c) { return real_str(c.integrator.dt); });

    add("plan.n_grid", "list<int>", "64,128,256,512,1024", "particle numbers, strictly increasing",
        [](C& c, S s) {
          c.plan.n_grid.clear();
          for (const auto& item : split(s, ',')) c.plan.n_grid.push_back(to_count("plan.n_grid", item, 2));
        },
        [](const C& c) { return join(c.plan.n_grid, [](std::size_t n) { return std::to_string(n); }); });
    add("plan.replicas", "int", "200", "replicas R per (N, order), >= 2",
        [](C& c, S s) {
          const long long r = to_int("plan.replicas", s);
          if (r < 2) throw ConfigError("plan.replicas", fmt::format("must be >= 2, got {}", r));
          c.plan.replicas = static_cast<std::size_t>(r);
        },
        [](const C& c) { return std::to_string(c.plan.replicas); });
    add("plan.psi", "string", "v^2", "test function, e.g. v^2 or cos(x) + cos(2x)",
        [](C& c, S s) {
          try {
            c.plan.psi = TestFunction::parse(trim(s));
          } catch (const std::exception& e) {
            throw ConfigError("plan.psi", e.what());
          }
        },
        [](const C& c) { return c.plan.psi.str(); });
    add("plan.orders", "list<int>", "1,2", "marginal orders m (weak-error) or cumulant orders n (kappa-scaling)",
        [](C& c, S s) {
          c.plan.orders.clear();
          for (const auto& item : split(s, ',')) c.plan.orders.push_back(static_cast<int>(to_count("plan.orders", item, 1)));
        },
        [](const C& c) { return join(c.plan.orders, [](int m) { return std::to_string(m); }); });
    add("plan.times", "list<real>", "0.5", "observation times in (0, T], sorted",
        [](C& c, S s) {
          c.plan.times.clear();
          for (const auto& item : split(s, ',')) c.plan.times.push_back(to_real("plan.times", item));
        },
        [](const C& c) { return join(c.plan.times, real_str); });
    add("plan.master_seed", "uint64", "1", "master seed of every random stream",
        [](C& c, S s) { c.plan.master_seed = to_u64("plan.master_seed", s); },
        [](const C& c) { return std::to_string(c.plan.master_seed); });
    add("plan.variance", "string", "coupled", "coupled (sigma = 0 only) | none",
        [](C& c, S s) {
          c.plan.variance = choice("plan.variance", s, {"coupled", "none"}) == "coupled" ? ExperimentPlan::Variance::coupled
                                                                                        : ExperimentPlan::Variance::none;
        },
        [](const C& c) { return std::string(c.plan.variance == ExperimentPlan::Variance::coupled ? "coupled" : "none"); });
    add("plan.estimator", "string", "u_statistic", "u_statistic | first_tuple",
        [](C& c, S s) {
          c.plan.estimator = choice("plan.estimator", s, {"u_statistic", "first_tuple"}) == "u_statistic"
                                 ? ExperimentPlan::Estimator::u_statistic
                                 : ExperimentPlan::Estimator::first_tuple;
        },
        [](const C& c) {
          return std::string(c.plan.estimator == ExperimentPlan::Estimator::u_statistic ? "u_statistic" : "first_tuple");
        });

    add("fit.bootstrap", "int", "500", "bootstrap resamples for slope CIs",
        [](C& c, S s) { c.fit.bootstrap = to_count("fit.bootstrap", s, 10); },
        [](const C& c) { return std::to_string(c.fit.bootstrap); });
    add("fit.confidence", "real", "0.95", "CI level",
        [](C& c, S s) {
          c.fit.confidence = to_real("fit.confidence", s);
          if (!(c.fit.confidence > 0.0 && c.fit.confidence < 1.0)) throw ConfigError("fit.confidence", "must be in (0, 1)");
        },
        [](const C& c) { return real_str(c.fit.confidence); });

    add("fallback.enabled", "bool", "true", "rerun on a perturbed density when every weak-error fit is degenerate",
        [](C& c, S s) { c.fallback.enabled = to_bool("fallback.enabled", s); },
        [](const C& c) { return std::string(c.fallback.enabled ? "true" : "false"); });
    add("fallback.epsilon", "real", "0.1", "perturbation amplitude of the fallback density",
        [](C& c, S s) {
          c.fallback.epsilon = to_real("fallback.epsilon", s);
          if (!(std::abs(c.fallback.epsilon) < 1.0)) throw ConfigError("fallback.epsilon", "must satisfy |eps| < 1");
        },
        [](const C& c) { return real_str(c.fallback.epsilon); });
    add("fallback.mode", "int", "1", "perturbation wavenumber of the fallback density",
        [](C& c, S s) { c.fallback.mode = static_cast<int>(to_count("fallback.mode", s, 1)); },
        [](const C& c) { return std::to_string(c.fallback.mode); });
    add("fallback.oracle_size", "int", "0", "oracle particles of the fallback, 0 = 100 x largest N",
        [](C& c, S s) { c.fallback.oracle_size = to_count("fallback.oracle_size", s, 0); },
        [](const C& c) { return std::to_string(c.fallback.oracle_size); });

    add("duality.particles", "int", "8", "N for the duality checks (conservation: <= 3)",
        [](C& c, S s) { c.duality.particles = to_count("duality.particles", s, 2); },
        [](const C& c) { return std::to_string(c.duality.particles); });
    add("duality.order", "int", "1", "order m of the terminal observable",
        [](C& c, S s) { c.duality.order = static_cast<int>(to_count("duality.order", s, 1)); },
        [](const C& c) { return std::to_string(c.duality.order); });
    add("duality.forward_replicas", "int", "100", "replicas of the pathwise forward check",
        [](C& c, S s) { c.duality.forward_replicas = to_count("duality.forward_replicas", s, 2); },
        [](const C& c) { return std::to_string(c.duality.forward_replicas); });
    add("duality.rhs_samples", "int", "50000", "Monte Carlo samples of the time-integrated side",
        [](C& c, S s) { c.duality.rhs_samples = to_count("duality.rhs_samples", s, 2); },
        [](const C& c) { return std::to_string(c.duality.rhs_samples); });
    add("duality.reference_dt", "real", "0.0001", "step of the reference flow for the pathwise check",
        [](C& c, S s) {
          c.duality.reference_dt = to_real("duality.reference_dt", s);
          if (!(c.duality.reference_dt > 0.0)) throw ConfigError("duality.reference_dt", "must be > 0");
        },
        [](const C& c) { return real_str(c.duality.reference_dt); });
    add("duality.dt_sweep", "list<real>", "0.1,0.05,0.025,0.0125", "extra steps for the pathwise refinement study",
        [](C& c, S s) {
          c.duality.dt_sweep.clear();
          for (const auto& item : split(s, ',')) {
            const double dt = to_real("duality.dt_sweep", item);
            if (!(dt > 0.0)) throw ConfigError("duality.dt_sweep", "steps must be > 0");
            c.duality.dt_sweep.push_back(dt);
          }
        },
        [](const C& c) { return join(c.duality.dt_sweep, real_str); });
    add("duality.grid_nx", "int", "8", "x nodes of the conservation grid",
        [](C& c, S s) { c.duality.grid_nx = to_count("duality.grid_nx", s, 2); },
        [](const C& c) { return std::to_string(c.duality.grid_nx); });
    add("duality.grid_nv", "int", "8", "v nodes of the conservation grid",
        [](C& c, S s) { c.duality.grid_nv = to_count("duality.grid_nv", s, 2); },
        [](const C& c) { return std::to_string(c.duality.grid_nv); });
    add("duality.tolerance", "real", "0.005", "accepted |lhs - rhs| of the conservation check",
        [](C& c, S s) {
          c.duality.tolerance = to_real("duality.tolerance", s);
          if (!(c.duality.tolerance > 0.0)) throw ConfigError("duality.tolerance", "must be > 0");
        },
        [](const C& c) { return real_str(c.duality.tolerance); });
    return f;
  }();
  return table;
}

// Plan/phase checks that span several keys; library messages start with the key path.
void cross_validate(RunConfig& c) {
  const auto rethrow = [](const std::exception& e, const std::string& fallback) {
    const std::string msg = e.what();
    const auto space = msg.find(' ');
    const std::string head = msg.substr(0, space);
    if (head.find('.') != std::string::npos) throw ConfigError(head, msg.substr(space + 1));
    throw ConfigError(fallback, msg);
  };
  try {
    c.plan.validate(c.phase.horizon);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    rethrow(e, "plan");
  }
  try {
    c.integrator.validate(c.phase.sigma);
  } catch (const std::exception& e) {
    throw ConfigError("integrator.method", e.what());
  }
  if (c.kernel.type == "smooth" && c.kernel.modes.empty()) throw ConfigError("kernel.modes", "smooth kernel needs modes");
  if (c.plan.variance == ExperimentPlan::Variance::coupled && c.phase.sigma > 0.0)
    throw ConfigError("plan.variance", "coupled requires sigma = 0");
  if (c.experiment == "kappa-scaling")
    for (int n : c.plan.orders)
      if (n > 4) throw ConfigError("plan.orders", "cumulant orders must be <= 4");
  if (c.experiment == "duality-check" || c.experiment == "conservation") {
    if (c.phase.sigma > 0.0) throw ConfigError("phase.sigma", "duality checks need sigma = 0");
    if (c.density.kind != "analytic_steady") throw ConfigError("density.kind", "duality checks need analytic_steady");
    if (static_cast<std::size_t>(c.duality.order) > c.duality.particles)
      throw ConfigError("duality.order", "must not exceed duality.particles");
  }
  if (c.experiment == "duality-check" && c.duality.particles > 16)
    throw ConfigError("duality.particles", "must be <= 16");
  if (c.experiment == "conservation" && c.duality.particles > 3)
    throw ConfigError("duality.particles", "must be <= 3 for the conservation check");
  if (c.kernel.id.empty()) c.kernel.id = c.kernel.type;
  if (c.density.id.empty()) c.density.id = c.density.kind;
  c.plan.kernel_id = c.kernel.id;
  c.plan.density_id = c.density.id;
}

}  // namespace

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = [] {
    std::vector<SchemaEntry> out;
    for (const auto& f : fields()) out.push_back(f.entry);
    return out;
  }();
  return schema;
}

std::string schema_text() {
  std::string out;
  std::string section;
  for (const auto& e : config_schema()) {
    const auto dot = e.key.find('.');
    const std::string sec = e.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + fmt::format("[{}]\n", sec);
      section = sec;
    }
    out += fmt::format("{:<14} {:<11} default={:<22} {}\n", e.key.substr(dot + 1), e.type,
                       e.fallback.empty() ? "\"\"" : e.fallback, e.help);
  }
  return out;
}

TrigKernel KernelConfig::build() const {
  TrigKernel k;
  if (type == "smooth") k = TrigKernel::smooth(modes);
  else if (type == "rough") k = TrigKernel::rough(rough_s, rough_modes);
  else k = TrigKernel::zero();
  return mollification > 0.0 ? k.mollified(mollification) : k;
}

VelocityProfile DensityConfig::velocity_profile() const {
  return profile == "gaussian" ? VelocityProfile::gaussian(theta) : VelocityProfile::cosine_bump(half_width);
}

DensityModel DensityConfig::build(std::size_t largest_n) const {
  if (kind == "analytic_steady") return DensityModel::steady(velocity_profile());
  const std::size_t m = oracle_size > 0 ? oracle_size : 100 * largest_n;
  return DensityModel::perturbed(velocity_profile(), epsilon, mode, m);
}

std::string RunConfig::canonical(bool hashed_only) const {
  std::string out;
  for (const auto& f : fields()) {
    if (hashed_only && !f.entry.hashed) continue;
    out += f.entry.key + " = " + f.get(*this) + "\n";
  }
  return out;
}

std::string RunConfig::hash() const { return sha256_hex(canonical(true)); }

RunConfig parse_config_text(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<file>", fmt::format("line {}: {}", e.line(), e.message()));
  }
  std::map<std::string, std::string> given;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "keys must live inside a [section]");
    for (const auto& [key, value] : body) given[section + "." + key] = value.data();
  }
  std::set<std::string> known;
  for (const auto& f : fields()) known.insert(f.entry.key);
  for (const auto& [key, value] : given)
    if (!known.count(key)) throw ConfigError(key, "unknown key");

  RunConfig cfg;
  for (const auto& f : fields()) {
    const auto it = given.find(f.entry.key);
    f.set(cfg, it != given.end() ? it->second : f.entry.fallback);
  }
  // keep integrator bias proportionate when only the horizon changes
  if (!given.count("integrator.dt")) cfg.integrator.dt = 1e-3 * cfg.phase.horizon / 0.5;
  cross_validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

const std::string& default_selftest_config() {
  static const std::string text = R"([run]
experiment = selftest
output_dir = out/selftest
emit_svg = false

[kernel]
type = smooth
modes = 1:0.5, 2:0.2

[density]
kind = analytic_steady
profile = gaussian
theta = 1

[plan]
n_grid = 16, 32, 64, 128
replicas = 200
psi = v^2
orders = 1, 2
times = 0.5
master_seed = 2024
)";
  return text;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace mfchaos

#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfchaos/density.hpp"
#include "mfchaos/dynamics.hpp"
#include "mfchaos/estimation.hpp"
#include "mfchaos/kernel.hpp"

namespace mfchaos {

/// A schema violation, carrying the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct SchemaEntry {
  std::string key;
  std::string type;
  std::string fallback;
  std::string help;
  /// Part of the configuration hash (false for keys that cannot change results).
  bool hashed = true;
};

const std::vector<SchemaEntry>& config_schema();
/// Human-readable schema listing, one key per line grouped by section.
std::string schema_text();

struct KernelConfig {
  std::string type = "smooth";  // smooth | rough | zero
  std::vector<KernelMode> modes{{1, 0.5}, {2, 0.2}};
  double rough_s = 1.0;
  int rough_modes = 32;
  double mollification = 0.0;
  std::string id;

  TrigKernel build() const;
};

struct DensityConfig {
  std::string kind = "analytic_steady";  // analytic_steady | perturbed_oracle
  std::string profile = "gaussian";       // gaussian | cosine_bump
  double theta = 1.0;
  double half_width = 2.0;
  double epsilon = 0.1;
  int mode = 1;
  std::size_t oracle_size = 0;  // 0: 100 x the largest N
  std::string id;

  VelocityProfile velocity_profile() const;
  DensityModel build(std::size_t largest_n) const;
};

struct FallbackConfig {
  bool enabled = true;
  double epsilon = 0.1;
  int mode = 1;
  std::size_t oracle_size = 0;
};

struct FitConfig {
  std::size_t bootstrap = 500;
  double confidence = 0.95;
};

struct DualityConfig {
  std::size_t particles = 8;
  int order = 1;
  std::size_t forward_replicas = 100;
  std::size_t rhs_samples = 50000;
  double reference_dt = 1e-4;
  std::vector<double> dt_sweep{0.1, 0.05, 0.025, 0.0125};
  std::size_t grid_nx = 8;
  std::size_t grid_nv = 8;
  double tolerance = 5e-3;
};

struct RunConfig {
  std::string experiment = "weak-error";  // weak-error | kappa-scaling | duality-check | conservation | selftest
  std::filesystem::path output_dir = "out";
  bool emit_svg = true;
  bool trajectory = false;
  PhaseConfig phase;
  KernelConfig kernel;
  DensityConfig density;
  IntegratorSpec integrator;
  ExperimentPlan plan;
  FitConfig fit;
  DualityConfig duality;
  FallbackConfig fallback;

  /// "key = value" lines in schema order with normalized values.
  std::string canonical(bool hashed_only = false) const;
  /// SHA-256 of the hashed canonical form.
  std::string hash() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// The configuration `selftest` runs when no file is given.
const std::string& default_selftest_config();

std::string sha256_hex(const std::string& bytes);

}  // namespace mfchaos

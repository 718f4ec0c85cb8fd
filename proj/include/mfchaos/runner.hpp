#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfchaos/config.hpp"
#include "mfchaos/report.hpp"

namespace mfchaos {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitSelftestFailed = 2 };

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::vector<ResultRow> results;
  std::vector<FitRow> fits;
  std::vector<DualityRow> duality;
  std::vector<CheckRow> checks;
  bool fallback_used = false;
  std::vector<std::string> warnings;
};

/// cfg.output_dir unless MFCHAOS_OUTPUT_DIR is set.
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

/// Runs the configured experiment and writes results.csv, fits.csv, manifest.json and,
/// depending on the experiment, duality.csv, selftest.csv, trajectory.csv and SVG plots.
RunOutcome run_experiment(const RunConfig& cfg);

/// Fast built-in checks with fixed thresholds; the selftest experiment runs these
/// plus the configured weak-error series.
std::vector<CheckRow> selftest_checks(const RunConfig& cfg);

}  // namespace mfchaos

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfchaos/duality.hpp"
#include "mfchaos/rates.hpp"

namespace mfchaos {

/// Tags every CSV row so a file can be traced back to its configuration.
struct RowStamp {
  std::uint64_t master_seed = 0;
  std::string config_hash;
};

struct ResultRow {
  std::string experiment;
  std::string quantity;
  std::string kernel_id;
  std::string density_id;
  std::size_t n = 0;
  int order = 0;
  double time = 0.0;
  std::size_t replicas = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double reference_error = 0.0;
  double reference_bias = 0.0;
  bool reference_flagged = false;
};

ResultRow result_row(const std::string& experiment, const std::string& quantity, const std::string& kernel_id,
                     const std::string& density_id, const MomentEstimate& e);

struct FitRow {
  std::string experiment;
  int order = 0;
  double time = 0.0;
  RateFit fit;
};

struct DualityRow {
  std::string check;
  std::size_t n = 0;
  int order = 0;
  double dt = 0.0;
  DualityReport report;
};

struct CheckRow {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  /// "<=", "<" or ">=": how value is compared with threshold.
  std::string relation = "<=";
  bool pass = false;
};

/// Shortest round-trip decimal form used in every CSV.
std::string csv_real(double v);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, const RowStamp& stamp);
void write_fits_csv(std::ostream& os, const std::vector<FitRow>& rows, const RowStamp& stamp);
void write_duality_csv(std::ostream& os, const std::vector<DualityRow>& rows, const RowStamp& stamp);
void write_checks_csv(std::ostream& os, const std::vector<CheckRow>& rows, const RowStamp& stamp);

struct PlotSeries {
  std::string label;
  std::vector<RatePoint> points;
  std::optional<RateFit> fit;
};

/// Log-log plot of |value| against N with error bars, fitted lines and slope labels (SVG 1.1).
std::string render_loglog_svg(const std::string& title, const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace mfchaos

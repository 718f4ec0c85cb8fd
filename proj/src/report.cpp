#include "mfchaos/report.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <ostream>

namespace mfchaos {

std::string csv_real(double v) { return fmt::format("{}", v); }

ResultRow result_row(const std::string& experiment, const std::string& quantity, const std::string& kernel_id,
                     const std::string& density_id, const MomentEstimate& e) {
  ResultRow r;
  r.experiment = experiment;
  r.quantity = quantity;
  r.kernel_id = kernel_id;
  r.density_id = density_id;
  r.n = e.n;
  r.order = e.order;
  r.time = e.time;
  r.replicas = e.replicas;
  r.estimate = e.value;
  r.std_error = e.std_error;
  r.reference_error = e.reference_error;
  r.reference_bias = e.reference_bias;
  r.reference_flagged = e.reference_flagged;
  return r;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, const RowStamp& stamp) {
  os << "experiment,kernel_id,density_id,N,order,time,R,estimate,stderr,master_seed,quantity,reference_error,"
        "reference_bias,reference_flagged,config_hash\n";
  for (const auto& r : rows)
    os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.experiment, r.kernel_id, r.density_id, r.n,
                      r.order, csv_real(r.time), r.replicas, csv_real(r.estimate), csv_real(r.std_error),
                      stamp.master_seed, r.quantity, csv_real(r.reference_error), csv_real(r.reference_bias),
                      r.reference_flagged ? 1 : 0, stamp.config_hash);
}

void write_fits_csv(std::ostream& os, const std::vector<FitRow>& rows, const RowStamp& stamp) {
  os << "experiment,order,slope,ci_lo,ci_hi,degenerate,time,intercept,sign_change,points,master_seed,config_hash\n";
  for (const auto& r : rows) {
    std::string pts;
    for (double n : r.fit.points_used) pts += (pts.empty() ? "" : ";") + csv_real(n);
    os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.experiment, r.order, csv_real(r.fit.slope),
                      csv_real(r.fit.ci_lo), csv_real(r.fit.ci_hi), r.fit.degenerate ? 1 : 0, csv_real(r.time),
                      csv_real(r.fit.intercept), r.fit.sign_change ? 1 : 0, pts, stamp.master_seed, stamp.config_hash);
  }
}

void write_duality_csv(std::ostream& os, const std::vector<DualityRow>& rows, const RowStamp& stamp) {
  os << "experiment,check,N,order,dt,lhs,lhs_stderr,rhs,rhs_stderr,z_score,max_residual,tolerance,master_seed,"
        "config_hash\n";
  for (const auto& r : rows) {
    const auto& d = r.report;
    os << fmt::format("duality,{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.check, r.n, r.order, csv_real(r.dt),
                      csv_real(d.lhs.value), csv_real(d.lhs.std_error), csv_real(d.rhs.value),
                      csv_real(d.rhs.std_error), csv_real(d.z_score), csv_real(d.max_residual),
                      csv_real(d.tolerance), stamp.master_seed, stamp.config_hash);
  }
}

void write_checks_csv(std::ostream& os, const std::vector<CheckRow>& rows, const RowStamp& stamp) {
  os << "check,value,relation,threshold,pass,master_seed,config_hash\n";
  for (const auto& r : rows)
    os << fmt::format("{},{},{},{},{},{},{}\n", r.name, csv_real(r.value), r.relation, csv_real(r.threshold),
                      r.pass ? 1 : 0, stamp.master_seed, stamp.config_hash);
}

namespace {

constexpr double kWidth = 640.0, kHeight = 440.0;
constexpr double kLeft = 80.0, kRight = 170.0, kTop = 40.0, kBottom = 60.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_loglog_svg(const std::string& title, const std::string& y_label, const std::vector<PlotSeries>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      const double a = std::abs(p.value);
      if (!(p.n > 0.0) || !(a > 0.0)) continue;
      xmin = std::min(xmin, std::log10(p.n));
      xmax = std::max(xmax, std::log10(p.n));
      ymin = std::min(ymin, std::log10(a));
      ymax = std::max(ymax, std::log10(a + p.std_error));
    }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = -1.0;
    ymax = 0.0;
  }
  xmin = std::floor(xmin * 10.0 - 1.0) / 10.0;
  xmax = std::ceil(xmax * 10.0 + 1.0) / 10.0;
  ymin = std::floor(ymin - 0.3);
  ymax = std::ceil(ymax + 0.1);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double ly) {
    const double c = std::clamp(ly, ymin, ymax);
    return kTop + (ymax - c) / (ymax - ymin) * ph;
  };

  std::string svg = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n"
      "<rect x=\"{4}\" y=\"{5}\" width=\"{6}\" height=\"{7}\" fill=\"none\" stroke=\"black\"/>\n",
      kWidth, kHeight, kLeft + pw / 2.0, escape(title), kLeft, kTop, pw, ph);

  for (int e = static_cast<int>(std::ceil(ymin)); e <= static_cast<int>(std::floor(ymax)); ++e) {
    const double y = py(e);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n", kLeft, y, kLeft + pw);
    svg += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">1e{}</text>\n", kLeft - 6, y + 4, e);
  }
  for (const auto& s : series)
    for (const auto& p : s.points) {
      if (!(p.n > 0.0)) continue;
      const double x = px(std::log10(p.n));
      svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n", x, kTop, kTop + ph);
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, kTop + ph + 16, p.n);
    }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">N</text>\n", kLeft + pw / 2.0, kHeight - 18);
  svg += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                     kTop + ph / 2.0, escape(y_label));

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    for (const auto& p : s.points) {
      const double a = std::abs(p.value);
      if (!(p.n > 0.0) || !(a > 0.0)) continue;
      const double x = px(std::log10(p.n));
      const double lo = a - p.std_error > 0.0 ? std::log10(a - p.std_error) : ymin;
      svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"{3}\"/>\n", x,
                         py(lo), py(std::log10(a + p.std_error)), color);
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\"/>\n", x, py(std::log10(a)), color);
    }
    std::string label = s.label;
    if (s.fit && !s.fit->degenerate && !s.points.empty()) {
      const double n0 = s.points.front().n, n1 = s.points.back().n;
      svg += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-dasharray=\"5,3\"/>\n",
          px(std::log10(n0)), py(std::log10(s.fit->predict(n0))), px(std::log10(n1)),
          py(std::log10(s.fit->predict(n1))), color);
      label += fmt::format(" slope {:.2f} [{:.2f}, {:.2f}]", s.fit->slope, s.fit->ci_lo, s.fit->ci_hi);
    } else if (s.fit) {
      label += " degenerate";
    }
    const double ly = kTop + 14.0 + 34.0 * static_cast<double>(si);
    const double lx = kLeft + pw + 10.0;
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\"/>\n", lx, ly - 4, color);
    const auto cut = label.find(" slope");
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", lx + 8, ly, escape(label.substr(0, cut)));
    if (cut != std::string::npos)
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\">{}</text>\n", lx + 8, ly + 14,
                         escape(label.substr(cut + 1)));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace mfchaos

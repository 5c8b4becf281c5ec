#include "rsyield/causal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"

namespace rsyield::causal {

using ordered_json = nlohmann::ordered_json;

LagReport lag_report(const elasticnet::EnetModel& m, double tol) {
  const std::vector<std::string>& expected = features::covariate_names();
  if (m.column_names.size() != expected.size()) {
    std::ostringstream os;
    os << "lag_report: model has " << m.column_names.size() << " columns, expected "
       << expected.size();
    throw ValidationError(os.str());
  }
  std::vector<std::string> mismatched;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (m.column_names[i] != expected[i]) mismatched.push_back(m.column_names[i]);
  }
  if (!mismatched.empty()) {
    std::ostringstream os;
    os << "lag_report: model columns do not match the covariate layout; unmatched:";
    for (const std::string& name : mismatched) os << " '" << name << "'";
    throw ValidationError(os.str());
  }

  LagReport report;
  report.tol = tol;
  const std::vector<double> beta_std = m.beta_internal();
  for (int v = 0; v < 3; ++v) {
    for (int o = 0; o < 2; ++o) {
      const Variable var = static_cast<Variable>(v);
      const Order ord = static_cast<Order>(o);
      LagProfile& prof = report.profiles[static_cast<std::size_t>(features::block_index(var, ord))];
      prof.variable = var;
      prof.order = ord;
      int n_active = 0;
      for (int lag = 1; lag <= features::kNumLags; ++lag) {
        const std::size_t col = static_cast<std::size_t>(features::column_index(var, ord, lag));
        LagCell& cell = prof.lags[static_cast<std::size_t>(lag - 1)];
        cell.lag = lag;
        cell.coef_raw = m.beta[col];
        cell.coef_std = beta_std[col];
        cell.active = std::abs(cell.coef_std) > tol;
        cell.sign = cell.active ? (cell.coef_std > 0.0 ? 1 : -1) : 0;
        n_active += cell.active;
      }
      prof.density = static_cast<double>(n_active) / static_cast<double>(features::kNumLags);
    }
  }
  return report;
}

std::vector<int> active_lags(const LagReport& r, Variable v, Order o) {
  std::vector<int> out;
  for (const LagCell& c : r.profile(v, o).lags) {
    if (c.active) out.push_back(c.lag);
  }
  return out;
}

double density(const LagReport& r, Variable v, Order o) { return r.profile(v, o).density; }

void write_report_json(const std::filesystem::path& path, const LagReport& r) {
  ordered_json j;
  j["tol"] = r.tol;
  ordered_json profiles = ordered_json::array();
  for (const LagProfile& p : r.profiles) {
    ordered_json pj;
    pj["variable"] = std::string(ingest::variable_name(p.variable));
    pj["order"] = std::string(features::order_name(p.order));
    pj["density"] = p.density;
    ordered_json lags = ordered_json::array();
    for (const LagCell& c : p.lags) {
      ordered_json cj;
      cj["lag"] = c.lag;
      cj["coef_std"] = c.coef_std;
      cj["coef_raw"] = c.coef_raw;
      cj["active"] = c.active;
      cj["sign"] = c.sign;
      lags.push_back(std::move(cj));
    }
    pj["lags"] = std::move(lags);
    profiles.push_back(std::move(pj));
  }
  j["profiles"] = std::move(profiles);
  csv::write_file_atomic(path, j.dump(2) + "\n");
}

void write_report_csv(const std::filesystem::path& path, const LagReport& r) {
  std::ostringstream out;
  out << "variable,order,lag,coef_std,coef_raw,active\n";
  for (const LagProfile& p : r.profiles) {
    for (const LagCell& c : p.lags) {
      out << ingest::variable_name(p.variable) << ',' << features::order_name(p.order) << ','
          << c.lag << ',' << csv::fmt_double(c.coef_std) << ',' << csv::fmt_double(c.coef_raw)
          << ',' << (c.active ? 1 : 0) << "\n";
    }
  }
  csv::write_file_atomic(path, out.str());
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Fixed-geometry bar chart: 12 bars around a zero axis, labeled with the lag
// number.  Static markup, identical bytes for identical reports.
std::string profile_svg(const LagProfile& p) {
  constexpr int width = 520, height = 260;
  constexpr double left = 40.0, right = 20.0, top = 30.0, bottom = 30.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  double max_abs = 0.0;
  for (const LagCell& c : p.lags) max_abs = std::max(max_abs, std::abs(c.coef_std));
  if (max_abs == 0.0) max_abs = 1.0;
  const double axis_y = top + plot_h / 2.0;
  const double bar_w = plot_w / (2.0 * features::kNumLags);

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\">\n";
  s << "<text x=\"" << left << "\" y=\"18\" font-family=\"monospace\" font-size=\"13\">"
    << ingest::variable_name(p.variable) << " " << features::order_name(p.order)
    << " (standardized coefficients)</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << csv::fmt_double(axis_y) << "\" x2=\""
    << width - right << "\" y2=\"" << csv::fmt_double(axis_y)
    << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (const LagCell& c : p.lags) {
    const double x = left + plot_w * (static_cast<double>(c.lag - 1) + 0.25) /
                                static_cast<double>(features::kNumLags);
    const double h = (plot_h / 2.0) * std::abs(c.coef_std) / max_abs;
    const double y = c.coef_std >= 0.0 ? axis_y - h : axis_y;
    s << "<rect x=\"" << csv::fmt_double(x) << "\" y=\"" << csv::fmt_double(y) << "\" width=\""
      << csv::fmt_double(bar_w) << "\" height=\"" << csv::fmt_double(h) << "\" fill=\""
      << (c.active ? "#2c7fb8" : "#cccccc") << "\"/>\n";
    s << "<text x=\"" << csv::fmt_double(x + bar_w / 2.0) << "\" y=\"" << height - 10
      << "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">" << c.lag
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

void write_report_svgs(const std::filesystem::path& out_dir, const LagReport& r) {
  for (const LagProfile& p : r.profiles) {
    const std::string name = "lag_" + lower(ingest::variable_name(p.variable)) + "_" +
                             std::string(features::order_name(p.order)) + ".svg";
    csv::write_file_atomic(out_dir / name, profile_svg(p));
  }
}

}  // namespace rsyield::causal

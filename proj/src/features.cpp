#include "rsyield/features.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <sstream>
#include <thread>

#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"

namespace rsyield::features {

std::string_view order_name(Order o) {
  return o == Order::velocity ? "velocity" : "acceleration";
}

Order order_from_name(std::string_view name) {
  if (name == "velocity") return Order::velocity;
  if (name == "acceleration") return Order::acceleration;
  throw ValidationError("unknown difference order: '" + std::string(name) + "'");
}

const std::vector<std::string>& covariate_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kNumCovariates);
    for (std::string_view f : ControlVector::field_names()) out.emplace_back(f);
    static constexpr const char* kVar[] = {"ndvi", "prec", "temp"};
    static constexpr const char* kOrd[] = {"vel", "accel"};
    for (int v = 0; v < 3; ++v) {
      for (int o = 0; o < 2; ++o) {
        for (int lag = 1; lag <= kNumLags; ++lag) {
          out.push_back(std::string(kOrd[o]) + "_" + kVar[v] + "_lag" + std::to_string(lag));
        }
      }
    }
    return out;
  }();
  return names;
}

std::array<double, kNumCovariates> FeatureVector::flat() const {
  std::array<double, kNumCovariates> out;
  for (int i = 0; i < kNumControls; ++i) out[i] = z[i];
  for (int i = 0; i < kNumDynamic; ++i) out[kNumControls + i] = w[i];
  return out;
}

WeeklySeries velocity(const WeeklySeries& s) {
  if (s.values.size() < 2) {
    std::ostringstream os;
    os << "plot " << s.plot_id << " " << ingest::variable_name(s.variable)
       << ": need at least 2 weeks for a first difference, have " << s.values.size();
    throw ValidationError(os.str());
  }
  WeeklySeries out;
  out.plot_id = s.plot_id;
  out.variable = s.variable;
  out.start_week = s.start_week + 1;
  out.values.resize(s.values.size() - 1);
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = s.values[k + 1] - s.values[k];
  }
  return out;
}

WeeklySeries acceleration(const WeeklySeries& s) { return velocity(velocity(s)); }

std::array<double, kNumLags> lag_window(const WeeklySeries& s, std::int64_t harvest_week) {
  if (!s.covers(harvest_week - kNumLags, harvest_week - 1)) {
    std::ostringstream os;
    os << "plot " << s.plot_id << " " << ingest::variable_name(s.variable) << ": weeks "
       << harvest_week - kNumLags << ".." << harvest_week - 1
       << " not covered (series spans " << s.start_week << ".." << s.end_week() << ")";
    throw CoverageError(os.str());
  }
  std::array<double, kNumLags> out;
  for (int d = 1; d <= kNumLags; ++d) {
    out[d - 1] = s.at_week(harvest_week - d);
  }
  return out;
}

FeatureVector assemble_covariates(const ControlVector& z, const WeeklySeries& ndvi,
                                  const WeeklySeries& prec, const WeeklySeries& temp,
                                  std::int64_t harvest_week) {
  const WeeklySeries* series[3] = {&ndvi, &prec, &temp};
  for (int v = 0; v < 3; ++v) {
    // Two extra weeks of history so the second difference has 12 valid lags.
    if (!series[v]->covers(harvest_week - kNumLags - 2, harvest_week)) {
      std::ostringstream os;
      os << ingest::variable_name(static_cast<Variable>(v)) << ": weeks "
         << harvest_week - kNumLags - 2 << ".." << harvest_week << " not covered (series spans "
         << series[v]->start_week << ".." << series[v]->end_week() << ")";
      throw CoverageError(os.str());
    }
  }
  FeatureVector f;
  f.z = z.as_array();
  for (int v = 0; v < 3; ++v) {
    const WeeklySeries vel = velocity(*series[v]);
    const WeeklySeries acc = velocity(vel);
    const auto vel_lags = lag_window(vel, harvest_week);
    const auto acc_lags = lag_window(acc, harvest_week);
    const Variable var = static_cast<Variable>(v);
    for (int d = 1; d <= kNumLags; ++d) {
      f.w[w_index(var, Order::velocity, d)] = vel_lags[d - 1];
      f.w[w_index(var, Order::acceleration, d)] = acc_lags[d - 1];
    }
  }
  return f;
}

void WeeklyStore::add(WeeklySeries s) {
  const auto key = std::make_pair(s.plot_id, static_cast<int>(s.variable));
  store_[key] = std::move(s);
}

const WeeklySeries* WeeklyStore::find(std::int64_t plot_id, Variable v) const {
  const auto it = store_.find(std::make_pair(plot_id, static_cast<int>(v)));
  return it == store_.end() ? nullptr : &it->second;
}

namespace {

// Runs fn(i) for i in [0, n) over `threads` workers on disjoint index blocks.
// Output slots are per-index, so the result never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(k);
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < k; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

BuildResult build_dataset(std::span<const PlotRecord> plots, const WeeklyStore& weekly,
                          int n_threads) {
  const std::size_t n = plots.size();
  std::vector<FeatureVector> rows(n);
  std::vector<std::string> failures(n);  // empty string = row assembled
  std::vector<char> ok(n, 0);

  parallel_for(n, n_threads, [&](std::size_t i) {
    const PlotRecord& p = plots[i];
    const WeeklySeries* s[3];
    for (int v = 0; v < 3; ++v) {
      s[v] = weekly.find(p.id, static_cast<Variable>(v));
      if (!s[v]) {
        failures[i] = std::string("missing weekly series for ") +
                      std::string(ingest::variable_name(static_cast<Variable>(v)));
        return;
      }
    }
    try {
      rows[i] = assemble_covariates(p.controls, *s[0], *s[1], *s[2], p.harvest_week);
      ok[i] = 1;
    } catch (const CoverageError& e) {
      failures[i] = e.what();
    }
  });

  BuildResult result;
  result.dataset.columns = covariate_names();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) kept += ok[i];
  result.dataset.X = Matrix(kept, kNumCovariates);
  result.dataset.y.resize(kept);
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      result.skipped.push_back(SkipRecord{plots[i].id, failures[i]});
      continue;
    }
    const auto flat = rows[i].flat();
    std::copy(flat.begin(), flat.end(), result.dataset.X.row(r));
    result.dataset.y[r] = plots[i].yield_t_ha;
    ++r;
  }
  return result;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ostringstream out;
  for (const std::string& c : d.columns) out << c << ',';
  out << kResponseName << "\n";
  for (std::size_t r = 0; r < d.n(); ++r) {
    const double* row = d.X.row(r);
    for (int c = 0; c < kNumCovariates; ++c) out << csv::fmt_double(row[c]) << ',';
    out << csv::fmt_double(d.y[r]) << "\n";
  }
  csv::write_file_atomic(path, out.str());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::vector<std::string> expected = covariate_names();
  expected.emplace_back(kResponseName);
  const csv::Table table = csv::read_table(path, expected);
  Dataset d;
  d.columns = covariate_names();
  d.X = Matrix(table.rows.size(), kNumCovariates);
  d.y.resize(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::ostringstream ctx;
    ctx << path.string() << " row " << r + 2;
    for (int c = 0; c < kNumCovariates; ++c) {
      d.X(r, c) = csv::parse_double(table.rows[r][c], ctx.str());
    }
    d.y[r] = csv::parse_double(table.rows[r][kNumCovariates], ctx.str());
  }
  return d;
}

void write_skips_csv(const std::filesystem::path& path, std::span<const SkipRecord> skips) {
  std::ostringstream out;
  out << "plot_id,reason\n";
  for (const SkipRecord& s : skips) {
    std::string reason = s.reason;
    for (char& ch : reason) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << s.plot_id << ',' << reason << "\n";
  }
  csv::write_file_atomic(path, out.str());
}

}  // namespace rsyield::features

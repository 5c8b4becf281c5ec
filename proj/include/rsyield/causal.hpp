#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "rsyield/elasticnet.hpp"
#include "rsyield/features.hpp"

// Lag identification.  A fitted elastic net is read back through the covariate
// layout: for each variable and difference order, the 12 lag coefficients are
// tabulated on both the raw and the standardized scale, and a lag counts as
// active when its standardized coefficient is distinguishable from zero.

namespace rsyield::causal {

using features::Order;
using features::Variable;

inline constexpr double kActiveTol = 1e-8;

struct LagCell {
  int lag = 0;  // weeks before harvest, 1..12
  double coef_std = 0.0;
  double coef_raw = 0.0;
  bool active = false;
  int sign = 0;  // -1, 0, +1 of the standardized coefficient
};

struct LagProfile {
  Variable variable = Variable::NDVI;
  Order order = Order::velocity;
  std::array<LagCell, features::kNumLags> lags{};
  double density = 0.0;  // active count / 12
};

struct LagReport {
  std::array<LagProfile, features::kNumBlocks> profiles{};
  double tol = kActiveTol;

  const LagProfile& profile(Variable v, Order o) const {
    return profiles[static_cast<std::size_t>(features::block_index(v, o))];
  }
};

// Requires the model's column names to match the covariate layout exactly;
// unmatched names are listed in the error.
LagReport lag_report(const elasticnet::EnetModel& m, double tol = kActiveTol);

std::vector<int> active_lags(const LagReport& r, Variable v, Order o);
double density(const LagReport& r, Variable v, Order o);

void write_report_json(const std::filesystem::path& path, const LagReport& r);
void write_report_csv(const std::filesystem::path& path, const LagReport& r);
// One bar chart per profile, named lag_<variable>_<order>.svg.
void write_report_svgs(const std::filesystem::path& out_dir, const LagReport& r);

}  // namespace rsyield::causal

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vqel/error.hpp"
#include "vqel/runner/results.hpp"
#include "vqel/runner/run.hpp"

namespace vqel::runner {

// Log-uniform points from lo to hi inclusive, `per_decade` points per factor of 10.
inline std::vector<double> log_grid(double lo, double hi, std::size_t per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || per_decade == 0) throw ConfigError("log_grid: need 0 < lo <= hi, per_decade > 0");
  const double decades = std::log10(hi / lo);
  const auto steps = static_cast<std::size_t>(std::llround(decades * static_cast<double>(per_decade)));
  std::vector<double> out;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double e = steps ? decades * static_cast<double>(i) / static_cast<double>(steps) : 0.0;
    out.push_back(lo * std::pow(10.0, e));
  }
  return out;
}

struct Grid {
  std::vector<double> lr, tau_sample, tau0;
};

struct GridRow {
  double lr = 0.0, tau_sample = 0.0, tau0 = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct GridOutcome {
  std::vector<GridRow> table;
  std::size_t best = 0;
  ExperimentConfig best_config;
};

// Empty axes keep the base config's value. Points run in lexicographic
// (lr, τ_sample, τ₀) order; ties keep the earliest point.
inline GridOutcome grid_search(const ExperimentConfig& base, Grid g) {
  if (g.lr.empty()) g.lr = {base.lr};
  if (g.tau_sample.empty()) g.tau_sample = {base.tau_sample};
  if (g.tau0.empty()) g.tau0 = {base.tau0};
  GridOutcome out;
  double best = -1.0;
  for (double lr : g.lr)
    for (double ts : g.tau_sample)
      for (double t0 : g.tau0) {
        auto c = base;
        c.lr = lr;
        c.tau_sample = ts;
        c.tau0 = t0;
        const auto r = run(c);
        GridRow row{lr, ts, t0, 0.0, r.aggregate.accuracy.mean};
        for (const auto& s : r.seeds) row.validation_accuracy += s.validation_accuracy;
        row.validation_accuracy /= static_cast<double>(r.seeds.size());
        if (row.validation_accuracy > best) {
          best = row.validation_accuracy;
          out.best = out.table.size();
          out.best_config = c;
        }
        out.table.push_back(row);
      }
  return out;
}

inline std::string grid_csv(const GridOutcome& g) {
  char buf[160];
  std::string out = "lr,tau_sample,tau0,val_ACC,test_ACC\n";
  for (const auto& r : g.table) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.4f,%.4f\n", r.lr, r.tau_sample, r.tau0, r.validation_accuracy,
                  r.test_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace vqel::runner

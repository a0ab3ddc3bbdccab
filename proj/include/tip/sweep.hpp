#pragma once

// Noise sweeps: one TIP score per (scenario, magnitude, seed) row.
//
// Row seeds are derived as
//   seed = combine(combine(combine(master_seed, fnv1a(scenario_id)), magnitude_index), seed_index)
// using rng::combine and rng::fnv1a, so a sweep CSV is
// reproducible from its master seed on any machine.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tip/errors.hpp"
#include "tip/planner.hpp"
#include "tip/rng.hpp"
#include "tip/scenario.hpp"
#include "tip/tipmetric.hpp"

namespace tip::sweep {

inline std::uint64_t row_seed(std::uint64_t master_seed, std::string_view scenario_id, std::size_t magnitude_index,
                              std::size_t seed_index) {
  std::uint64_t h = rng::combine(master_seed, rng::fnv1a(scenario_id));
  h = rng::combine(h, magnitude_index);
  return rng::combine(h, seed_index);
}

struct SweepConfig {
  scenario::NoiseKind kind = scenario::NoiseKind::kLocation;
  std::vector<double> magnitudes;
  std::size_t seeds = 1;
  std::uint64_t master_seed = 0;
  std::size_t samples = 1;
  planner::PlannerConfig planner;
  metric::TipOptions options;
  double divergence_sigma = 1.0;
  /// 0 picks hardware concurrency.
  std::size_t workers = 0;

  void validate() const {
    if (magnitudes.size() < 2) throw ContractError("a sweep needs at least two magnitudes");
    if (seeds < 1) throw ContractError("a sweep needs at least one seed");
    if (samples < 1) throw ContractError("samples must be >= 1");
    for (double m : magnitudes) scenario::NoiseSpec{kind, m, 0}.validate();
    planner.validate();
  }
};

struct SweepRow {
  std::string scenario_id;
  scenario::NoiseKind kind = scenario::NoiseKind::kLocation;
  double magnitude = 0.0;
  std::size_t magnitude_index = 0;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  double tip = 0.0;
  double behavior_divergence = 0.0;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.error; }));
  }

  /// Mean tip per magnitude over successful rows, in magnitude order.
  std::vector<double> mean_tip_by_magnitude(std::size_t magnitude_count) const {
    std::vector<double> sum(magnitude_count, 0.0);
    std::vector<std::size_t> n(magnitude_count, 0);
    for (const auto& r : rows) {
      if (r.error) continue;
      sum[r.magnitude_index] += r.tip;
      ++n[r.magnitude_index];
    }
    for (std::size_t i = 0; i < magnitude_count; ++i) sum[i] = n[i] ? sum[i] / static_cast<double>(n[i]) : 0.0;
    return sum;
  }
};

/// Scores one row: ground truth is the nominal scenario, perception is the
/// scenario with one injected error.
inline SweepRow run_row(const scenario::Scenario& s, const SweepConfig& cfg, std::size_t mi, std::size_t si) {
  SweepRow row;
  row.scenario_id = s.id;
  row.kind = cfg.kind;
  row.magnitude = cfg.magnitudes[mi];
  row.magnitude_index = mi;
  row.seed_index = si;
  row.seed = row_seed(cfg.master_seed, s.id, mi, si);
  try {
    const auto q_state = scenario::inject(s, {cfg.kind, row.magnitude, row.seed});
    scenario::validate(q_state);  // huge magnitudes can overflow to inf
    const auto p = scenario::as_distribution(s);
    const auto q = scenario::as_distribution(q_state);
    const estimator::SampleSpec spec{cfg.samples, row.seed};
    const auto report = metric::tip_score(p, q, cfg.planner, spec, cfg.options);
    row.tip = report.tip_score;
    const auto behaviour_q = planner::plan(q, cfg.planner, spec).best();
    row.behavior_divergence = metric::behavior_divergence(report.a_star, behaviour_q, cfg.divergence_sigma);
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// Rows come back in (scenario, magnitude, seed) order whatever the worker
/// scheduling.
inline SweepResult run_sweep(const std::vector<scenario::Scenario>& scenarios, const SweepConfig& cfg) {
  cfg.validate();
  if (scenarios.empty()) throw ContractError("a sweep needs at least one scenario");
  const std::size_t per_scenario = cfg.magnitudes.size() * cfg.seeds;
  const std::size_t total = scenarios.size() * per_scenario;

  SweepResult result;
  result.rows.resize(total);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t sc = k / per_scenario;
      const std::size_t rem = k % per_scenario;
      result.rows[k] = run_row(scenarios[sc], cfg, rem / cfg.seeds, rem % cfg.seeds);
    }
  };

  std::size_t workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, total);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return result;
}

inline constexpr const char* kSweepCsvHeader = "scenario_id,noise_kind,magnitude,seed,tip,behavior_divergence";

/// Failed rows are omitted from the table.
inline void write_csv(std::ostream& os, const SweepResult& r) {
  os << kSweepCsvHeader << '\n';
  std::ostringstream line;
  line.precision(17);
  for (const auto& row : r.rows) {
    if (row.error) continue;
    line.str("");
    line << row.scenario_id << ',' << scenario::to_string(row.kind) << ',' << row.magnitude << ',' << row.seed << ','
         << row.tip << ',' << row.behavior_divergence << '\n';
    os << line.str();
  }
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

/// Ranks with ties sharing their average rank (1-based).
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

/// Pearson correlation of ranks. Zero when either side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("spearman needs two equal-length series (n >= 2)");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace tip::sweep

#pragma once

// `tip` command-line front end. run_cli is the whole program minus process
// plumbing, so tests can drive it in-process.
//
// Exit codes: 0 success, 2 bad input (flags, files, schema), 3 metric or
// contract failure, 4 sweep finished with failed rows.

#include <algorithm>
#include <cerrno>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tip/tip.hpp"

namespace tip::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInputError = 2, kMetricError = 3, kPartialSweep = 4 };

struct RunConfig {
  std::uint64_t master_seed = 0;
  std::size_t samples = 10000;
  std::string planner = "av1";
  std::string aggregation = "min";
  std::string out_dir = ".";
  std::vector<double> epsilon{0.5};
};

/// Bad command-line values; reported as an input error.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string format(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

/// Prints -0 as 0.
inline double tidy(double v) { return v == 0.0 ? 0.0 : v; }

inline planner::PlannerConfig resolve_planner(const std::string& name, std::ostream& err) {
  if (name == "av1") return planner::av1_preset();
  if (name == "av2") return planner::av2_preset();
  std::vector<std::string> warnings;
  auto c = io::load_planner_config(name, &warnings);
  for (const auto& w : warnings) err << "warning: " << name << ": " << w << '\n';
  return c;
}

inline void check_run_config(const RunConfig& rc) {
  if (rc.samples < 1) throw UsageError("--samples must be >= 1");
  if (rc.epsilon.empty()) throw UsageError("--epsilon needs at least one value");
  for (double e : rc.epsilon)
    if (!(e > 0.0)) throw UsageError("--epsilon values must be > 0");
}

inline metric::TipOptions tip_options(const RunConfig& rc) {
  metric::TipOptions opt;
  try {
    opt.aggregation = metric::Aggregation::parse(rc.aggregation);
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  opt.epsilon = rc.epsilon.front();
  return opt;
}

inline io::ScenarioDocument load_document(const std::string& path, std::ostream& err) {
  auto doc = io::load_scenario_document(path);
  for (const auto& w : doc.warnings) err << "warning: " << path << ": " << w << '\n';
  return doc;
}

inline fs::path ensure_out_dir(const RunConfig& rc) {
  fs::path dir(rc.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + rc.out_dir + "': " + ec.message());
  return dir;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_score(const std::string& gt_path, const std::string& pred_path, const RunConfig& rc,
                     std::ostream& out, std::ostream& err) {
  check_run_config(rc);
  const auto cfg = resolve_planner(rc.planner, err);
  const auto gt = load_document(gt_path, err);
  const auto pred = load_document(pred_path, err);
  const auto opt = tip_options(rc);

  const auto report =
      metric::tip_score(gt.distribution(), pred.distribution(), cfg, estimator::SampleSpec{rc.samples, rc.master_seed}, opt);

  const fs::path dir = ensure_out_dir(rc);
  io::detail::write_file((dir / "report.json").string(), io::to_json(report, gt.scenario.id).dump(2) + "\n");
  io::detail::write_file((dir / "report.csv").string(),
                         std::string(io::kReportCsvHeader) + "\n" + io::report_csv_row(report, gt.scenario.id) + "\n");

  out << format("tip_score %.6f\n", tidy(report.tip_score));
  out << "a_star " << report.a_star_id << '\n';
  if (report.bound)
    out << format("bound epsilon=%g probability=%.6g\n", report.bound->epsilon, report.bound->probability);
  return kOk;
}

struct SweepArgs {
  std::string scenario_dir;
  std::size_t synthetic = 0;
  std::string noise = "location";
  std::vector<double> magnitudes;
  std::size_t seeds = 1;
  std::size_t workers = 0;
};

inline std::vector<scenario::Scenario> sweep_scenarios(const SweepArgs& a, const RunConfig& rc, std::ostream& err) {
  std::vector<scenario::Scenario> out;
  if (a.synthetic > 0) {
    for (std::size_t i = 0; i < a.synthetic; ++i) out.push_back(scenario::synthetic_scenario(rc.master_seed, i));
    return out;
  }
  if (a.scenario_dir.empty()) throw UsageError("sweep needs a scenario directory or --synthetic N");
  if (!fs::is_directory(a.scenario_dir)) throw UsageError("not a directory: '" + a.scenario_dir + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.scenario_dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(load_document(f.string(), err).scenario);
  if (out.empty()) throw UsageError("no scenario files (*.json) in '" + a.scenario_dir + "'");
  return out;
}

inline int cmd_sweep(const SweepArgs& a, const RunConfig& rc, std::ostream& out, std::ostream& err) {
  check_run_config(rc);
  const auto kind = scenario::noise_kind_from_string(a.noise);
  if (!kind) throw UsageError("unknown noise kind '" + a.noise + "'");

  sweep::SweepConfig sc;
  sc.kind = *kind;
  sc.magnitudes = a.magnitudes;
  sc.seeds = a.seeds;
  sc.master_seed = rc.master_seed;
  sc.samples = rc.samples;
  sc.planner = resolve_planner(rc.planner, err);
  sc.options = tip_options(rc);
  sc.workers = a.workers;
  try {
    sc.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }

  const auto scenarios = sweep_scenarios(a, rc, err);
  const auto result = sweep::run_sweep(scenarios, sc);

  const fs::path dir = ensure_out_dir(rc);
  const fs::path csv = dir / "sweep.csv";
  {
    std::ofstream f(csv, std::ios::binary);
    if (!f) throw Error("cannot write '" + csv.string() + "'");
    sweep::write_csv(f, result);
  }

  for (const auto& r : result.rows)
    if (r.error)
      err << "row failed: scenario=" << r.scenario_id << " magnitude=" << r.magnitude << " seed_index=" << r.seed_index
          << ": " << *r.error << '\n';

  const auto means = result.mean_tip_by_magnitude(sc.magnitudes.size());
  out << "magnitude,mean_tip\n";
  for (std::size_t i = 0; i < means.size(); ++i) out << format("%g,%.6f\n", sc.magnitudes[i], tidy(means[i]));
  out << format("spearman %.6f\n", tidy(sweep::spearman(sc.magnitudes, means)));
  out << "rows " << result.rows.size() - result.failures() << "/" << result.rows.size() << " -> " << csv.string()
      << '\n';
  return result.failures() ? kPartialSweep : kOk;
}

inline int cmd_decompose(const std::string& which, std::size_t cells, const RunConfig& rc, std::ostream& out,
                         std::ostream& err) {
  cases::DecompositionCase c = [&] {
    if (which == "figure3") return cases::figure3(cells);
    if (which == "figure8b") return cases::figure8b(cells);
    return io::case_from_json(io::detail::parse_text(io::detail::read_file(which), which));
  }();
  (void)err;
  const auto s = cases::summarize(c);

  const fs::path dir = ensure_out_dir(rc);
  const fs::path csv = dir / ("decompose_" + c.name + ".csv");
  {
    std::ofstream f(csv, std::ios::binary);
    if (!f) throw Error("cannot write '" + csv.string() + "'");
    f.precision(17);
    preference::write_csv(f, s.decomposition);
  }
  out << "case " << c.name << '\n';
  out << format("xi_p %.6f\n", tidy(s.xi_p));
  out << format("xi_q %.6f\n", tidy(s.xi_q));
  out << format("delta_xi %.6f\n", tidy(s.decomposition.delta_xi));
  out << format("pce_fraction %.6f\n", tidy(s.decomposition.pce_energy_fraction));
  out << format("pie_fraction %.6f\n", tidy(s.decomposition.pie_energy_fraction()));
  return kOk;
}

inline int cmd_bound(const std::vector<std::size_t>& ns, double m, double variance, const RunConfig& rc,
                     std::ostream& out) {
  if (ns.empty()) throw UsageError("--n needs at least one value");
  std::vector<estimator::TailBound> rows;
  try {
    for (std::size_t n : ns)
      for (double e : rc.epsilon) rows.push_back(estimator::tail_bound(n, e, m, variance));
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  out << "n,epsilon,m,variance,l_value,branch,probability\n";
  for (const auto& b : rows)
    out << format("%zu,%g,%g,%g,%.6g,%s,%.6g\n", b.n, b.epsilon, b.m, b.variance, b.l_value,
                  b.hoeffding_branch() ? "hoeffding" : "bernstein", b.probability);
  return kOk;
}

inline int cmd_calibrate(const std::vector<double>& speeds, const RunConfig& rc, std::ostream& out, std::ostream& err) {
  std::vector<planner::PlannerConfig> configs{planner::av1_preset(), planner::av2_preset()};
  if (rc.planner != "av1" && rc.planner != "av2") configs.push_back(resolve_planner(rc.planner, err));
  out << "planner,v0,accel_min,jerk_min,stopping_distance\n";
  for (const auto& c : configs)
    for (double v : speeds)
      out << format("%s,%g,%g,%g,%.6f\n", c.name.c_str(), v, c.accel_min, c.jerk_min,
                    planner::stopping_distance(v, c.accel_min, c.jerk_min));
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("TIP_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || v[0] == '-') throw UsageError(std::string("TIP_SEED is not an unsigned integer: ") + v);
  return static_cast<std::uint64_t>(s);
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Planner-centric perception scoring"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig rc;
  app.add_option("--seed", rc.master_seed, "master seed (TIP_SEED overrides)");
  app.add_option("--samples", rc.samples, "state samples per expectation");
  app.add_option("--planner", rc.planner, "planner preset: av1, av2, or a tip-planner/1 JSON file");
  app.add_option("--agg", rc.aggregation, "aggregation: min, mean, pK");
  app.add_option("--epsilon", rc.epsilon, "accuracy level(s) for tail bounds")->delimiter(',');
  app.add_option("--out", rc.out_dir, "output directory");

  std::string gt, pred;
  auto* score = app.add_subcommand("score", "score a perception scenario against ground truth");
  score->add_option("gt", gt, "ground-truth scenario JSON")->required();
  score->add_option("pred", pred, "perceived scenario JSON")->required();

  SweepArgs sa;
  auto* sw = app.add_subcommand("sweep", "score injected noise over a grid of magnitudes");
  sw->add_option("scenario_dir", sa.scenario_dir, "directory of scenario JSON files");
  sw->add_option("--synthetic", sa.synthetic, "use N generated scenarios instead of a directory");
  sw->add_option("--noise", sa.noise, "false_positive, miss_detection, location, yaw, velocity, size");
  sw->add_option("--magnitudes", sa.magnitudes, "noise magnitudes")->delimiter(',')->required();
  sw->add_option("--seeds", sa.seeds, "noise seeds per magnitude");
  sw->add_option("--workers", sa.workers, "worker threads (0 = all cores)");

  std::string which;
  std::size_t cells = cases::kDefaultCells;
  auto* dec = app.add_subcommand("decompose", "split an error into planning-critical and -invariant parts");
  dec->add_option("case", which, "figure3, figure8b, or a tip-case/1 JSON file")->required();
  dec->add_option("--cells", cells, "grid cells for the built-in cases");

  std::vector<std::size_t> ns;
  double m = 1.0, variance = 0.0;
  auto* bd = app.add_subcommand("bound", "tabulate the estimator tail bound");
  bd->add_option("--n", ns, "sample sizes")->delimiter(',')->required();
  bd->add_option("--m", m, "utility bound M");
  bd->add_option("--variance", variance, "utility variance");

  std::vector<double> speeds{10.0, 14.0, 20.0};
  auto* cal = app.add_subcommand("calibrate", "stopping distances of the planner presets");
  cal->add_option("--speeds", speeds, "initial speeds, m/s")->delimiter(',');

  std::vector<std::string> argv_store{"tip"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (auto s = env_seed()) rc.master_seed = *s;
    if (*score) return cmd_score(gt, pred, rc, out, err);
    if (*sw) return cmd_sweep(sa, rc, out, err);
    if (*dec) return cmd_decompose(which, cells, rc, out, err);
    if (*bd) return cmd_bound(ns, m, variance, rc, out);
    if (*cal) return cmd_calibrate(speeds, rc, out, err);
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kMetricError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kMetricError;
  }
  return kInputError;
}

}  // namespace tip::cli

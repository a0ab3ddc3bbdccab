#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tip_commands.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kData = TIP_DATA_DIR;
const std::string kGt = kData + "/scenarios/braking_obstacle_30m_gt.json";
const std::string kMissed = kData + "/scenarios/braking_obstacle_30m_missed.json";

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("tip_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = tip::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

/// Value following "key " on its own output line.
double field(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + " ", 0) == 0) return std::stod(line.substr(key.size() + 1));
  throw std::runtime_error("no line '" + key + "' in:\n" + out);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

class SeedEnv {
 public:
  explicit SeedEnv(const char* value) { ::setenv("TIP_SEED", value, 1); }
  ~SeedEnv() { ::unsetenv("TIP_SEED"); }
};

}  // namespace

TEST(CliScore, IdenticalFilesScoreZero) {
  TempDir t;
  const auto r = run({"--samples", "50", "--out", t.path.string(), "score", kGt, kGt});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("tip_score 0.000000\n"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(t / "report.json"));
  const auto csv = lines(slurp(t / "report.csv"));
  ASSERT_EQ(csv.size(), 2u);
  EXPECT_EQ(csv[0], "scenario_id,tip,a_star,n,seed,bound_prob");
  EXPECT_EQ(csv[1].rfind("braking-30,0,", 0), 0u) << csv[1];
}

TEST(CliScore, MissedObstacleIsNegativeForBothPresets) {
  for (const char* preset : {"av1", "av2"}) {
    TempDir t;
    const auto r = run({"--samples", "100", "--seed", "1", "--planner", preset, "--out", t.path.string(), "score",
                        kGt, kMissed});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(field(r.out, "tip_score"), 0.0) << preset;
    const auto report = nlohmann::json::parse(slurp(t / "report.json"));
    EXPECT_EQ(report["schema"], "tip-report/1");
    EXPECT_EQ(report["n"], 100);
  }
}

TEST(CliScore, PlannerFromFile) {
  TempDir t;
  const auto a = run({"--samples", "10", "--planner", kData + "/presets/av2.json", "--out", t.path.string(), "score",
                      kGt, kMissed});
  const auto b = run({"--samples", "10", "--planner", "av2", "--out", t.path.string(), "score", kGt, kMissed});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(run({"--planner", "av3", "--out", t.path.string(), "score", kGt, kGt}).code, 2);
}

TEST(CliScore, MalformedInputWritesNoReport) {
  TempDir t;
  write(t / "bad.json", "{\"schema\": \"tip-scenario/1\", \"ego\": ");
  auto r = run({"--out", t.path.string(), "score", kGt, t / "bad.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_FALSE(fs::exists(t / "report.json"));
  EXPECT_FALSE(fs::exists(t / "report.csv"));

  auto doc = nlohmann::json::parse(slurp(kGt));
  doc["objects"][0].erase("size");
  write(t / "nosize.json", doc.dump());
  r = run({"--out", t.path.string(), "score", kGt, t / "nosize.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("objects[0].size"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(t / "report.json"));

  EXPECT_EQ(run({"--out", t.path.string(), "score", kGt, t / "absent.json"}).code, 2);
}

TEST(CliScore, UnknownFieldsWarn) {
  TempDir t;
  auto doc = nlohmann::json::parse(slurp(kGt));
  doc["confidence"] = 0.9;
  write(t / "extra.json", doc.dump());
  const auto r = run({"--samples", "5", "--out", t.path.string(), "score", kGt, t / "extra.json"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning:"), std::string::npos);
  EXPECT_NE(r.err.find("confidence"), std::string::npos);
}

TEST(CliScore, SeedFromEnvironmentOverridesFlag) {
  TempDir t;
  {
    SeedEnv env("42");
    ASSERT_EQ(run({"--seed", "7", "--samples", "5", "--out", t.path.string(), "score", kGt, kMissed}).code, 0);
  }
  EXPECT_EQ(nlohmann::json::parse(slurp(t / "report.json"))["seed"], 42);
  SeedEnv bad("forty-two");
  EXPECT_EQ(run({"--out", t.path.string(), "score", kGt, kMissed}).code, 2);
}

TEST(CliScore, BadGlobalOptions) {
  TempDir t;
  EXPECT_EQ(run({"--frobnicate", "score", kGt, kGt}).code, 2);
  EXPECT_EQ(run({"--samples", "0", "--out", t.path.string(), "score", kGt, kGt}).code, 2);
  EXPECT_EQ(run({"--agg", "max", "--out", t.path.string(), "score", kGt, kGt}).code, 2);
  EXPECT_EQ(run({"--epsilon", "-1", "--out", t.path.string(), "score", kGt, kGt}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliSweep, ZeroMagnitudeScoresZero) {
  TempDir t;
  const auto r = run({"--out", t.path.string(), "sweep", kData + "/scenarios", "--noise", "location", "--magnitudes",
                      "0,0.5", "--seeds", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = lines(slurp(t / "sweep.csv"));
  ASSERT_EQ(csv.size(), 1u + 2 * 2 * 2);
  EXPECT_EQ(csv[0], "scenario_id,noise_kind,magnitude,seed,tip,behavior_divergence");
  std::size_t zero_rows = 0;
  for (std::size_t i = 1; i < csv.size(); ++i) {
    std::istringstream in(csv[i]);
    std::vector<std::string> cols;
    for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 6u);
    EXPECT_EQ(cols[1], "location");
    if (std::stod(cols[2]) == 0.0) {
      ++zero_rows;
      EXPECT_EQ(std::stod(cols[4]), 0.0) << csv[i];
      EXPECT_EQ(std::stod(cols[5]), 0.0) << csv[i];
    }
    EXPECT_LE(std::stod(cols[4]), 0.0);
  }
  EXPECT_EQ(zero_rows, 4u);
  EXPECT_NE(r.out.find("magnitude,mean_tip\n0,0.000000\n"), std::string::npos) << r.out;
}

TEST(CliSweep, ByteIdenticalAcrossRunsAndWorkerCounts) {
  TempDir a, b;
  const std::vector<std::string> common{"--seed", "3", "sweep", "--synthetic", "6", "--noise", "false_positive",
                                        "--magnitudes", "0,2,4", "--seeds", "2"};
  auto with = [&](const TempDir& t, const char* workers) {
    std::vector<std::string> args{"--out", t.path.string()};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), {"--workers", workers});
    return run(args);
  };
  const auto r1 = with(a, "1");
  const auto r2 = with(b, "4");
  ASSERT_EQ(r1.code, 0) << r1.err;
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
  const auto again = with(a, "3");
  EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
  EXPECT_EQ(r1.out.substr(0, r1.out.find("rows")), again.out.substr(0, again.out.find("rows")));
}

TEST(CliSweep, PartialFailureIsLoggedAndFlagged) {
  TempDir t;
  // Location noise this large overflows some coordinates to infinity.
  const auto r = run({"--out", t.path.string(), "sweep", kData + "/scenarios", "--noise", "location", "--magnitudes",
                      "0,1e308", "--seeds", "8"});
  EXPECT_EQ(r.code, 4) << r.out << r.err;
  EXPECT_NE(r.err.find("row failed"), std::string::npos);
  const auto csv = lines(slurp(t / "sweep.csv"));
  EXPECT_GE(csv.size(), 1u + 2 * 8);  // every magnitude-0 row survives
  EXPECT_LT(csv.size(), 1u + 2 * 2 * 8);
}

TEST(CliSweep, InvalidArguments) {
  TempDir t;
  const std::string out = t.path.string();
  EXPECT_EQ(run({"--out", out, "sweep", "--synthetic", "2", "--noise", "blur", "--magnitudes", "0,1"}).code, 2);
  EXPECT_EQ(run({"--out", out, "sweep", "--synthetic", "2", "--magnitudes", "0"}).code, 2);
  EXPECT_EQ(run({"--out", out, "sweep", "--synthetic", "2", "--noise", "miss_detection", "--magnitudes", "0,1.5"}).code,
            2);
  EXPECT_EQ(run({"--out", out, "sweep", "--magnitudes", "0,1"}).code, 2);
  EXPECT_EQ(run({"--out", out, "sweep", out + "/nowhere", "--magnitudes", "0,1"}).code, 2);
  EXPECT_EQ(run({"--out", out, "sweep", "--synthetic", "2"}).code, 2);
}

TEST(CliDecompose, BuiltInCases) {
  TempDir t;
  auto r = run({"--out", t.path.string(), "decompose", "figure3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(field(r.out, "xi_p"), 5.0, 1e-3);
  EXPECT_NEAR(field(r.out, "xi_q"), -5.0, 1e-3);
  EXPECT_NEAR(field(r.out, "delta_xi"), -10.0, 1e-3);
  EXPECT_NEAR(field(r.out, "pce_fraction"), 1.0 / 3.0, 1e-3);
  EXPECT_NEAR(field(r.out, "pie_fraction"), 2.0 / 3.0, 1e-3);
  EXPECT_TRUE(fs::exists(t / "decompose_figure3.csv"));

  r = run({"--out", t.path.string(), "decompose", "figure8b", "--cells", "600"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(field(r.out, "xi_p"), 5.0 / 3.0, 1e-2);
  EXPECT_NEAR(field(r.out, "xi_q"), 5.0, 1e-2);
  EXPECT_NEAR(field(r.out, "delta_xi"), 10.0 / 3.0, 1e-2);
  EXPECT_EQ(lines(slurp(t / "decompose_figure8b.csv")).size(), 1u + 600 + 1);
}

TEST(CliDecompose, CustomCases) {
  TempDir t;
  nlohmann::json c = {
      {"schema", "tip-case/1"},
      {"name", "same"},
      {"domain", {{"lo", -3}, {"hi", 3}, {"cells", 600}}},
      {"p", {{"kind", "truncated_gaussian"}, {"mean", 0}, {"sd", 1}, {"lo", -3}, {"hi", 3}}},
      {"q", {{"kind", "truncated_gaussian"}, {"mean", 0}, {"sd", 1}, {"lo", -3}, {"hi", 3}}},
      {"u_star", {{"kind", "piecewise_constant"}, {"breakpoints", {-1, 1}}, {"levels", {-10}}, {"outside", 0}}},
      {"u_alt", {{"kind", "constant"}, {"value", -5}}}};
  write(t / "same.json", c.dump());
  auto r = run({"--out", t.path.string(), "decompose", t / "same.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(field(r.out, "delta_xi"), 0.0);
  EXPECT_EQ(field(r.out, "pce_fraction"), 0.0);
  EXPECT_EQ(field(r.out, "pie_fraction"), 0.0);

  c["name"] = "tied";
  c["u_star"] = c["u_alt"];
  write(t / "tied.json", c.dump());
  r = run({"--out", t.path.string(), "decompose", t / "tied.json"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error:"), std::string::npos);

  c["p"]["kind"] = "cauchy";
  write(t / "cauchy.json", c.dump());
  EXPECT_EQ(run({"--out", t.path.string(), "decompose", t / "cauchy.json"}).code, 2);
}

TEST(CliBound, Table) {
  const auto r = run({"bound", "--n", "100,1000", "--m", "10", "--variance", "4", "--epsilon", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "n,epsilon,m,variance,l_value,branch,probability");
  EXPECT_EQ(l[1].rfind("100,1,10,4,7.33333,", 0), 0u) << l[1];
  EXPECT_NEAR(std::stod(l[1].substr(l[1].rfind(',') + 1)), 2.0 * std::exp(-75.0 / 11.0), 1e-8);
  EXPECT_EQ(run({"bound", "--n", "0"}).code, 2);
  EXPECT_EQ(run({"bound", "--n", "10", "--m", "-1"}).code, 2);
}

TEST(CliCalibrate, PresetStoppingDistances) {
  const auto r = run({"calibrate", "--speeds", "14"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[1], "av1,14,-4,-4,31.333333");
  EXPECT_EQ(l[2], "av2,14,-6,-12,19.770833");
}

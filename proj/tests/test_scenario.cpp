#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "tip/estimator.hpp"
#include "tip/io.hpp"
#include "tip/scenario.hpp"

using namespace tip;
using namespace tip::scenario;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("tip-scenario-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& f) const { return path_ / f; }

 private:
  fs::path path_;
};

Scenario with_cone() {
  Scenario s = braking_study_scenario(30.0);
  WorldObject cone;
  cone.id = "cone1";
  cone.category = Category::kCone;
  cone.center = {12.0, 2.4};
  cone.size = {0.4, 0.4};
  s.objects.push_back(cone);
  return s;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Validate, CatchesBrokenInvariants) {
  Scenario s = braking_study_scenario(30.0);
  EXPECT_NO_THROW(validate(s));
  auto expect_field = [](Scenario bad, const std::string& field) {
    try {
      validate(bad);
      FAIL() << "expected a schema error at " << field;
    } catch (const SchemaError& e) {
      EXPECT_EQ(e.field(), field);
    }
  };
  Scenario dup = s;
  dup.objects.push_back(dup.objects.front());
  expect_field(dup, "objects[2].id");
  Scenario neg = s;
  neg.objects[0].speed = -1.0;
  expect_field(neg, "objects[0].speed");
  Scenario tiny = s;
  tiny.objects[1].size.width = 0.0;
  expect_field(tiny, "objects[1].size.width");
  Scenario ratio = s;
  ratio.horizon_s = 3.05;
  expect_field(ratio, "horizon_s");
  Scenario line = s;
  line.corridor.centerline = {{0, 0}};
  expect_field(line, "corridor.centerline");
}

TEST(Inject, MissDetectionRates) {
  const Scenario s = synthetic_scenario(1, 0);
  EXPECT_EQ(inject(s, {NoiseKind::kMissDetection, 0.0, 9}), s);
  EXPECT_TRUE(inject(s, {NoiseKind::kMissDetection, 1.0, 9}).objects.empty());
  EXPECT_THROW(inject(s, {NoiseKind::kMissDetection, 1.5, 9}), ContractError);
}

TEST(Inject, FalsePositivesLandInTheEgoBox) {
  Scenario s = synthetic_scenario(2, 3);
  s.ego.heading = 0.4;
  const auto out = inject(s, {NoiseKind::kFalsePositive, 6.0, 1234});
  ASSERT_EQ(out.objects.size(), s.objects.size() + 6);
  const geometry::Vec2 f = geometry::heading_vector(s.ego.heading);
  const geometry::Vec2 l{-f.y, f.x};
  for (std::size_t i = s.objects.size(); i < out.objects.size(); ++i) {
    const auto rel = out.objects[i].center - s.ego.center;
    EXPECT_LE(std::abs(geometry::dot(rel, f)), 35.0);
    EXPECT_LE(std::abs(geometry::dot(rel, l)), 15.0);
    EXPECT_EQ(out.objects[i].category, Category::kVehicle);
    EXPECT_GE(out.objects[i].speed, 0.0);
  }
  EXPECT_EQ(out, inject(s, {NoiseKind::kFalsePositive, 6.0, 1234}));
  EXPECT_NO_THROW(validate(out));
  EXPECT_THROW(inject(s, {NoiseKind::kFalsePositive, 2.5, 1}), ContractError);
}

TEST(Inject, ContinuousKindsTouchOnlyTheirField) {
  const Scenario s = synthetic_scenario(3, 1);
  for (NoiseKind k : {NoiseKind::kLocation, NoiseKind::kYaw, NoiseKind::kVelocity, NoiseKind::kSize}) {
    const auto out = inject(s, {k, 0.5, 77});
    ASSERT_EQ(out.objects.size(), s.objects.size());
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& a = s.objects[i];
      const auto& b = out.objects[i];
      EXPECT_EQ(a.center == b.center, k != NoiseKind::kLocation) << to_string(k);
      EXPECT_EQ(a.heading == b.heading, k != NoiseKind::kYaw) << to_string(k);
      if (k != NoiseKind::kVelocity) {
        EXPECT_EQ(a.speed, b.speed);
      }
      EXPECT_EQ(a.size == b.size, k != NoiseKind::kSize) << to_string(k);
      EXPECT_GE(b.size.length, kMinObjectExtent);
      EXPECT_GE(b.size.width, kMinObjectExtent);
    }
    EXPECT_EQ(inject(s, {k, 0.0, 77}), s);
    EXPECT_THROW(inject(s, {k, -0.1, 77}), ContractError);
  }
  // Large size noise never drops below the floor.
  const auto big = inject(s, {NoiseKind::kSize, 50.0, 3});
  for (const auto& o : big.objects) EXPECT_GE(std::min(o.size.length, o.size.width), kMinObjectExtent);
}

TEST(Inject, Deterministic) {
  const Scenario s = synthetic_scenario(4, 7);
  for (NoiseKind k : kAllNoiseKinds) {
    const double m = k == NoiseKind::kMissDetection ? 0.3 : (k == NoiseKind::kFalsePositive ? 3.0 : 0.7);
    EXPECT_EQ(inject(s, {k, m, 5}), inject(s, {k, m, 5})) << to_string(k);
  }
  EXPECT_NE(inject(s, {NoiseKind::kLocation, 0.5, 5}), inject(s, {NoiseKind::kLocation, 0.5, 6}));
}

TEST(Inject, CompositionCountsInExpectation) {
  const Scenario s = synthetic_scenario(5, 2);
  const double rate = 0.3;
  const std::size_t count = 4;
  std::vector<double> sizes;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto a = inject(s, {NoiseKind::kMissDetection, rate, 2 * seed});
    const auto b = inject(a, {NoiseKind::kFalsePositive, static_cast<double>(count), 2 * seed + 1});
    sizes.push_back(static_cast<double>(b.objects.size()));
  }
  const auto m = estimator::moments(sizes);
  const double expected = static_cast<double>(s.objects.size()) * (1.0 - rate) + static_cast<double>(count);
  EXPECT_LT(std::abs(m.mean - expected), 3.0 * m.standard_error()) << m.mean << " vs " << expected;
}

TEST(Distribution, PointMassWithoutNoise) {
  const auto d = as_distribution(braking_study_scenario(20.0));
  EXPECT_TRUE(d.is_point_mass());
  for (const auto& st : estimator::sample_states(d, {10, 4})) EXPECT_EQ(st, d.nominal());
}

TEST(Distribution, NoiseIsIsolatedToItsObject) {
  const Scenario s = with_cone();
  const auto d = as_distribution(s, {{"cone1", {0.5, 0.0, 0.0, 0.0}}});
  EXPECT_FALSE(d.is_point_mass());
  bool moved = false;
  for (const auto& st : estimator::sample_states(d, {200, 8})) {
    for (const auto& o : st.objects) {
      const auto* nominal = s.find(o.id);
      if (o.id == "cone1") {
        moved |= !(o.center == nominal->center);
        EXPECT_EQ(o.heading, nominal->heading);
        EXPECT_EQ(o.size, nominal->size);
        EXPECT_EQ(o.speed, nominal->speed);
      } else {
        EXPECT_EQ(o, *nominal);
      }
    }
    EXPECT_EQ(st.ego, s.ego);
  }
  EXPECT_TRUE(moved);
  EXPECT_THROW(as_distribution(s, {{"nobody", {0.5, 0, 0, 0}}}), ContractError);
  EXPECT_THROW(as_distribution(s, {{"cone1", {-0.5, 0, 0, 0}}}), ContractError);
}

TEST(BrakingStudy, Geometry) {
  const Scenario s = braking_study_scenario(30.0);
  const auto* ob = s.find("obstacle");
  ASSERT_NE(ob, nullptr);
  const double ego_front = s.ego.center.x + 0.5 * s.ego.size.length;
  EXPECT_DOUBLE_EQ(ob->center.x - 0.5 * ob->size.length - ego_front, 30.0);
  const Scenario behind = braking_study_scenario(-20.0);
  const auto* bo = behind.find("obstacle");
  const double ego_rear = behind.ego.center.x - 0.5 * behind.ego.size.length;
  EXPECT_DOUBLE_EQ(ego_rear - (bo->center.x + 0.5 * bo->size.length), 20.0);
  EXPECT_EQ(braking_study_scenario(std::nullopt).objects.size(), 1u);
}

TEST(Synthetic, ValidAndReproducible) {
  for (std::size_t i = 0; i < 50; ++i) {
    const Scenario s = synthetic_scenario(11, i);
    EXPECT_NO_THROW(validate(s));
    EXPECT_GE(s.objects.size(), 3u);
    EXPECT_EQ(s, synthetic_scenario(11, i));
  }
  EXPECT_NE(synthetic_scenario(11, 0), synthetic_scenario(12, 0));
}

// ---------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------

TEST(ScenarioJson, RoundTripIsIdentity) {
  TempDir dir;
  for (const Scenario& s : {braking_study_scenario(30.0), synthetic_scenario(9, 4), with_cone()}) {
    io::save_scenario(s, (dir / "s.json").string());
    EXPECT_EQ(io::load_scenario((dir / "s.json").string()), s);
  }
  const UncertaintyMap u{{"cone1", {0.5, 0.1, 0.2, 0.05}}};
  io::save_scenario(with_cone(), (dir / "u.json").string(), u);
  const auto doc = io::load_scenario_document((dir / "u.json").string());
  EXPECT_EQ(doc.uncertainty, u);
  EXPECT_TRUE(doc.warnings.empty());
  EXPECT_FALSE(doc.distribution().is_point_mass());
}

TEST(ScenarioJson, MissingHeadingNamesTheField) {
  auto j = io::to_json(braking_study_scenario(30.0));
  j["objects"][1].erase("heading");
  try {
    io::scenario_from_json(j);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "objects[1].heading");
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}

TEST(ScenarioJson, UnknownFieldsWarn) {
  auto j = io::to_json(braking_study_scenario(30.0));
  j["legacy_note"] = "from v0";
  j["objects"][0]["color"] = "red";
  const auto doc = io::scenario_from_json(j);
  ASSERT_EQ(doc.warnings.size(), 2u);
  EXPECT_NE(doc.warnings[0].find("objects[0].color"), std::string::npos);
  EXPECT_NE(doc.warnings[1].find("legacy_note"), std::string::npos);
  EXPECT_EQ(doc.scenario, braking_study_scenario(30.0));
}

TEST(ScenarioJson, SchemaViolations) {
  const auto good = io::to_json(braking_study_scenario(30.0));
  auto expect_field = [](const io::json& j, const std::string& field) {
    try {
      io::scenario_from_json(j);
      FAIL() << "expected error at " << field;
    } catch (const SchemaError& e) {
      EXPECT_EQ(e.field(), field) << e.what();
    }
  };
  auto j = good;
  j["schema"] = "tip-scenario/2";
  expect_field(j, "schema");
  j = good;
  j["objects"][0]["category"] = "truck";
  expect_field(j, "objects[0].category");
  j = good;
  j["objects"][0]["center"] = {1.0};
  expect_field(j, "objects[0].center");
  j = good;
  j["ego"]["speed"] = "fast";
  expect_field(j, "ego.speed");
  j = good;
  j["objects"][0]["heading"] = 4.0;
  expect_field(j, "objects[0].heading");
  j = good;
  j["objects"][0]["uncertainty"] = {{"location", -1.0}};
  expect_field(j, "objects[0].uncertainty");
  j = good;
  j.erase("dt_s");
  EXPECT_EQ(io::scenario_from_json(j).scenario.dt_s, 0.1);
}

TEST(ScenarioJson, UnreadableInput) {
  TempDir dir;
  write(dir / "bad.json", "{ not json");
  EXPECT_THROW(io::load_scenario((dir / "bad.json").string()), SchemaError);
  EXPECT_THROW(io::load_scenario((dir / "absent.json").string()), SchemaError);
}

TEST(ScenarioJson, ShippedScenariosLoad) {
  const auto gt = io::load_scenario(std::string(TIP_DATA_DIR) + "/scenarios/braking_obstacle_30m_gt.json");
  Scenario expected = braking_study_scenario(30.0);
  expected.id = gt.id;
  EXPECT_EQ(gt, expected);
  const auto missed = io::load_scenario(std::string(TIP_DATA_DIR) + "/scenarios/braking_obstacle_30m_missed.json");
  EXPECT_EQ(missed.objects.size(), 1u);
  EXPECT_EQ(missed.objects[0].id, "parked");
}

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fujita/experiments.hpp"

using namespace fujita;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fujita_test_" + name);
  fs::remove_all(p);
  return p;
}

RunRecord sample_record() {
  RunRecord rec;
  rec.spec.name = Scenario::ExamOsc;
  rec.spec.params = {3, 5.5};
  rec.spec.stage_count = 2;
  rec.spec.overrides.r_max = 123.25;
  rec.spec.overrides.nodes = 777;
  rec.verdicts = {{"a claim", "x > 1", "x = 1.5", VerdictStatus::Consistent},
                  {"another", "y < 1", "y = 2", VerdictStatus::Undetermined}};
  rec.stages = {{1, {{"R", 8.7157812159500001}, {"T", 1.0 / 3.0}, {"tiny", 1e-300}}, "first"}};
  rec.table = regime_report({3, 5.5});
  auto g = make_grid(RadialGrid::uniform(2.0, 17));
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-0.1 * i) / 3.0;
  rec.profiles = {{"w", std::vector<double>(g->nodes().begin(), g->nodes().end()), v}};
  ThresholdBracket b;
  b.lambda_lo = 0.1;
  b.lambda_hi = 0.1 + 1e-12;
  b.converged = true;
  Probe pr{0.1, {}, 40.0};
  pr.fate.tag = FateTag::GlobalDecay;
  pr.fate.evidence = "decays";
  b.probes = {pr};
  b.warnings = {"w1"};
  rec.brackets = {{"stage 1", b}};
  rec.notes = {"note"};
  rec.wall_seconds = 1.5;
  rec.steps = 42;
  return rec;
}

}  // namespace

TEST(Experiments, ScenarioNames) {
  for (auto s : all_scenarios()) EXPECT_EQ(scenario_from_string(to_string(s)), s);
  EXPECT_EQ(all_scenarios().size(), 8u);
  EXPECT_EQ(to_string(Scenario::ThmWeakDichotomy), "thm_weak_dichotomy");
  EXPECT_THROW(scenario_from_string("exam_nothing"), InvalidArgument);
}

TEST(Experiments, PreconditionsRaiseRegimeMismatch) {
  EXPECT_THROW(check_precondition(Scenario::ExamConv, {3, 5.5}), RegimeMismatch);
  EXPECT_THROW(check_precondition(Scenario::ExamGrowup, {3, 5.0}), RegimeMismatch);
  EXPECT_THROW(check_precondition(Scenario::ExamOsc, {3, 2.0}), RegimeMismatch);
  EXPECT_THROW(check_precondition(Scenario::PropGnw, {11, 8.0}), RegimeMismatch);
  EXPECT_THROW(check_precondition(Scenario::ThmWeakDichotomy, {3, 1.5}), RegimeMismatch);
  EXPECT_NO_THROW(check_precondition(Scenario::ExamGrowup, {11, 8.0}));
  EXPECT_NO_THROW(check_precondition(Scenario::ExamOsc, {3, 5.5}));
  EXPECT_NO_THROW(check_precondition(Scenario::RegimeReport, {3, 1.5}));
  ExperimentSpec spec;
  spec.name = Scenario::ExamConv;
  spec.params = {11, 8.0};
  EXPECT_THROW(run_experiment(spec), RegimeMismatch);
}

TEST(Experiments, RegimeReportColumns) {
  auto cell = [](const std::vector<TableRow>& t, const std::string& b) {
    for (const auto& r : t)
      if (r.behavior == b) return r.cell;
    return std::string("missing");
  };
  const auto sub = regime_report({3, 2.0});
  EXPECT_EQ(sub.size(), 6u);
  EXPECT_EQ(cell(sub, "Decay to zero"), "YES");
  EXPECT_EQ(cell(sub, "Blow-up"), "NO");
  const auto sup = regime_report({11, 8.0});
  EXPECT_EQ(cell(sup, "Grow-up"), "YES");
  EXPECT_EQ(cell(sup, "Steady states"), "YES/NO");
  const auto crit = regime_report({3, 5.0});
  EXPECT_EQ(cell(crit, "Steady states"), "NO/YES");
  for (const auto& r : regime_report({3, 1.5})) EXPECT_NE(r.cell.find("inadmissible"), std::string::npos);
  bool probed = false;
  for (const auto& r : sup) probed |= r.probed_by.find("exam_growup") != std::string::npos;
  EXPECT_TRUE(probed);
}

TEST(Experiments, RegimeReportRun) {
  ExperimentSpec spec;
  spec.params = {11, 8.0};
  const auto rec = run_experiment(spec);
  EXPECT_EQ(rec.table, regime_report({11, 8.0}));
  EXPECT_EQ(rec.overall(), VerdictStatus::Consistent);
}

TEST(Experiments, OverallAndExitCodes) {
  RunRecord rec;
  EXPECT_EQ(rec.overall(), VerdictStatus::Consistent);
  rec.verdicts.push_back({"", "", "", VerdictStatus::Undetermined});
  EXPECT_EQ(rec.overall(), VerdictStatus::Undetermined);
  rec.verdicts.push_back({"", "", "", VerdictStatus::Inconsistent});
  EXPECT_EQ(rec.overall(), VerdictStatus::Inconsistent);
  EXPECT_EQ(exit_code(VerdictStatus::Consistent), 0);
  EXPECT_EQ(exit_code(VerdictStatus::Inconsistent), 2);
  EXPECT_EQ(exit_code(VerdictStatus::Undetermined), 3);
  for (auto v : {VerdictStatus::Consistent, VerdictStatus::Inconsistent, VerdictStatus::Undetermined})
    EXPECT_EQ(verdict_status_from_string(to_string(v)), v);
}

TEST(Experiments, PersistLoadRoundTrip) {
  const auto dir = scratch("roundtrip");
  const auto rec = sample_record();
  const auto path = persist(rec, dir.string());
  EXPECT_TRUE(fs::exists(dir / "profiles" / "0000.csv"));
  EXPECT_TRUE(fs::exists(dir / "brackets" / "0000.json"));
  EXPECT_EQ(load(dir.string()), rec);
  EXPECT_EQ(load(path), rec);
  fs::remove_all(dir);
}

TEST(Experiments, NewerSchemaIsRejected) {
  const auto dir = scratch("schema");
  persist(sample_record(), dir.string());
  const auto file = dir / "run.json";
  auto j = Json::parse(std::ifstream(file));
  j["schema_version"] = kRecordSchemaVersion + 1;
  std::ofstream(file) << j.dump();
  EXPECT_THROW(load(dir.string()), SchemaError);
  std::ofstream(file) << "{ not json";
  EXPECT_THROW(load(dir.string()), SchemaError);
  fs::remove_all(dir);
}

TEST(Experiments, MissingArtifactNamesThePath) {
  const auto dir = scratch("missing");
  persist(sample_record(), dir.string());
  const auto csv = dir / "profiles" / "0000.csv";
  fs::remove(csv);
  try {
    load(dir.string());
    FAIL() << "expected MissingArtifact";
  } catch (const MissingArtifact& e) {
    EXPECT_EQ(fs::path(e.path()), csv);
  }
  EXPECT_THROW(load((dir / "nowhere").string()), MissingArtifact);
  fs::remove_all(dir);
}

TEST(Experiments, SpecJsonRoundTrip) {
  ExperimentSpec s;
  s.name = Scenario::ExamGrowup;
  s.params = {11, 8.0};
  s.overrides.t_max = 1e4;
  s.overrides.tol = 1e-3;
  s.m1 = 0.25;
  EXPECT_EQ(spec_from_json(to_json(s)), s);
}

TEST(Experiments, ScenarioIsDeterministic) {
  ExperimentSpec spec;
  spec.name = Scenario::SelfsimThreshold;
  spec.params = {3, 5.0};
  auto a = run_experiment(spec);
  auto b = run_experiment(spec);
  a.wall_seconds = b.wall_seconds = 0.0;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.overall(), VerdictStatus::Consistent);
}

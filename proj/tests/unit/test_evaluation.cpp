#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "gazequiz/error.hpp"
#include "gazequiz/evaluation.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/simulation.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace gazequiz;

namespace {

oracle::V3 arr(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

/// Angle at the scene camera between the board hit of the gaze ray and the target.
double oracle_reference_error(const Vec3& eye, const Vec3& dir, const Vec3& target, const EyeTrackerModel& model) {
  const oracle::V3 hit = oracle::hit_board(arr(eye), arr(dir));
  const oracle::V3 cam = oracle::add(arr(eye), arr(model.camera_offset_mm));
  return oracle::angle_deg(oracle::sub(hit, cam), oracle::sub(arr(target), cam));
}

EvaluatedSample evaluated(const std::string& id, double err, std::optional<double> est = {}) {
  EvaluatedSample s;
  s.sample_id = id;
  s.participant_id = "p" + id.substr(0, 1);
  s.error_deg = err;
  s.estimator_error_deg = est;
  return s;
}

}  // namespace

TEST(Reference, GazeOnTargetIsZero) {
  const BoardLayout board = BoardLayout::gojuon();
  EyeTrackerModel model;
  Rng rng(1);
  const Vec3 eye(15, -10, 620);
  for (const auto& cell : board.cells()) {
    const Vec3 t = letter_position(board, cell.id);
    const auto r = synthesize_eval_record("s", "p", eye, t - eye, model, rng);
    const auto m = measure_reference(r, t);
    EXPECT_LT(m.error_deg, 1e-9) << cell.id;
    EXPECT_NEAR(m.gaze_board_mm.x(), t.x(), 1e-7);
    EXPECT_LT((m.camera_origin_board_mm - (eye + model.camera_offset_mm)).norm(), 1e-6);
  }
}

TEST(Reference, ConstructedOffsetGivesKnownAngle) {
  EyeTrackerModel model;
  const Vec3 cam(0, 0, 600);
  const Vec3 eye = cam - model.camera_offset_mm;
  const double angle = 2.69;
  const Vec3 gaze_point(600.0 * std::tan(oracle::rad(angle)), 0, 0);
  Rng rng(2);
  const auto r = synthesize_eval_record("s", "p", eye, gaze_point - eye, model, rng);
  EXPECT_NEAR(reference_error(r, Vec3::Zero()), angle, 1e-9);
}

TEST(Reference, MatchesThreeDimensionalOracle) {
  EyeTrackerModel model;
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Vec3 eye(rng.uniform(-100, 100), rng.uniform(-80, 80), rng.uniform(450, 800));
    const Vec3 target(rng.uniform(-270, 270), rng.uniform(-120, 120), 0);
    const Vec3 aim = target + Vec3(rng.normal() * 30, rng.normal() * 30, 0) - eye;
    const auto r = synthesize_eval_record("s", "p", eye, aim, model, rng);
    EXPECT_NEAR(reference_error(r, target), oracle_reference_error(eye, aim, target, model), 1e-6) << i;
  }
}

TEST(Reference, OffsetCorrectionIsApplied) {
  EyeTrackerModel model;
  Rng rng(4);
  const Vec3 eye(0, 20, 600);
  const Vec3 t(60, 0, 0);
  auto r = synthesize_eval_record("s", "p", eye, Vec3(90, 0, 0) - eye, model, rng);
  const double off = reference_error(r, t);
  const auto good = synthesize_eval_record("s", "p", eye, t - eye, model, rng);
  r.gaze_offset_px = good.gaze_px - r.gaze_px;
  EXPECT_GT(off, 2.0);
  EXPECT_LT(reference_error(r, t), 1e-9);
}

TEST(Reference, TooFewMarkers) {
  EyeTrackerModel model;
  model.markers_mm.resize(3);
  Rng rng(5);
  const auto r = synthesize_eval_record("s", "p", Vec3(0, 0, 600), Vec3(0, 0, -1), model, rng);
  try {
    measure_reference(r, Vec3::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(EvalRecords, JsonlRoundTrip) {
  EyeTrackerModel model;
  Rng rng(6);
  std::vector<EvalRecord> recs;
  for (int i = 0; i < 5; ++i) {
    recs.push_back(synthesize_eval_record("s" + std::to_string(i), "p", Vec3(0, 0, 600), Vec3(0.1 * i, 0, -1), model, rng));
  }
  recs[2].degraded = true;
  recs[3].gaze_offset_px = Vec2(1.5, -2);
  std::stringstream buf;
  write_eval_records(buf, recs);
  const auto back = read_eval_records(buf);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(eval_record_to_json(back[i]), eval_record_to_json(recs[i]));

  std::stringstream bad(eval_record_to_json(recs[0]).dump() + "\n\n{\"sample_id\":1}\n");
  try {
    read_eval_records(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(EvaluateCondition, JoinsBySampleIdAndCountsGaps) {
  const BoardLayout board = BoardLayout::gojuon();
  auto cond = synthesize_condition(board, Mode::gamified, 30, 3, 2.0, 7);
  ASSERT_EQ(cond.samples.size(), 30u);
  cond.records[0].degraded = true;
  cond.records.pop_back();
  const auto ev = evaluate_condition(cond.samples, cond.records, board, "gamified");
  EXPECT_EQ(ev.samples.size(), 28u);
  EXPECT_EQ(ev.n_degraded, 1u);
  EXPECT_EQ(ev.n_without_record, 1u);
  EXPECT_TRUE(std::is_sorted(ev.samples.begin(), ev.samples.end(),
                             [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; }));
  EXPECT_TRUE(evaluate_condition(cond.samples, cond.records, board, "standard").samples.empty());
}

TEST(ConditionReport, OutlierFlaggingAndRemoval) {
  ConditionEvaluation ev;
  ev.condition = "gamified";
  for (int i = 0; i < 11; ++i) ev.samples.push_back(evaluated("a" + std::to_string(10 + i), 1.0 + 0.01 * i));
  ev.samples.push_back(evaluated("b99", 40.0));
  ReportOptions opts;
  opts.remove_outliers_z = 3.0;
  const auto rep = build_condition_report(ev, opts);
  EXPECT_EQ(rep.outlier_basis, "reference");
  ASSERT_EQ(rep.outliers.size(), 1u);
  EXPECT_EQ(rep.outliers[0].sample_id, "b99");
  ASSERT_TRUE(rep.outlier_removed);
  EXPECT_EQ(rep.outlier_removed->removed, std::vector<std::string>{"b99"});
  EXPECT_NEAR(rep.outlier_removed->box.mean, 1.05, 1e-12);
  EXPECT_EQ(rep.comparison_errors().size(), 11u);
  EXPECT_EQ(rep.n_participants, 2u);
  EXPECT_FALSE(rep.pearson);
}

TEST(ConditionReport, EstimatorBasisAndCorrelation) {
  ConditionEvaluation ev;
  ev.condition = "standard";
  for (int i = 0; i < 10; ++i) ev.samples.push_back(evaluated("s" + std::to_string(i), 1.0 + i, 2.0 + 2.0 * i));
  ev.samples.push_back(evaluated("t0", 3.0, 60.0));
  const auto rep = build_condition_report(ev, {});
  EXPECT_EQ(rep.outlier_basis, "estimator");
  ASSERT_TRUE(rep.pearson && rep.spearman);
  ev.samples.push_back(evaluated("u0", 1.0));
  EXPECT_EQ(build_condition_report(ev, {}).outlier_basis, "reference");
  ReportOptions strict;
  strict.basis = OutlierBasis::estimator;
  EXPECT_THROW(build_condition_report(ev, strict), Error);
  EXPECT_THROW(build_condition_report(ConditionEvaluation{}, {}), Error);
}

TEST(ConditionReport, DeterministicJsonAndFiles) {
  const BoardLayout board = BoardLayout::gojuon();
  const auto g = synthesize_condition(board, Mode::gamified, 40, 4, sigma_for_mean_error(2.7), 11);
  const auto s = synthesize_condition(board, Mode::standard, 60, 4, sigma_for_mean_error(3.8), 12);
  const auto rg = build_condition_report(evaluate_condition(g.samples, g.records, board, "gamified"));
  const auto rs = build_condition_report(evaluate_condition(s.samples, s.records, board, "standard"));
  const auto cmp = compare_conditions(rg, rs);
  EXPECT_EQ(cmp.n_a, 40u);
  EXPECT_EQ(cmp.n_b, 60u);
  EXPECT_FALSE(cmp.test.exact);
  const auto j1 = report_to_json(rg, cmp).dump();
  const auto rg2 = build_condition_report(evaluate_condition(g.samples, g.records, board, "gamified"));
  EXPECT_EQ(j1, report_to_json(rg2, cmp).dump());

  fixtures::TempDir dir;
  write_report_files(dir.path(), {rg, rs}, cmp);
  for (const char* f : {"report.json", "errors.tsv", "boxplot.tsv", "scatter.tsv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  }
  std::ifstream errors(dir.path() / "errors.tsv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(errors, line)) ++lines;
  EXPECT_EQ(lines, 1u + 40u + 60u);
}

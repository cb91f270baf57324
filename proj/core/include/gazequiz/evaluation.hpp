#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazequiz/board.hpp"
#include "gazequiz/capture.hpp"
#include "gazequiz/geometry.hpp"
#include "gazequiz/stats.hpp"

namespace gazequiz {

/// One eye-tracker measurement taken at the moment a sample was captured.
/// Pixel values refer to the undistorted scene-camera image.
struct EvalRecord {
  std::string sample_id;
  std::string participant_id;
  CameraIntrinsics scene_intrinsics;
  Vec2 gaze_px = Vec2::Zero();
  std::optional<Vec2> gaze_offset_px;  // per-participant correction, added to gaze_px
  std::vector<Correspondence> markers;  // marker corners: image px <-> board mm
  bool degraded = false;
};

nlohmann::ordered_json eval_record_to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const nlohmann::json& j);
/// JSONL; blank lines skipped. Throws ParseError with the line number.
std::vector<EvalRecord> read_eval_records(std::istream& in);
std::vector<EvalRecord> load_eval_records(const std::filesystem::path& path);
void write_eval_records(std::ostream& out, const std::vector<EvalRecord>& records);

struct ReferenceMeasurement {
  double error_deg = 0.0;
  Vec2 gaze_board_mm = Vec2::Zero();
  Vec3 camera_origin_board_mm = Vec3::Zero();
  bool outside_image = false;
};

/// Maps the tracked gaze onto the board through the marker homography,
/// recovers the scene camera origin by planar pose, and measures the angle
/// between the gaze point and the target as seen from that origin. Fewer
/// than four markers throw InsufficientData.
ReferenceMeasurement measure_reference(const EvalRecord& record, const Vec3& target_board_mm);
inline double reference_error(const EvalRecord& record, const Vec3& target_board_mm) {
  return measure_reference(record, target_board_mm).error_deg;
}

struct EvaluatedSample {
  std::string sample_id;
  std::string participant_id;
  double error_deg = 0.0;
  std::optional<double> estimator_error_deg;
  Point2 relative_mm;  // gaze point minus target on the board
};

struct ConditionEvaluation {
  std::string condition;
  std::vector<EvaluatedSample> samples;  // sorted by sample_id
  std::size_t n_degraded = 0;
  std::size_t n_without_record = 0;
  std::size_t n_failed = 0;
};

/// Joins samples of `condition` (the sample mode) with their eye-tracker
/// records by sample_id. Degraded records and geometry failures are counted
/// and skipped.
ConditionEvaluation evaluate_condition(const std::vector<GazeSample>& samples, const std::vector<EvalRecord>& records,
                                       const BoardLayout& board, const std::string& condition);

enum class OutlierBasis { automatic, estimator, reference };

struct ReportOptions {
  double outlier_threshold = 3.0;
  std::optional<double> remove_outliers_z;
  OutlierBasis basis = OutlierBasis::automatic;
  double scatter_limit_mm = 150.0;
};

struct OutlierEntry {
  std::string sample_id;
  double z = 0.0;
};

struct OutlierRemoval {
  double threshold = 3.0;
  std::vector<std::string> removed;
  stats::BoxStats box;
};

struct ConditionReport {
  std::string condition;
  std::size_t n_samples = 0;
  std::size_t n_participants = 0;
  std::size_t n_excluded = 0;
  std::vector<EvaluatedSample> samples;
  stats::BoxStats box;
  std::string outlier_basis;  // "estimator" | "reference"
  double outlier_threshold = 3.0;
  std::vector<OutlierEntry> outliers;
  bool zero_spread = false;
  std::optional<OutlierRemoval> outlier_removed;
  std::optional<stats::Correlation> pearson;   // estimator error vs reference error
  std::optional<stats::Correlation> spearman;
  double scatter_limit_mm = 150.0;

  /// Errors used for comparisons: outlier-removed when requested.
  std::vector<double> comparison_errors() const;
};

/// Throws InsufficientData when no sample was evaluated.
ConditionReport build_condition_report(const ConditionEvaluation& evaluation, const ReportOptions& options = {});

struct Comparison {
  std::string condition_a;
  std::string condition_b;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  stats::MannWhitneyResult test;
};

Comparison compare_conditions(const ConditionReport& a, const ConditionReport& b);

nlohmann::ordered_json report_to_json(const ConditionReport& report, const std::optional<Comparison>& comparison = {});

/// report.json, errors.tsv, boxplot.tsv and scatter.tsv in out_dir. Every
/// report passed is included in the tables.
void write_report_files(const std::filesystem::path& out_dir, const std::vector<ConditionReport>& reports,
                        const std::optional<Comparison>& comparison = {});

}  // namespace gazequiz

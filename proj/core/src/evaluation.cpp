#include "gazequiz/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gazequiz/error.hpp"

namespace gazequiz {

namespace fs = std::filesystem;

namespace {

nlohmann::ordered_json intrinsics_json(const CameraIntrinsics& k) {
  nlohmann::ordered_json j;
  j["fx"] = k.fx;
  j["fy"] = k.fy;
  j["cx"] = k.cx;
  j["cy"] = k.cy;
  j["width"] = k.image_w;
  j["height"] = k.image_h;
  return j;
}

Vec2 vec2_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ValidationError, "expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

nlohmann::ordered_json box_json(const stats::BoxStats& b) {
  nlohmann::ordered_json j;
  j["n"] = b.n;
  j["mean"] = b.mean;
  j["min"] = b.min;
  j["q1"] = b.q1;
  j["median"] = b.median;
  j["q3"] = b.q3;
  j["max"] = b.max;
  j["whisker_low"] = b.whisker_low;
  j["whisker_high"] = b.whisker_high;
  j["n_beyond_whiskers"] = b.n_beyond_whiskers;
  return j;
}

nlohmann::ordered_json correlation_json(const stats::Correlation& c) {
  nlohmann::ordered_json j;
  j["r"] = c.r;
  j["p"] = c.p;
  j["n"] = c.n;
  return j;
}

std::vector<double> errors_of(const std::vector<EvaluatedSample>& samples) {
  std::vector<double> e;
  e.reserve(samples.size());
  for (const auto& s : samples) e.push_back(s.error_deg);
  return e;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::StorageError, "cannot write " + p.string());
}

}  // namespace

nlohmann::ordered_json eval_record_to_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["participant_id"] = r.participant_id;
  j["scene_intrinsics"] = intrinsics_json(r.scene_intrinsics);
  j["gaze_px"] = {r.gaze_px.x(), r.gaze_px.y()};
  if (r.gaze_offset_px) j["gaze_offset_px"] = {r.gaze_offset_px->x(), r.gaze_offset_px->y()};
  nlohmann::ordered_json markers = nlohmann::ordered_json::array();
  for (const auto& m : r.markers) {
    nlohmann::ordered_json mj;
    mj["image_px"] = {m.image_px.x(), m.image_px.y()};
    mj["board_mm"] = {m.board_mm.x(), m.board_mm.y()};
    markers.push_back(std::move(mj));
  }
  j["markers"] = std::move(markers);
  j["quality"] = {{"degraded", r.degraded}};
  return j;
}

EvalRecord eval_record_from_json(const nlohmann::json& j) {
  try {
    EvalRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.participant_id = j.value("participant_id", "");
    r.scene_intrinsics = j.at("scene_intrinsics").get<CameraIntrinsics>();
    r.gaze_px = vec2_from_json(j.at("gaze_px"));
    if (j.contains("gaze_offset_px")) r.gaze_offset_px = vec2_from_json(j["gaze_offset_px"]);
    for (const auto& m : j.at("markers")) r.markers.push_back({vec2_from_json(m.at("image_px")), vec2_from_json(m.at("board_mm"))});
    if (j.contains("quality")) r.degraded = j["quality"].value("degraded", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("eval record: ") + e.what());
  }
}

std::vector<EvalRecord> read_eval_records(std::istream& in) {
  std::vector<EvalRecord> records;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(eval_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(n, e.what());
    } catch (const Error& e) {
      throw ParseError(n, e.what());
    }
  }
  return records;
}

std::vector<EvalRecord> load_eval_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  return read_eval_records(in);
}

void write_eval_records(std::ostream& out, const std::vector<EvalRecord>& records) {
  for (const auto& r : records) out << eval_record_to_json(r).dump() << '\n';
}

ReferenceMeasurement measure_reference(const EvalRecord& record, const Vec3& target_board_mm) {
  if (record.markers.size() < 4) {
    throw Error(ErrorCode::InsufficientData,
                "record " + record.sample_id + " has " + std::to_string(record.markers.size()) + " marker corners, need 4");
  }
  const Vec2 gaze = record.gaze_px + record.gaze_offset_px.value_or(Vec2::Zero());
  if (!gaze.allFinite()) throw Error(ErrorCode::ValidationError, "record " + record.sample_id + " gaze is not finite");
  record.scene_intrinsics.validate();

  const Homography h = estimate_homography(record.markers);
  const BoardHit hit = map_gaze_to_board(gaze, h, record.scene_intrinsics);
  const CameraPose pose = pose_from_homography(h, record.scene_intrinsics);
  const Vec3 origin = pose.camera_origin_board();
  const Vec3 gaze_point(hit.board_mm.x(), hit.board_mm.y(), 0.0);

  ReferenceMeasurement m;
  m.gaze_board_mm = hit.board_mm;
  m.outside_image = hit.outside_image;
  m.camera_origin_board_mm = origin;
  m.error_deg = angular_error_deg(gaze_point - origin, target_board_mm - origin);
  return m;
}

ConditionEvaluation evaluate_condition(const std::vector<GazeSample>& samples, const std::vector<EvalRecord>& records,
                                       const BoardLayout& board, const std::string& condition) {
  std::map<std::string, const EvalRecord*> by_sample;
  for (const auto& r : records) by_sample.emplace(r.sample_id, &r);

  ConditionEvaluation out;
  out.condition = condition;
  for (const auto& s : samples) {
    if (s.mode != condition) continue;
    auto it = by_sample.find(s.sample_id);
    if (it == by_sample.end()) {
      ++out.n_without_record;
      continue;
    }
    const EvalRecord& r = *it->second;
    if (r.degraded) {
      ++out.n_degraded;
      continue;
    }
    const Vec3 target = target_board_point(board, CaptureTarget{s.letter_id, s.stimulus_xy_mm});
    try {
      const auto m = measure_reference(r, target);
      EvaluatedSample e;
      e.sample_id = s.sample_id;
      e.participant_id = s.participant_id;
      e.error_deg = m.error_deg;
      e.relative_mm = {m.gaze_board_mm.x() - target.x(), m.gaze_board_mm.y() - target.y()};
      if (s.estimator_vec) e.estimator_error_deg = angular_error_deg(*s.estimator_vec, s.label_vec);
      out.samples.push_back(std::move(e));
    } catch (const Error&) {
      ++out.n_failed;
    }
  }
  std::sort(out.samples.begin(), out.samples.end(),
            [](const EvaluatedSample& a, const EvaluatedSample& b) { return a.sample_id < b.sample_id; });
  return out;
}

std::vector<double> ConditionReport::comparison_errors() const {
  std::vector<double> e;
  const std::set<std::string> removed = outlier_removed
                                            ? std::set<std::string>(outlier_removed->removed.begin(), outlier_removed->removed.end())
                                            : std::set<std::string>{};
  for (const auto& s : samples) {
    if (removed.count(s.sample_id) == 0) e.push_back(s.error_deg);
  }
  return e;
}

ConditionReport build_condition_report(const ConditionEvaluation& evaluation, const ReportOptions& options) {
  if (evaluation.samples.empty()) {
    throw Error(ErrorCode::InsufficientData, "condition '" + evaluation.condition + "' has no evaluated sample");
  }
  ConditionReport rep;
  rep.condition = evaluation.condition;
  rep.samples = evaluation.samples;
  std::sort(rep.samples.begin(), rep.samples.end(),
            [](const EvaluatedSample& a, const EvaluatedSample& b) { return a.sample_id < b.sample_id; });
  rep.n_samples = rep.samples.size();
  rep.n_excluded = evaluation.n_degraded + evaluation.n_failed;
  rep.scatter_limit_mm = options.scatter_limit_mm;
  std::set<std::string> participants;
  for (const auto& s : rep.samples) participants.insert(s.participant_id);
  rep.n_participants = participants.size();

  const auto errors = errors_of(rep.samples);
  rep.box = stats::box_stats(errors);

  const bool all_estimated = std::all_of(rep.samples.begin(), rep.samples.end(),
                                         [](const EvaluatedSample& s) { return s.estimator_error_deg.has_value(); });
  bool use_estimator = false;
  switch (options.basis) {
    case OutlierBasis::automatic: use_estimator = all_estimated; break;
    case OutlierBasis::estimator:
      if (!all_estimated) throw Error(ErrorCode::InsufficientData, "estimator errors missing for some samples");
      use_estimator = true;
      break;
    case OutlierBasis::reference: use_estimator = false; break;
  }
  rep.outlier_basis = use_estimator ? "estimator" : "reference";
  rep.outlier_threshold = options.outlier_threshold;

  std::vector<double> basis;
  for (const auto& s : rep.samples) basis.push_back(use_estimator ? *s.estimator_error_deg : s.error_deg);

  if (basis.size() >= 3) {
    const auto z = stats::zscore_outliers(basis, options.outlier_threshold);
    rep.zero_spread = z.zero_spread;
    for (const auto i : z.flagged) rep.outliers.push_back({rep.samples[i].sample_id, z.z[i]});
    if (options.remove_outliers_z) {
      const auto zr = *options.remove_outliers_z == options.outlier_threshold
                          ? z
                          : stats::zscore_outliers(basis, *options.remove_outliers_z);
      OutlierRemoval removal;
      removal.threshold = *options.remove_outliers_z;
      std::vector<double> kept;
      std::vector<bool> drop(rep.samples.size(), false);
      for (const auto i : zr.flagged) drop[i] = true;
      for (std::size_t i = 0; i < rep.samples.size(); ++i) {
        if (drop[i]) {
          removal.removed.push_back(rep.samples[i].sample_id);
        } else {
          kept.push_back(rep.samples[i].error_deg);
        }
      }
      if (!kept.empty()) {
        removal.box = stats::box_stats(kept);
        rep.outlier_removed = std::move(removal);
      }
    }
  }

  if (all_estimated && rep.samples.size() >= 3) {
    std::vector<double> est;
    for (const auto& s : rep.samples) est.push_back(*s.estimator_error_deg);
    try {
      rep.pearson = stats::pearson_r(est, errors);
      rep.spearman = stats::spearman_rho(est, errors);
    } catch (const Error&) {
      rep.pearson.reset();
      rep.spearman.reset();
    }
  }
  return rep;
}

Comparison compare_conditions(const ConditionReport& a, const ConditionReport& b) {
  Comparison c;
  c.condition_a = a.condition;
  c.condition_b = b.condition;
  const auto ea = a.comparison_errors();
  const auto eb = b.comparison_errors();
  c.n_a = ea.size();
  c.n_b = eb.size();
  c.test = stats::mann_whitney_u(ea, eb);
  return c;
}

nlohmann::ordered_json report_to_json(const ConditionReport& r, const std::optional<Comparison>& comparison) {
  nlohmann::ordered_json j;
  j["condition"] = r.condition;
  j["n_samples"] = r.n_samples;
  j["n_participants"] = r.n_participants;
  j["n_excluded"] = r.n_excluded;
  j["error_deg"] = box_json(r.box);
  nlohmann::ordered_json out;
  out["basis"] = r.outlier_basis;
  out["threshold"] = r.outlier_threshold;
  out["zero_spread"] = r.zero_spread;
  nlohmann::ordered_json flagged = nlohmann::ordered_json::array();
  for (const auto& o : r.outliers) flagged.push_back({{"sample_id", o.sample_id}, {"z", o.z}});
  out["flagged"] = std::move(flagged);
  j["outliers"] = std::move(out);
  if (r.outlier_removed) {
    nlohmann::ordered_json rem;
    rem["threshold"] = r.outlier_removed->threshold;
    rem["removed"] = r.outlier_removed->removed;
    rem["error_deg"] = box_json(r.outlier_removed->box);
    j["after_outlier_removal"] = std::move(rem);
  }
  if (r.pearson && r.spearman) {
    j["estimator_vs_reference"] = {{"pearson", correlation_json(*r.pearson)}, {"spearman", correlation_json(*r.spearman)}};
  }
  if (comparison) {
    nlohmann::ordered_json c;
    c["test"] = "mann_whitney_u";
    c["alternative"] = "two-sided";
    c["condition_a"] = comparison->condition_a;
    c["condition_b"] = comparison->condition_b;
    c["n_a"] = comparison->n_a;
    c["n_b"] = comparison->n_b;
    c["u"] = comparison->test.u;
    c["p"] = comparison->test.p;
    c["exact"] = comparison->test.exact;
    j["comparison"] = std::move(c);
  }
  return j;
}

void write_report_files(const fs::path& out_dir, const std::vector<ConditionReport>& reports,
                        const std::optional<Comparison>& comparison) {
  if (reports.empty()) throw Error(ErrorCode::InsufficientData, "no report to write");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::StorageError, "cannot create " + out_dir.string() + ": " + ec.message());

  nlohmann::ordered_json doc;
  doc["conditions"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    doc["conditions"].push_back(report_to_json(reports[i], i == 0 ? comparison : std::nullopt));
  }
  write_text(out_dir / "report.json", doc.dump(2) + "\n");

  std::ostringstream errors;
  errors << "condition\tsample_id\tparticipant_id\terror_deg\testimator_error_deg\n";
  std::ostringstream box;
  box << "condition\tsubset\tn\tmean\tmin\twhisker_low\tq1\tmedian\tq3\twhisker_high\tmax\n";
  std::ostringstream scatter;
  scatter << "condition\tsample_id\tdx_mm\tdy_mm\tclipped\n";
  for (const auto& r : reports) {
    for (const auto& s : r.samples) {
      errors << r.condition << '\t' << s.sample_id << '\t' << s.participant_id << '\t' << fmt(s.error_deg) << '\t'
             << (s.estimator_error_deg ? fmt(*s.estimator_error_deg) : "") << '\n';
      const bool clipped = std::abs(s.relative_mm.x) > r.scatter_limit_mm || std::abs(s.relative_mm.y) > r.scatter_limit_mm;
      scatter << r.condition << '\t' << s.sample_id << '\t' << fmt(s.relative_mm.x) << '\t' << fmt(s.relative_mm.y) << '\t'
              << (clipped ? 1 : 0) << '\n';
    }
    const auto row = [&](const char* subset, const stats::BoxStats& b) {
      box << r.condition << '\t' << subset << '\t' << b.n << '\t' << fmt(b.mean) << '\t' << fmt(b.min) << '\t'
          << fmt(b.whisker_low) << '\t' << fmt(b.q1) << '\t' << fmt(b.median) << '\t' << fmt(b.q3) << '\t'
          << fmt(b.whisker_high) << '\t' << fmt(b.max) << '\n';
    };
    row("all", r.box);
    if (r.outlier_removed) row("outliers_removed", r.outlier_removed->box);
  }
  write_text(out_dir / "errors.tsv", errors.str());
  write_text(out_dir / "boxplot.tsv", box.str());
  write_text(out_dir / "scatter.tsv", scatter.str());
}

}  // namespace gazequiz

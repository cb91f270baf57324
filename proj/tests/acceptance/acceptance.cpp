// Acceptance suite: one PASS/FAIL line per criterion.
//   gazequiz_acceptance            run all
//   gazequiz_acceptance --only 7   run one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gazequiz/app_config.hpp"
#include "gazequiz/capture.hpp"
#include "gazequiz/evaluation.hpp"
#include "gazequiz/geometry.hpp"
#include "gazequiz/log.hpp"
#include "gazequiz/normalization.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/simulation.hpp"
#include "gazequiz/stats.hpp"
#include "gazequiz/store.hpp"
#include "gazequiz/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace gazequiz;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

oracle::V3 arr(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
oracle::M3 arr(const Mat3& m) {
  oracle::M3 out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[r][c] = m(r, c);
  }
  return out;
}

const CameraIntrinsics kScene{766.0, 766.0, 544.0, 540.0, 1088, 1080};

// ------------------------------------------------------------------ 1
Outcome homography_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  double worst_rot = 0.0;
  double worst_origin = 0.0;
  int noisy_ok = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const double tilt = oracle::rad(rng.uniform(0, 30));
    const double az = rng.uniform(0, 2 * oracle::kPi);
    const double dist = rng.uniform(400, 900);
    const Vec3 origin(dist * std::sin(tilt) * std::cos(az), dist * std::sin(tilt) * std::sin(az), dist * std::cos(tilt));
    const CameraPose truth = CameraPose::look_at(origin, Vec3(rng.uniform(-40, 40), rng.uniform(-40, 40), 0));

    std::vector<Correspondence> clean;
    std::vector<Correspondence> noisy;
    for (const double x : {-330.0, 0.0, 330.0}) {
      for (const double y : {-170.0, 170.0}) {
        const auto pc = oracle::add(oracle::mul(arr(truth.rotation()), oracle::V3{x, y, 0.0}), arr(truth.translation_mm()));
        const auto px = oracle::project(kScene.fx, kScene.fy, kScene.cx, kScene.cy, pc);
        clean.push_back({Vec2(px[0], px[1]), Vec2(x, y)});
        noisy.push_back({Vec2(px[0] + 0.5 * rng.normal(), px[1] + 0.5 * rng.normal()), Vec2(x, y)});
      }
    }
    const CameraPose got = pose_from_homography(estimate_homography(clean), kScene);
    worst_rot = std::max(worst_rot, oracle::rotation_distance_rad(arr(got.rotation()), arr(truth.rotation())));
    worst_origin = std::max(worst_origin, oracle::norm(oracle::sub(arr(got.camera_origin_board()), arr(origin))));
    const CameraPose rough = pose_from_homography(estimate_homography(noisy), kScene);
    if ((rough.camera_origin_board() - origin).norm() < 10.0) ++noisy_ok;
  }
  const double secs = seconds_since(t0);
  const double frac = static_cast<double>(noisy_ok) / n;
  return {worst_rot < 1e-6 && worst_origin < 1e-3 && frac >= 0.95 && secs < 10.0,
          fmt("max rotation error %.2e rad, max origin error %.2e mm, noisy within 10 mm %.3f, %.2f s", worst_rot,
              worst_origin, frac, secs)};
}

// ------------------------------------------------------------------ 2
Outcome reference_error_oracle() {
  EyeTrackerModel model;
  Rng rng(1002);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 eye(rng.uniform(-100, 100), rng.uniform(-80, 80), rng.uniform(450, 800));
    const Vec3 target(rng.uniform(-270, 270), rng.uniform(-120, 120), 0);
    const Vec3 aim = target + Vec3(rng.normal() * 30, rng.normal() * 30, 0) - eye;
    const auto rec = synthesize_eval_record("s", "p", eye, aim, model, rng);
    const oracle::V3 hit = oracle::hit_board(arr(eye), arr(aim));
    const oracle::V3 cam = oracle::add(arr(eye), arr(model.camera_offset_mm));
    const double want = oracle::angle_deg(oracle::sub(hit, cam), oracle::sub(arr(target), cam));
    worst = std::max(worst, std::abs(reference_error(rec, target) - want));
  }
  return {worst < 1e-6, fmt("max deviation from 3D oracle %.2e deg over 1000 scenes", worst)};
}

// ------------------------------------------------------------------ 3
Outcome normalization_checks() {
  Rng rng(1003);
  double axis_err = 0.0;
  double angle_err = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 c(rng.uniform(-300, 300), rng.uniform(-200, 200), rng.uniform(300, 1000));
    const Mat3 r = normalization_rotation(c);
    const Vec3 axis = r * c.normalized();
    axis_err = std::max({axis_err, std::abs(axis.x()), std::abs(axis.y()), std::abs(axis.z() - 1.0)});
    const Vec3 g1 = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const Vec3 g2 = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double before = oracle::angle_deg(arr(g1), arr(g2));
    const double after = oracle::angle_deg(arr(normalize_gaze(r, g1)), arr(normalize_gaze(r, g2)));
    angle_err = std::max(angle_err, std::abs(before - after));
  }

  // round trip of rendered webcam frames through their own normalization warp
  const BoardLayout board = BoardLayout::gojuon();
  const Calibration cal = default_calibration();
  const NormalizationParams p;
  double worst_mad = 0.0;
  for (const Side side : {Side::A, Side::B}) {
    SyntheticFrameSource source(default_scenario(side, cal, 1003));
    SyntheticFaceDetector detector(cal.at(side).intrinsics);
    for (std::size_t i = 0; i < board.cells().size(); i += 3) {
      CaptureContext ctx;
      ctx.capture_id = "mad-" + std::to_string(i);
      ctx.side = side;
      const auto out = capture(ctx, CaptureTarget{board.cells()[i].id, std::nullopt}, board, cal.at(side),
                               {&source, &detector, nullptr}, {});
      if (!out.geometry) return {false, "no face in a rendered frame"};
      const Mat3& w = out.geometry->warp;
      const GrayImage back = warp_image(out.normalized_image, w.inverse(), out.image.width, out.image.height);
      double sum = 0.0;
      int count = 0;
      for (int y = 0; y < out.image.height; ++y) {
        for (int x = 0; x < out.image.width; ++x) {
          const Vec3 m = w * Vec3(x, y, 1.0);
          const double mx = m.x() / m.z();
          const double my = m.y() / m.z();
          if (mx < 2 || my < 2 || mx > p.size_norm - 3 || my > p.size_norm - 3) continue;
          sum += std::abs(static_cast<int>(back.at(x, y)) - static_cast<int>(out.image.at(x, y)));
          ++count;
        }
      }
      worst_mad = std::max(worst_mad, count > 0 ? sum / count : 255.0);
    }
  }
  return {axis_err < 1e-12 && angle_err < 1e-9 && worst_mad < 2.0,
          fmt("axis error %.2e, angle change %.2e deg, warp round-trip MAD %.3f levels", axis_err, angle_err, worst_mad)};
}

// ------------------------------------------------------------------ 4
std::vector<double> sample(Rng& rng, std::size_t n, bool ties, double shift = 0.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = (ties ? static_cast<double>(rng.uniform_index(5)) : rng.normal()) + shift;
  return v;
}

Outcome mann_whitney_checks() {
  Rng rng(1004);
  double worst = 0.0;
  int cases = 0;
  for (std::size_t n1 = 1; n1 <= 5; ++n1) {
    for (std::size_t n2 = 1; n2 <= 5; ++n2) {
      for (int rep = 0; rep < 20; ++rep) {
        const auto x = sample(rng, n1, rep % 2 == 0);
        const auto y = sample(rng, n2, rep % 2 == 0, rep % 4 == 1 ? 1.0 : 0.0);
        const auto got = stats::mann_whitney_u(x, y);
        const auto want = oracle::mann_whitney_enumerated(x, y);
        worst = std::max({worst, std::abs(got.p - want.p), std::abs(got.u - want.u), got.exact ? 0.0 : 1.0});
        ++cases;
      }
    }
  }
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n1 = 6 + rng.uniform_index(3);
    const std::size_t n2 = n1 + rng.uniform_index(9 - n1);
    const bool ties = rep % 3 == 0;
    const auto x = sample(rng, n1, ties);
    const auto y = sample(rng, n2, ties, rng.uniform(0.0, 1.5));
    const auto got = rep % 2 == 0 ? stats::mann_whitney_u(x, y) : stats::mann_whitney_u(y, x);
    const auto want = rep % 2 == 0 ? oracle::mann_whitney_enumerated(x, y) : oracle::mann_whitney_enumerated(y, x);
    worst = std::max({worst, std::abs(got.p - want.p), std::abs(got.u - want.u), got.exact ? 0.0 : 1.0});
    ++cases;
  }
  double approx_gap = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = sample(rng, 8, false);
    const auto y = sample(rng, 8, false, rng.uniform(0.0, 1.5));
    approx_gap = std::max(approx_gap, std::abs(stats::mann_whitney_exact(x, y).p - stats::mann_whitney_asymptotic(x, y).p));
  }
  return {worst < 1e-12 && approx_gap < 0.02,
          fmt("%.0f cases, max deviation from enumeration %.2e, max |approx - exact| at 8/8 %.4f", cases, worst, approx_gap)};
}

// ------------------------------------------------------------------ 5
Outcome correlation_checks() {
  Rng rng(1005);
  double worst_p = 0.0;
  double worst_s = 0.0;
  bool monotone_exact = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(100);
    std::vector<double> x(n);
    std::vector<double> y(n);
    const double slope = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal() * 4.0 + 1.0;
      y[i] = slope * x[i] + rng.normal() * 3.0;
    }
    worst_p = std::max(worst_p, std::abs(stats::pearson_r(x, y).r - oracle::pearson_direct(x, y)));
    const double rho = stats::spearman_rho(x, y).r;
    worst_s = std::max(worst_s, std::abs(rho - oracle::spearman_tiefree(x, y)));
    std::vector<double> fx(n);
    std::vector<double> gy(n);
    for (std::size_t i = 0; i < n; ++i) {
      fx[i] = std::exp(x[i] / 4.0);
      gy[i] = std::atan(y[i]) * 7.0 - 2.0;
    }
    if (stats::spearman_rho(fx, gy).r != rho) monotone_exact = false;
  }
  return {worst_p < 1e-12 && worst_s < 1e-12 && monotone_exact,
          fmt("max pearson deviation %.2e, max spearman deviation %.2e, monotone invariance ", worst_p, worst_s) +
              (monotone_exact ? "exact" : "broken")};
}

// ------------------------------------------------------------------ 6
Outcome outlier_repair() {
  const BoardLayout board = BoardLayout::gojuon();
  auto cond = synthesize_condition(board, Mode::gamified, 64, 8, 2.0, 1006);
  const auto clean = build_condition_report(evaluate_condition(cond.samples, cond.records, board, "gamified"));
  const double clean_mean = clean.box.mean;

  // one sample where the subject glanced 40 degrees away
  GazeSample s = cond.samples.front();
  s.sample_id = "zz-outlier";
  const Vec3 target = letter_position(board, *s.letter_id);
  const Vec3 eye(0, 0, 600);
  const Vec3 to_target = (target - eye).normalized();
  const Vec3 axis = to_target.cross(Vec3::UnitX()).normalized();
  const Vec3 away = Eigen::AngleAxisd(oracle::rad(40.0), axis) * to_target;
  Rng rng(6);
  cond.samples.push_back(s);
  cond.records.push_back(synthesize_eval_record(s.sample_id, s.participant_id, eye, away, EyeTrackerModel{}, rng));

  ReportOptions opts;
  opts.outlier_threshold = 3.0;
  opts.remove_outliers_z = 3.0;
  const auto rep = build_condition_report(evaluate_condition(cond.samples, cond.records, board, "gamified"), opts);
  const bool flagged = std::any_of(rep.outliers.begin(), rep.outliers.end(),
                                   [](const OutlierEntry& o) { return o.sample_id == "zz-outlier"; });
  const double repaired = rep.outlier_removed ? rep.outlier_removed->box.mean : rep.box.mean;
  return {flagged && std::abs(repaired - clean_mean) < 0.1,
          fmt("n=%.0f, contaminated mean %.3f deg, after removal %.3f deg, clean %.3f deg", static_cast<double>(rep.n_samples),
              rep.box.mean, repaired, clean_mean) +
              (flagged ? ", outlier flagged" : ", outlier NOT flagged")};
}

// ------------------------------------------------------------------ 7
Outcome simulated_batch() {
  const AppConfig config = fixtures::default_config();
  BatchOptions opts;
  opts.mode = Mode::gamified;
  opts.sessions = 20;
  opts.gaze_sigma_deg = 2.8;
  opts.seed = 1007;
  const BatchResult r = simulate_batch(config, opts);
  const auto board = build_app_context(config).board;
  const auto eval = evaluate_condition(r.samples, r.records, *board, "gamified");
  std::vector<double> errors;
  for (const auto& s : eval.samples) errors.push_back(s.error_deg);
  const double mean = errors.empty() ? 0.0 : stats::mean(errors);
  const double expected = expected_angular_noise_deg(opts.gaze_sigma_deg);
  const auto hidden = static_cast<std::size_t>(config.game.hidden_count);
  const bool per_word = r.samples_per_word.size() == r.words &&
                        std::all_of(r.samples_per_word.begin(), r.samples_per_word.end(),
                                    [hidden](const auto& kv) { return kv.second == hidden; });
  return {std::abs(mean - expected) <= 0.3 && per_word && r.samples_without_approval == 0,
          fmt("%.0f samples, mean %.3f deg vs expected %.3f deg, unapproved %.0f", static_cast<double>(r.samples.size()), mean,
              expected, static_cast<double>(r.samples_without_approval)) +
              (per_word ? ", hidden_count samples per word" : ", per-word count mismatch")};
}

// ------------------------------------------------------------------ 8
Outcome power_check() {
  const auto t0 = Clock::now();
  const BoardLayout board = BoardLayout::gojuon();
  const int reps = 200;
  int rejected = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto seed = derive_seed(1008, "rep", static_cast<std::uint64_t>(rep));
    const auto g = synthesize_condition(board, Mode::gamified, 65, 20, sigma_for_mean_error(2.7), derive_seed(seed, "g"));
    const auto s = synthesize_condition(board, Mode::standard, 792, 27, sigma_for_mean_error(3.8), derive_seed(seed, "s"));
    const auto rg = build_condition_report(evaluate_condition(g.samples, g.records, board, "gamified"));
    const auto rs = build_condition_report(evaluate_condition(s.samples, s.records, board, "standard"));
    if (compare_conditions(rg, rs).test.p < 0.05) ++rejected;
  }
  const double secs = seconds_since(t0);
  const double power = static_cast<double>(rejected) / reps;
  return {power >= 0.8 && secs < 60.0, fmt("rejected in %.0f of %.0f replications (%.3f), %.1f s", rejected, reps, power, secs)};
}

// ------------------------------------------------------------------ 9
std::string log_bytes(const std::vector<SessionEvent>& log) {
  std::ostringstream out;
  write_event_log(out, log);
  return out.str();
}

Outcome trace_replay() {
  const AppContext app = build_app_context(fixtures::default_config());
  int identical = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto seed = derive_seed(1009, "trace", static_cast<std::uint64_t>(i));
    RuntimeContext ctx;
    ctx.engine = app.engine;
    ctx.capture = app.capture;
    ctx.seed = seed;
    const Mode mode = i % 5 == 4 ? Mode::standard : Mode::gamified;
    const std::vector<PlayerSpec> players(mode == Mode::gamified ? 2 : 1);
    const std::string id = "fuzz-" + std::to_string(i);
    SessionRuntime live(id, ctx);
    play_session(live, mode, players, random_policy(seed), seed);
    const auto again = replay_trace(id, ctx, live.trace());
    const std::string a = log_bytes(live.event_log());
    if (!a.empty() && a == log_bytes(again->event_log())) ++identical;
  }
  return {identical == n, fmt("%.0f of %.0f replayed event logs byte-identical", identical, n)};
}

// ------------------------------------------------------------------ 10
Outcome export_counts() {
  const AppConfig config = fixtures::default_config();
  const AppContext app = build_app_context(config);
  fixtures::TempDir dir("gq-accept");
  SessionStore store = SessionStore::create(dir.path() / "store", *app.board, config.normalization);
  PopulationOptions opts;
  opts.participants = 47;
  opts.eyetracker_wearers = 22;
  opts.lost_samples = 1;
  opts.seed = 1010;
  const PopulationResult pop = simulate_population(config, store, opts);

  std::size_t counts[3] = {0, 0, 0};
  const ExportFilter filters[3] = {ExportFilter::all, ExportFilter::training, ExportFilter::eyetracker};
  for (int i = 0; i < 3; ++i) {
    ExportOptions eo;
    eo.filter = filters[i];
    eo.created_at = "2000-01-01T00:00:00Z";
    counts[i] = export_dataset(store, dir.path() / ("export-" + std::string(to_string(filters[i]))), eo).records;
  }
  const FoldSplit split = make_fold_split(pop.participants, 3, opts.seed);
  auto wear = split.eyetracker_counts(pop.participants);
  std::sort(wear.begin(), wear.end());
  const bool folds_ok = wear == std::vector<int>{7, 7, 8};
  return {counts[0] == 140 && counts[1] == 75 && counts[2] == 65 && folds_ok,
          fmt("all %.0f, training %.0f, eye-tracker %.0f", static_cast<double>(counts[0]), static_cast<double>(counts[1]),
              static_cast<double>(counts[2])) +
              ", fold wearers {" + std::to_string(wear[0]) + "," + std::to_string(wear[1]) + "," + std::to_string(wear[2]) +
              "}"};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  log::set_sink(nullptr);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, homography_round_trip}, {2, reference_error_oracle}, {3, normalization_checks}, {4, mann_whitney_checks},
      {5, correlation_checks},    {6, outlier_repair},         {7, simulated_batch},      {8, power_check},
      {9, trace_replay},          {10, export_counts},
  };
  bool all = true;
  for (const auto& [n, run] : criteria) {
    if (only != 0 && only != n) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}

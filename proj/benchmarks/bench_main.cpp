#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "gazequiz/dictionary.hpp"
#include "gazequiz/engine.hpp"
#include "gazequiz/evaluation.hpp"
#include "gazequiz/geometry.hpp"
#include "gazequiz/normalization.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/simulation.hpp"
#include "gazequiz/stats.hpp"

using namespace gazequiz;

namespace {

const CameraIntrinsics kScene{766.0, 766.0, 544.0, 540.0, 1088, 1080};

std::vector<Correspondence> markers() {
  const CameraPose pose = CameraPose::look_at(Vec3(80, -60, 650), Vec3::Zero());
  const Homography h(board_to_image_homography(pose, kScene));
  std::vector<Correspondence> out;
  for (const double x : {-330.0, 0.0, 330.0}) {
    for (const double y : {-170.0, 170.0}) {
      const Vec3 p = h.matrix() * Vec3(x, y, 1.0);
      out.push_back({Vec2(p.x() / p.z(), p.y() / p.z()), Vec2(x, y)});
    }
  }
  return out;
}

void BM_EstimateHomography(benchmark::State& state) {
  const auto c = markers();
  for (auto _ : state) benchmark::DoNotOptimize(estimate_homography(c));
}
BENCHMARK(BM_EstimateHomography);

void BM_PoseFromHomography(benchmark::State& state) {
  const Homography h = estimate_homography(markers());
  for (auto _ : state) benchmark::DoNotOptimize(pose_from_homography(h, kScene));
}
BENCHMARK(BM_PoseFromHomography);

void BM_ReferenceError(benchmark::State& state) {
  Rng rng(1);
  const auto rec = synthesize_eval_record("s", "p", Vec3(10, 0, 600), Vec3(0.05, -0.02, -1), EyeTrackerModel{}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(reference_error(rec, Vec3(30, 0, 0)));
}
BENCHMARK(BM_ReferenceError);

void BM_NormalizeWarp(benchmark::State& state) {
  const CameraIntrinsics k{300, 300, 160, 120, 320, 240};
  const NormalizationParams p;
  GrayImage img(320, 240, 128);
  const Vec3 face(20, -10, 600);
  for (auto _ : state) {
    const Mat3 w = normalization_warp(k, p, normalization_rotation(face), face.norm());
    benchmark::DoNotOptimize(warp_image(img, w, p));
  }
}
BENCHMARK(BM_NormalizeWarp);

void BM_MannWhitney(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  std::vector<double> y(static_cast<std::size_t>(state.range(1)));
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal() + 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(stats::mann_whitney_u(x, y));
}
BENCHMARK(BM_MannWhitney)->Args({8, 8})->Args({65, 792});

void BM_SpearmanRho(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(stats::spearman_rho(x, y));
}
BENCHMARK(BM_SpearmanRho)->Arg(100)->Arg(1000);

void BM_EngineReplay(benchmark::State& state) {
  auto dict = std::make_shared<const std::vector<DictionaryEntry>>(
      load_dictionary_file(std::string(GAZEQUIZ_SOURCE_DIR) + "/data/words_ja.txt").entries);
  const Engine engine(GameConfig{}, dict, std::make_shared<const BoardLayout>(BoardLayout::gojuon()));
  GameSession s = engine.start_session("bench", {"a", "b"}, Mode::gamified, 9, 0);
  std::int64_t t = 0;
  auto step = [&](const std::string& actor, Action a) {
    t += 100;
    try {
      engine.apply(s, Input{t, actor, std::move(a)});
    } catch (const std::exception&) {
    }
  };
  for (int guard = 0; guard < 10000 && s.phase != Phase::finished; ++guard) {
    const std::string q = s.questioner_id();
    const std::string a = s.answerer_id();
    switch (s.phase) {
      case Phase::briefing: step(q, action::Ready{}); step(a, action::Ready{}); break;
      case Phase::answerer_review: step(a, action::Ready{}); break;
      case Phase::await_capture_trigger: step(q, action::TriggerCapture{}); break;
      case Phase::countdown: t = s.countdown_deadline_ms - 100; step("system", action::Tick{}); break;
      case Phase::capturing: step("capture", action::CaptureResult{"c" + std::to_string(guard), false}); break;
      case Phase::await_approval: step(q, action::Approve{}); break;
      case Phase::answerer_marking: step(a, action::Ready{}); break;
      case Phase::answering: step(a, action::Answer{s.word->word()}); break;
      case Phase::reveal: step(a, action::Proceed{}); break;
      default: step("system", action::Tick{}); break;
    }
  }
  const auto log = s.log;
  for (auto _ : state) benchmark::DoNotOptimize(engine.replay(log));
  state.counters["events"] = static_cast<double>(log.size());
}
BENCHMARK(BM_EngineReplay);

}  // namespace
BENCHMARK_MAIN();

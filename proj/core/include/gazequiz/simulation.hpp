#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazequiz/app_config.hpp"
#include "gazequiz/evaluation.hpp"
#include "gazequiz/session_host.hpp"
#include "gazequiz/store.hpp"

namespace gazequiz {

/// Head-worn eye tracker: a scene camera above the eye, facing the board,
/// sees the board markers and reports where the gaze lands in its image.
struct EyeTrackerModel {
  CameraIntrinsics scene{766.0, 766.0, 544.0, 540.0, 1088, 1080};
  Vec3 camera_offset_mm{0.0, -20.0, 0.0};  // from the eye, board frame
  std::vector<Point2> markers_mm{{-330.0, -170.0}, {0.0, -170.0}, {330.0, -170.0},
                                 {-330.0, 170.0},  {0.0, 170.0},  {330.0, 170.0}};
  double corner_noise_px = 0.0;
};

/// Record for a gaze ray from `eye_board_mm` along `gaze_dir_board`. Throws
/// DegenerateGeometry when the ray misses the board plane.
EvalRecord synthesize_eval_record(const std::string& sample_id, const std::string& participant_id,
                                  const Vec3& eye_board_mm, const Vec3& gaze_dir_board, const EyeTrackerModel& model,
                                  Rng& rng);

/// Noise sigma whose mean angular deviation equals `mean_deg`.
double sigma_for_mean_error(double mean_deg);

struct SyntheticCondition {
  std::vector<GazeSample> samples;
  std::vector<EvalRecord> records;
};

/// Samples of one collection condition with eye-tracker records whose gaze
/// deviates from the target by the noise model. Gamified samples target
/// random board letters, standard samples random stimulus points. No
/// images are produced.
SyntheticCondition synthesize_condition(const BoardLayout& board, Mode mode, std::size_t n_samples,
                                        std::size_t n_participants, double sigma_deg, std::uint64_t seed,
                                        const EyeTrackerModel& model = {});

struct PlayerSpec {
  bool wearing_eyetracker = false;
  bool exclude_from_dataset = false;
};

struct BotPolicy {
  double reject_rate = 0.0;    // questioner rejects an image
  int max_rejects = 2;         // per letter
  double correct_rate = 1.0;   // answerer knows the word
  double timeout_rate = 0.0;   // answerer lets the timer run out
  double mark_rate = 1.0;      // answerer marks the board before moving on
  double mark_noise_mm = 20.0;
  std::int64_t min_think_ms = 300;
  std::int64_t max_think_ms = 4000;
  std::int64_t tick_ms = 250;       // host tick spacing while waiting
  double disconnect_rate = 0.0;     // per bot action
  std::int64_t max_disconnect_ms = 5000;
  double stray_rate = 0.0;          // out-of-turn or malformed messages
};

/// Random policy for protocol fuzzing.
BotPolicy random_policy(std::uint64_t seed);

struct SimulatedGame {
  std::string session_id;
  std::vector<std::string> participant_ids;
  std::vector<std::string> tokens;
  std::vector<SessionEvent> log;
  std::vector<TraceEntry> trace;
  std::vector<Outbound> messages;
  std::vector<std::string> approved_captures;
  std::string finish_reason;
  int score = 0;
  std::size_t unsaved = 0;
  std::size_t errors = 0;  // error replies to bots
  std::int64_t end_ms = 0;
};

/// Plays one session to the end through the message protocol with bots on
/// a virtual clock. Gamified sessions take two players, standard one.
SimulatedGame play_session(SessionRuntime& runtime, Mode mode, const std::vector<PlayerSpec>& players,
                           const BotPolicy& policy, std::uint64_t seed, std::int64_t start_ms = 0);

/// Eye-tracker record for an approved capture, built from the frame's
/// ground truth: the subject's actual eye position and gaze.
std::optional<EvalRecord> eval_record_for_capture(const SessionRuntime& runtime, const std::string& capture_id,
                                                  const Calibration& calibration, const EyeTrackerModel& model, Rng& rng);

struct BatchOptions {
  Mode mode = Mode::gamified;
  std::size_t sessions = 20;  // pairs, or single participants in standard mode
  double gaze_sigma_deg = 2.8;
  double estimator_noise_deg = 5.0;
  std::uint64_t seed = 1;
  BotPolicy policy;
  std::filesystem::path store_root;  // empty: a temporary store, removed afterwards
};

struct BatchResult {
  std::vector<SimulatedGame> games;
  std::vector<GazeSample> samples;
  std::vector<EvalRecord> records;
  std::size_t words = 0;
  std::size_t samples_without_approval = 0;
  std::map<std::string, std::size_t> samples_per_word;  // "<session>/<word_index>"
};

/// Sessions whose subjects fixate each target with angular noise
/// gaze_sigma_deg. Every persisted sample gets an eye-tracker record.
BatchResult simulate_batch(const AppConfig& config, const BatchOptions& options);

struct PopulationOptions {
  std::size_t participants = 47;
  std::size_t eyetracker_wearers = 22;
  std::size_t lost_samples = 1;  // persistence failures, charged to wearers
  std::uint64_t seed = 1;
};

struct PopulationResult {
  std::vector<Participant> participants;  // real participants, staff excluded
  std::vector<std::string> staff;
  std::size_t sessions = 0;
  std::size_t unsaved = 0;
};

/// Pairs participants into gamified sessions written to `store`. An odd
/// participant out plays with a staff member flagged exclude_from_dataset.
PopulationResult simulate_population(const AppConfig& config, SessionStore& store, const PopulationOptions& options);

}  // namespace gazequiz

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gazequiz/board.hpp"
#include "gazequiz/camera.hpp"
#include "gazequiz/engine.hpp"
#include "gazequiz/image.hpp"
#include "gazequiz/normalization.hpp"

namespace gazequiz {

/// Ground truth attached by synthetic sources. Real sources leave it empty.
struct SyntheticTruth {
  Vec3 face_center_camera_mm = Vec3::Zero();
  Vec3 gaze_camera = Vec3::UnitZ();  // unit, from the face center
  bool eyes_closed = false;
};

struct Frame {
  GrayImage image;
  std::int64_t timestamp_ms = 0;
  std::string camera_id;
  std::uint64_t sequence = 0;  // running count, or a hash of the request id
  std::optional<SyntheticTruth> truth;
};

struct FrameSourceInfo {
  std::string camera_id;
  int width = 0;
  int height = 0;
  bool reentrant = false;
};

struct GrabRequest {
  std::int64_t t_ms = 0;
  std::chrono::milliseconds deadline{1000};
  /// Identifies the capture; simulated sources derive their randomness
  /// from it so results do not depend on call order.
  std::string request_id;
  /// Where the subject was asked to look. Only simulated sources read it.
  std::optional<Vec3> target_board_mm;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual FrameSourceInfo info() const = 0;
  /// Throws Error(DriverTimeout) when no frame arrives within the deadline.
  virtual Frame grab(const GrabRequest& request) = 0;
};

struct FaceObservation {
  Vec3 face_center_camera_mm = Vec3::Zero();
  double face_distance_mm = 0.0;
  std::vector<Vec2> landmarks;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  /// At most one face; nullopt when none is found.
  virtual std::optional<FaceObservation> detect(const Frame& frame) = 0;
};

struct GazeEstimate {
  Vec3 gaze_norm = -Vec3::UnitZ();  // unit, normalized camera frame
  double confidence = 1.0;
};

class GazeEstimator {
 public:
  virtual ~GazeEstimator() = default;
  /// nullopt (or an exception) means no estimate; the capture still counts.
  virtual std::optional<GazeEstimate> estimate(const GrayImage& normalized_image, const NormalizedSampleGeometry& geometry,
                                               const Frame& frame) = 0;
};

/// Origin of the label ray in the camera frame.
enum class LabelOrigin { face_center, camera };

struct CaptureSettings {
  NormalizationParams normalization;
  LabelOrigin label_origin = LabelOrigin::face_center;
  std::chrono::milliseconds grab_deadline{1000};
};

struct GazeSample {
  std::string sample_id;
  std::string session_id;
  std::string participant_id;
  std::string mode;  // "gamified" | "standard"
  std::optional<std::string> letter_id;
  std::optional<Point2> stimulus_xy_mm;
  Vec3 label_vec = Vec3::UnitZ();  // camera frame, unit
  double label_pitch_rad = 0.0;    // normalized frame
  double label_yaw_rad = 0.0;
  std::string image_ref;
  std::string normalized_image_ref;
  std::optional<Vec3> estimator_vec;  // camera frame, unit
  std::optional<std::string> eyetracker_ref;
  bool wearing_eyetracker = false;
  std::int64_t captured_at_ms = 0;
  Side camera_side = Side::A;
};

struct CaptureContext {
  std::string capture_id;
  std::string session_id;
  std::string participant_id;
  Mode mode = Mode::gamified;
  Side side = Side::A;
  std::int64_t t_ms = 0;
  bool wearing_eyetracker = false;
};

struct CaptureDrivers {
  FrameSource* source = nullptr;
  FaceDetector* detector = nullptr;
  GazeEstimator* estimator = nullptr;  // optional
};

/// Result held in memory until the questioner approves; nothing is written
/// to disk here. On no_face only `image` is set.
struct CaptureOutcome {
  bool no_face = false;
  GrayImage image;
  GrayImage normalized_image;
  std::optional<GazeSample> sample;  // image refs empty until persisted
  std::optional<NormalizedSampleGeometry> geometry;
  /// Estimated gaze as an arrow from the normalized image center, in
  /// normalized image coordinates ([0,1] x [0,1], y down).
  std::optional<Point2> gaze_arrow_end;
  std::optional<SyntheticTruth> truth;  // copied from the frame
};

/// Board-frame point a capture target refers to.
Vec3 target_board_point(const BoardLayout& board, const CaptureTarget& target);

/// Grabs, detects, labels and normalizes one frame. Throws
/// Error(DriverTimeout) when the source times out; estimator failures only
/// leave estimator_vec empty.
CaptureOutcome capture(const CaptureContext& ctx, const CaptureTarget& target, const BoardLayout& board,
                       const CameraCalibration& camera, const CaptureDrivers& drivers, const CaptureSettings& settings);

/// Arrow endpoint for a normalized-frame gaze: center plus half the image
/// per unit of lateral displacement.
Point2 gaze_arrow(const Vec3& gaze_norm);

}  // namespace gazequiz

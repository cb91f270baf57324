#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <set>
#include <string>

#include "gazequiz/capture.hpp"
#include "gazequiz/rng.hpp"

namespace gazequiz {

/// Rotates `dir` by an angle whose tangent-plane offset is an isotropic 2D
/// Gaussian with per-axis sd sigma/sqrt(2) degrees, so sigma is the RMS
/// angular deviation. The deviation magnitude is Rayleigh distributed.
Vec3 perturb_direction(const Vec3& dir, double sigma_deg, Rng& rng);

/// Mean angular deviation of perturb_direction: sigma * sqrt(pi) / 2.
double expected_angular_noise_deg(double sigma_deg);

/// Uniform direction on the hemisphere around `pole`.
Vec3 random_hemisphere_direction(const Vec3& pole, Rng& rng);

struct SyntheticScenario {
  std::string camera_id = "synthetic-A";
  CameraCalibration camera;
  Vec3 face_center_board_mm{0.0, 0.0, 600.0};
  double head_jitter_mm = 0.0;      // per-frame Gaussian sd on each axis
  double fixation_error_deg = 0.0;  // subject's own miss of the target, RMS
  double blink_rate = 0.0;
  double absent_rate = 0.0;
  std::set<std::uint64_t> blink_frames;   // by sequence number
  std::set<std::uint64_t> absent_frames;
  std::chrono::milliseconds latency{0};  // grabs time out when latency > deadline
  std::uint64_t seed = 0;
};

/// Scenario for the webcam facing `side` in the default rig.
SyntheticScenario default_scenario(Side side, const Calibration& calibration, std::uint64_t seed = 0);

/// Renders an ellipse head with two eyes whose irises are displaced along
/// the true gaze. Deterministic per (seed, sequence); reentrant.
class SyntheticFrameSource : public FrameSource {
 public:
  explicit SyntheticFrameSource(SyntheticScenario scenario);

  FrameSourceInfo info() const override;
  Frame grab(const GrabRequest& request) override;

  const SyntheticScenario& scenario() const { return scenario_; }

 private:
  SyntheticScenario scenario_;
  std::atomic<std::uint64_t> next_sequence_{0};
};

/// Finds the bright head blob. Uses the frame's ground truth for the 3D
/// face center when present, otherwise back-projects the blob assuming an
/// average head size.
class SyntheticFaceDetector : public FaceDetector {
 public:
  explicit SyntheticFaceDetector(CameraIntrinsics intrinsics, int min_pixels = 40);
  std::optional<FaceObservation> detect(const Frame& frame) override;

 private:
  CameraIntrinsics intrinsics_;
  int min_pixels_;
};

/// True gaze plus angular noise; with probability outlier_rate a uniform
/// direction in the hemisphere facing the camera instead.
class SyntheticGazeEstimator : public GazeEstimator {
 public:
  SyntheticGazeEstimator(double noise_deg, double outlier_rate, std::uint64_t seed);
  std::optional<GazeEstimate> estimate(const GrayImage& normalized_image, const NormalizedSampleGeometry& geometry,
                                       const Frame& frame) override;

 private:
  double noise_deg_;
  double outlier_rate_;
  std::uint64_t seed_;
};

}  // namespace gazequiz

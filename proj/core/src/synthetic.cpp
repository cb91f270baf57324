#include "gazequiz/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "gazequiz/error.hpp"
#include "gazequiz/geometry.hpp"

namespace gazequiz {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHeadHalfWidthMm = 75.0;
constexpr double kHeadHalfHeightMm = 95.0;
constexpr double kEyeSpacingMm = 32.0;
constexpr double kEyeRadiusMm = 12.0;
constexpr double kIrisRadiusMm = 5.0;
constexpr double kIrisTravelMm = 7.0;
constexpr std::uint8_t kBackground = 40;
constexpr std::uint8_t kSkin = 170;
constexpr std::uint8_t kSclera = 235;
constexpr std::uint8_t kIris = 25;
constexpr int kBrightThreshold = 120;

void fill_ellipse(GrayImage& img, double cu, double cv, double a, double b, std::uint8_t value) {
  if (a <= 0.0 || b <= 0.0) return;
  const int u0 = std::max(0, static_cast<int>(std::floor(cu - a)));
  const int u1 = std::min(img.width - 1, static_cast<int>(std::ceil(cu + a)));
  const int v0 = std::max(0, static_cast<int>(std::floor(cv - b)));
  const int v1 = std::min(img.height - 1, static_cast<int>(std::ceil(cv + b)));
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const double du = (u + 0.5 - cu) / a;
      const double dv = (v + 0.5 - cv) / b;
      if (du * du + dv * dv <= 1.0) img.at(u, v) = value;
    }
  }
}

Vec2 project(const CameraIntrinsics& k, const Vec3& p) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

/// Any unit vector perpendicular to v.
Vec3 perpendicular(const Vec3& v) {
  const Vec3 helper = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return v.cross(helper).normalized();
}

}  // namespace

Vec3 perturb_direction(const Vec3& dir, double sigma_deg, Rng& rng) {
  const Vec3 d = dir.normalized();
  const double per_axis = sigma_deg / std::sqrt(2.0);
  const double a = per_axis * rng.normal();
  const double b = per_axis * rng.normal();
  const double theta = deg2rad(std::hypot(a, b));
  if (theta == 0.0) return d;
  const Vec3 u = perpendicular(d);
  const Vec3 w = d.cross(u);
  const Vec3 tangent = (a * u + b * w).normalized();
  return (std::cos(theta) * d + std::sin(theta) * tangent).normalized();
}

double expected_angular_noise_deg(double sigma_deg) { return sigma_deg * std::sqrt(kPi) / 2.0; }

Vec3 random_hemisphere_direction(const Vec3& pole, Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-12);
  v.normalize();
  return v.dot(pole) < 0.0 ? -v : v;
}

SyntheticScenario default_scenario(Side side, const Calibration& calibration, std::uint64_t seed) {
  SyntheticScenario s;
  s.camera_id = std::string("synthetic-") + std::string(to_string(side));
  s.camera = calibration.at(side);
  s.face_center_board_mm = side == Side::A ? Vec3(0.0, 0.0, 600.0) : Vec3(0.0, 0.0, -600.0);
  s.seed = derive_seed(seed, s.camera_id);
  return s;
}

SyntheticFrameSource::SyntheticFrameSource(SyntheticScenario scenario) : scenario_(std::move(scenario)) {
  scenario_.camera.intrinsics.validate();
}

FrameSourceInfo SyntheticFrameSource::info() const {
  return {scenario_.camera_id, scenario_.camera.intrinsics.image_w, scenario_.camera.intrinsics.image_h, true};
}

Frame SyntheticFrameSource::grab(const GrabRequest& request) {
  const std::uint64_t counter = next_sequence_.fetch_add(1);
  const std::uint64_t seq = request.request_id.empty() ? counter : derive_seed(0, request.request_id);
  if (scenario_.latency > request.deadline) {
    throw Error(ErrorCode::DriverTimeout, "frame source " + scenario_.camera_id + " did not deliver within " +
                                              std::to_string(request.deadline.count()) + " ms");
  }
  Rng rng(derive_seed(scenario_.seed, "frame", seq));
  const CameraIntrinsics& k = scenario_.camera.intrinsics;
  const CameraPose& pose = scenario_.camera.pose;

  Frame frame;
  frame.timestamp_ms = request.t_ms;
  frame.camera_id = scenario_.camera_id;
  frame.sequence = seq;
  frame.image = GrayImage(k.image_w, k.image_h, kBackground);
  for (auto& px : frame.image.pixels) px = static_cast<std::uint8_t>(kBackground + rng.uniform_index(16));

  const bool absent = scenario_.absent_frames.count(seq) != 0 || rng.bernoulli(scenario_.absent_rate);
  const bool blink = scenario_.blink_frames.count(seq) != 0 || rng.bernoulli(scenario_.blink_rate);
  if (absent) return frame;

  Vec3 face_board = scenario_.face_center_board_mm;
  if (scenario_.head_jitter_mm > 0.0) {
    face_board += scenario_.head_jitter_mm * Vec3(rng.normal(), rng.normal(), rng.normal());
  }
  const Vec3 face_cam = pose.to_camera(face_board);
  if (face_cam.z() <= kHeadHalfWidthMm) return frame;  // behind or inside the camera: nothing visible

  Vec3 gaze_board = request.target_board_mm ? Vec3(*request.target_board_mm - face_board)
                                            : Vec3(pose.camera_origin_board() - face_board);
  gaze_board.normalize();
  if (scenario_.fixation_error_deg > 0.0) gaze_board = perturb_direction(gaze_board, scenario_.fixation_error_deg, rng);
  const Vec3 gaze_cam = (pose.rotation() * gaze_board).normalized();

  const Vec2 c = project(k, face_cam);
  const double scale = k.fx / face_cam.z();
  fill_ellipse(frame.image, c.x(), c.y(), kHeadHalfWidthMm * scale, kHeadHalfHeightMm * k.fy / face_cam.z(), kSkin);
  for (const double side : {-1.0, 1.0}) {
    const Vec3 eye_cam = face_cam + Vec3(side * kEyeSpacingMm, 0.0, 0.0);
    const Vec2 e = project(k, eye_cam);
    const double r = kEyeRadiusMm * k.fx / eye_cam.z();
    if (blink) {
      fill_ellipse(frame.image, e.x(), e.y(), r, std::max(0.6, 0.15 * r), kIris);
      continue;
    }
    fill_ellipse(frame.image, e.x(), e.y(), r, r, kSclera);
    const Vec3 iris_cam = eye_cam + kIrisTravelMm * Vec3(gaze_cam.x(), gaze_cam.y(), 0.0);
    const Vec2 i = project(k, iris_cam);
    const double ri = kIrisRadiusMm * k.fx / iris_cam.z();
    fill_ellipse(frame.image, i.x(), i.y(), ri, ri, kIris);
  }

  frame.truth = SyntheticTruth{face_cam, gaze_cam, blink};
  return frame;
}

SyntheticFaceDetector::SyntheticFaceDetector(CameraIntrinsics intrinsics, int min_pixels)
    : intrinsics_(intrinsics), min_pixels_(min_pixels) {
  intrinsics_.validate();
}

std::optional<FaceObservation> SyntheticFaceDetector::detect(const Frame& frame) {
  double su = 0.0;
  double sv = 0.0;
  int count = 0;
  for (int v = 0; v < frame.image.height; ++v) {
    for (int u = 0; u < frame.image.width; ++u) {
      if (frame.image.at(u, v) >= kBrightThreshold) {
        su += u + 0.5;
        sv += v + 0.5;
        ++count;
      }
    }
  }
  if (count < min_pixels_) return std::nullopt;

  FaceObservation obs;
  if (frame.truth) {
    obs.face_center_camera_mm = frame.truth->face_center_camera_mm;
  } else {
    const double r_px = std::sqrt(count / kPi);
    const double distance = intrinsics_.fx * std::sqrt(kHeadHalfWidthMm * kHeadHalfHeightMm) / r_px;
    const Vec3 ray((su / count - intrinsics_.cx) / intrinsics_.fx, (sv / count - intrinsics_.cy) / intrinsics_.fy, 1.0);
    obs.face_center_camera_mm = distance * ray.normalized();
  }
  obs.face_distance_mm = obs.face_center_camera_mm.norm();
  obs.landmarks.push_back({su / count, sv / count});
  return obs;
}

SyntheticGazeEstimator::SyntheticGazeEstimator(double noise_deg, double outlier_rate, std::uint64_t seed)
    : noise_deg_(noise_deg), outlier_rate_(outlier_rate), seed_(seed) {
  if (!(noise_deg >= 0.0) || !(outlier_rate >= 0.0 && outlier_rate <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "estimator noise must be >= 0 and outlier rate in [0, 1]");
  }
}

std::optional<GazeEstimate> SyntheticGazeEstimator::estimate(const GrayImage&, const NormalizedSampleGeometry& geometry,
                                                             const Frame& frame) {
  if (!frame.truth) return std::nullopt;
  Rng rng(derive_seed(seed_, frame.camera_id, frame.sequence));
  const Vec3 truth_norm = (geometry.rotation * frame.truth->gaze_camera).normalized();
  GazeEstimate est;
  if (rng.bernoulli(outlier_rate_)) {
    // the face looks along -z of the normalized camera
    est.gaze_norm = random_hemisphere_direction(-Vec3::UnitZ(), rng);
    est.confidence = 0.2;
  } else {
    est.gaze_norm = perturb_direction(truth_norm, noise_deg_, rng);
  }
  return est;
}

}  // namespace gazequiz

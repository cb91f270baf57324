#pragma once

#include <span>
#include <utility>

#include "gazequiz/camera.hpp"
#include "gazequiz/types.hpp"

namespace gazequiz {

/// Unit direction from `eye_origin_camera_mm` to a board point, in the
/// camera frame. The eye origin defaults to the camera center.
Vec3 gaze_label(const CameraPose& pose, const Vec3& target_board_mm, const Vec3& eye_origin_camera_mm = Vec3::Zero());

/// Angle between two directions in degrees, in [0, 180]. Inputs are
/// renormalized; a zero vector throws DegenerateGeometry.
double angular_error_deg(const Vec3& v1, const Vec3& v2);

/// Projective map from scene-image pixels to board millimeters.
class Homography {
 public:
  /// Normalizes so h(2,2) = 1 when that entry is nonzero, else to unit
  /// Frobenius norm. Throws DegenerateConfiguration when singular.
  explicit Homography(const Mat3& h);

  const Mat3& matrix() const { return h_; }
  Homography inverse() const { return Homography(h_.inverse()); }

 private:
  Mat3 h_;
};

struct Correspondence {
  Vec2 image_px;
  Vec2 board_mm;
};

/// Normalized DLT with Hartley conditioning; least squares for more than
/// four correspondences.
Homography estimate_homography(std::span<const Correspondence> correspondences);

/// Board-plane (z = 0) to image homography K [r1 r2 t] for a known pose.
Mat3 board_to_image_homography(const CameraPose& pose, const CameraIntrinsics& k);

/// Planar pose recovery from an image->board homography: B = K^-1 H^-1,
/// columns scaled by the mean of |b1| and |b2|, rotation projected onto
/// SO(3), sign chosen so the board lies in front of the camera.
CameraPose pose_from_homography(const Homography& image_to_board, const CameraIntrinsics& k);

struct BoardHit {
  Vec2 board_mm;
  bool outside_image = false;
};

/// Throws PointAtInfinity when the homogeneous w is below 1e-12.
Vec2 map_gaze_to_board(const Vec2& gaze_px, const Homography& h);
BoardHit map_gaze_to_board(const Vec2& gaze_px, const Homography& h, const CameraIntrinsics& k);

/// Pitch/yaw in radians for a gaze that points back toward the camera:
/// pitch = asin(-y), yaw = atan2(-x, -z). Degenerate at |pitch| = pi/2,
/// where yaw is reported as atan2 of the residual components.
std::pair<double, double> vector_to_pitchyaw(const Vec3& v);
Vec3 pitchyaw_to_vector(double pitch, double yaw);

inline double deg2rad(double d) { return d * 3.14159265358979323846 / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / 3.14159265358979323846; }

}  // namespace gazequiz

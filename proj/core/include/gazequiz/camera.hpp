#pragma once

#include <filesystem>
#include <map>

#include <nlohmann/json_fwd.hpp>

#include "gazequiz/board.hpp"
#include "gazequiz/types.hpp"

namespace gazequiz {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int image_w = 0;
  int image_h = 0;

  /// Throws InvalidIntrinsics when fx, fy <= 0 or the principal point lies
  /// outside the image.
  void validate() const;
  Mat3 matrix() const;
  bool contains(const Vec2& px) const {
    return px.x() >= 0.0 && px.y() >= 0.0 && px.x() < image_w && px.y() < image_h;
  }
};

/// Rigid transform from the board frame into a camera frame.
class CameraPose {
 public:
  CameraPose() = default;
  /// Rejects rotations that are not orthonormal with det +1 (tol 1e-9).
  CameraPose(const Mat3& rotation, const Vec3& translation_mm);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation_mm() const { return translation_; }

  Vec3 to_camera(const Vec3& board_point) const { return rotation_ * board_point + translation_; }
  /// Camera center expressed in the board frame, -R^T t.
  Vec3 camera_origin_board() const { return -rotation_.transpose() * translation_; }

  /// Camera placed at `origin_board` looking at `target_board`, image y
  /// aligned with board +y as far as the viewing direction allows.
  static CameraPose look_at(const Vec3& origin_board, const Vec3& target_board, const Vec3& down_hint = Vec3::UnitY());

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

struct CameraCalibration {
  CameraIntrinsics intrinsics;
  CameraPose pose;
};

/// Intrinsics and extrinsics of the webcam facing each side's player.
using Calibration = std::map<Side, CameraCalibration>;

Calibration parse_calibration(const nlohmann::json& doc);
Calibration load_calibration(const std::filesystem::path& path);
nlohmann::json calibration_to_json(const Calibration& calibration);

/// Default rig: 320x240 webcams mounted 180 mm below the board center on
/// each side, looking out toward that side's player.
Calibration default_calibration();

void to_json(nlohmann::json& j, const CameraIntrinsics& k);
void from_json(const nlohmann::json& j, CameraIntrinsics& k);

}  // namespace gazequiz

#include "gazequiz/normalization.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "gazequiz/error.hpp"

namespace gazequiz {

void NormalizationParams::validate() const {
  if (!(focal_norm > 0.0) || !(distance_norm > 0.0) || size_norm <= 0) {
    throw Error(ErrorCode::ConfigError, "normalization parameters must be positive");
  }
}

Mat3 NormalizationParams::camera_matrix() const {
  const double c = size_norm / 2.0;
  Mat3 k;
  k << focal_norm, 0.0, c, 0.0, focal_norm, c, 0.0, 0.0, 1.0;
  return k;
}

Mat3 normalization_rotation(const Vec3& face_center_camera_mm) {
  const double n = face_center_camera_mm.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "face center at the camera origin");
  const Vec3 z = face_center_camera_mm / n;
  const Vec3 x_raw = Vec3::UnitY().cross(z);
  const double xn = x_raw.norm();
  if (xn < 1e-12) throw Error(ErrorCode::DegenerateGeometry, "face center parallel to the camera y axis");
  const Vec3 x = x_raw / xn;
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

Vec3 normalize_gaze(const Mat3& rotation, const Vec3& gaze_camera) { return (rotation * gaze_camera).normalized(); }

Mat3 normalization_warp(const CameraIntrinsics& k_real, const NormalizationParams& params, const Mat3& rotation,
                        double face_distance_mm) {
  if (!(face_distance_mm > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "face distance must be positive");
  const Mat3 k = k_real.matrix();
  if (!(k_real.fx > 0.0) || !(k_real.fy > 0.0) || std::abs(k.determinant()) < 1e-12) {
    throw Error(ErrorCode::InvalidIntrinsics, "camera matrix is singular");
  }
  const Mat3 scale = Eigen::Vector3d(1.0, 1.0, params.distance_norm / face_distance_mm).asDiagonal();
  return params.camera_matrix() * scale * rotation * k.inverse();
}

GrayImage warp_image(const GrayImage& image, const Mat3& transform, int out_w, int out_h) {
  GrayImage out(out_w, out_h, 0);
  const Mat3 inv = transform.inverse();
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Vec3 src = inv * Vec3(x, y, 1.0);
      if (std::abs(src.z()) < 1e-12) continue;
      const double sx = src.x() / src.z();
      const double sy = src.y() / src.z();
      if (!(sx >= 0.0) || !(sy >= 0.0) || sx > image.width - 1 || sy > image.height - 1) continue;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, image.width - 1);
      const int y1 = std::min(y0 + 1, image.height - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const double top = (1.0 - fx) * image.at(x0, y0) + fx * image.at(x1, y0);
      const double bottom = (1.0 - fx) * image.at(x0, y1) + fx * image.at(x1, y1);
      const double value = (1.0 - fy) * top + fy * bottom;
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
  }
  return out;
}

}  // namespace gazequiz

#pragma once

#include "gazequiz/camera.hpp"
#include "gazequiz/image.hpp"
#include "gazequiz/types.hpp"

namespace gazequiz {

/// Canonical virtual camera for appearance-based gaze data. Defaults are
/// common community values, not measured constants.
struct NormalizationParams {
  double focal_norm = 960.0;     // px
  double distance_norm = 600.0;  // mm
  int size_norm = 224;           // px, square output

  void validate() const;
  Mat3 camera_matrix() const;
};

struct NormalizedSampleGeometry {
  Mat3 rotation;  // camera -> normalized camera
  Mat3 warp;      // original pixels -> normalized pixels
  Vec3 gaze_norm;
};

/// Rotation whose third row is the face direction and whose x axis is
/// perpendicular to the original camera y axis, cancelling roll.
Mat3 normalization_rotation(const Vec3& face_center_camera_mm);

Vec3 normalize_gaze(const Mat3& rotation, const Vec3& gaze_camera);

/// K_norm * diag(1, 1, distance_norm / face_distance) * R * K_real^-1.
Mat3 normalization_warp(const CameraIntrinsics& k_real, const NormalizationParams& params, const Mat3& rotation,
                        double face_distance_mm);

/// Inverse-mapped bilinear resampling. Pixels whose source falls outside
/// the input are 0.
GrayImage warp_image(const GrayImage& image, const Mat3& transform, int out_w, int out_h);
inline GrayImage warp_image(const GrayImage& image, const Mat3& transform, const NormalizationParams& params) {
  return warp_image(image, transform, params.size_norm, params.size_norm);
}

}  // namespace gazequiz

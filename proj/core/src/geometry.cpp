#include "gazequiz/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "gazequiz/error.hpp"

namespace gazequiz {

Vec3 gaze_label(const CameraPose& pose, const Vec3& target_board_mm, const Vec3& eye_origin_camera_mm) {
  const Vec3 direction = pose.to_camera(target_board_mm) - eye_origin_camera_mm;
  const double n = direction.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::DegenerateGeometry, "gaze target coincides with eye origin");
  return direction / n;
}

double angular_error_deg(const Vec3& v1, const Vec3& v2) {
  const double n1 = v1.norm();
  const double n2 = v2.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "angular error of a zero vector");
  const Vec3 a = v1 / n1;
  const Vec3 b = v2 / n2;
  // atan2 of |a x b| and a.b stays accurate near 0 and 180 degrees, where
  // acos of the clamped dot product loses half the significant digits.
  const double angle = std::atan2(a.cross(b).norm(), std::clamp(a.dot(b), -1.0, 1.0));
  return rad2deg(angle);
}

Homography::Homography(const Mat3& h) {
  if (!h.allFinite()) throw Error(ErrorCode::DegenerateConfiguration, "homography has non-finite entries");
  if (std::abs(h(2, 2)) > 1e-12 * h.norm()) {
    h_ = h / h(2, 2);
  } else {
    const double n = h.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::DegenerateConfiguration, "zero homography");
    h_ = h / n;
  }
  const double scale = h_.norm();
  if (std::abs(h_.determinant()) < 1e-12 * scale * scale * scale) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography is singular");
  }
}

namespace {

// Translate to the centroid and scale so the mean distance is sqrt(2).
Mat3 conditioning(const std::vector<Vec2>& pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) throw Error(ErrorCode::DegenerateConfiguration, "all correspondence points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 t;
  t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return t;
}

bool collinear(const Vec2& a, const Vec2& b, const Vec2& c, double scale) {
  const Vec2 u = b - a;
  const Vec2 v = c - a;
  return std::abs(u.x() * v.y() - u.y() * v.x()) <= 1e-9 * scale * scale;
}

void reject_collinear_quad(const std::vector<Vec2>& pts, const char* which) {
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, (p - pts[0]).norm());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      for (std::size_t k = j + 1; k < 4; ++k)
        if (collinear(pts[i], pts[j], pts[k], scale)) {
          throw Error(ErrorCode::DegenerateConfiguration, std::string("three collinear ") + which + " points");
        }
}

}  // namespace

Homography estimate_homography(std::span<const Correspondence> correspondences) {
  const std::size_t n = correspondences.size();
  if (n < 4) throw Error(ErrorCode::InsufficientData, "homography needs at least 4 correspondences, got " + std::to_string(n));

  std::vector<Vec2> src(n);
  std::vector<Vec2> dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = correspondences[i].image_px;
    dst[i] = correspondences[i].board_mm;
    if (!src[i].allFinite() || !dst[i].allFinite()) {
      throw Error(ErrorCode::DegenerateConfiguration, "non-finite correspondence");
    }
  }
  if (n == 4) {
    reject_collinear_quad(src, "image");
    reject_collinear_quad(dst, "board");
  }

  const Mat3 t_src = conditioning(src);
  const Mat3 t_dst = conditioning(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = t_src * src[i].homogeneous();
    const Vec3 q = t_dst * dst[i].homogeneous();
    const double x = p.x(), y = p.y(), w = p.z();
    const double u = q.x() / q.z(), v = q.y() / q.z();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << 0.0, 0.0, 0.0, -x, -y, -w, v * x, v * y, v * w;
    a.row(r + 1) << x, y, w, 0.0, 0.0, 0.0, -u * x, -u * y, -u * w;
  }

  // The null vector of A is the right singular vector of the smallest
  // singular value. Pad to 9 rows so the full V is available for n = 4.
  Eigen::MatrixXd padded = a;
  if (padded.rows() < 9) {
    padded.conservativeResize(9, 9);
    padded.bottomRows(9 - a.rows()).setZero();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(padded, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(7) < 1e-10 * sv(0)) {
    throw Error(ErrorCode::DegenerateConfiguration, "rank-deficient homography design matrix");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(t_dst.inverse() * hn * t_src);
}

Mat3 board_to_image_homography(const CameraPose& pose, const CameraIntrinsics& k) {
  Mat3 rt;
  rt.col(0) = pose.rotation().col(0);
  rt.col(1) = pose.rotation().col(1);
  rt.col(2) = pose.translation_mm();
  return k.matrix() * rt;
}

CameraPose pose_from_homography(const Homography& image_to_board, const CameraIntrinsics& k) {
  k.validate();
  const Mat3 b = k.matrix().inverse() * image_to_board.matrix().inverse();
  const double n1 = b.col(0).norm();
  const double n2 = b.col(1).norm();
  const double lambda = 0.5 * (n1 + n2);
  if (!(lambda > 1e-15) || std::min(n1, n2) < 1e-9 * lambda) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography does not decompose into a planar pose");
  }
  double sign = b(2, 2) >= 0.0 ? 1.0 : -1.0;  // board in front: t_z > 0
  const Vec3 r1 = sign * b.col(0) / lambda;
  const Vec3 r2 = sign * b.col(1) / lambda;
  const Vec3 t = sign * b.col(2) / lambda;
  Mat3 r_approx;
  r_approx.col(0) = r1;
  r_approx.col(1) = r2;
  r_approx.col(2) = r1.cross(r2);

  Eigen::JacobiSVD<Mat3> svd(r_approx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  if (!r.allFinite() || !t.allFinite()) throw Error(ErrorCode::DegenerateConfiguration, "non-finite pose");
  return CameraPose(r, t);
}

Vec2 map_gaze_to_board(const Vec2& gaze_px, const Homography& h) {
  const Vec3 p = h.matrix() * gaze_px.homogeneous();
  if (std::abs(p.z()) < 1e-12) throw Error(ErrorCode::PointAtInfinity, "gaze maps to a point at infinity");
  return p.hnormalized();
}

BoardHit map_gaze_to_board(const Vec2& gaze_px, const Homography& h, const CameraIntrinsics& k) {
  return {map_gaze_to_board(gaze_px, h), !k.contains(gaze_px)};
}

std::pair<double, double> vector_to_pitchyaw(const Vec3& v) {
  const Vec3 u = v.normalized();
  const double pitch = std::asin(std::clamp(-u.y(), -1.0, 1.0));
  const double yaw = std::atan2(-u.x(), -u.z());
  return {pitch, yaw};
}

Vec3 pitchyaw_to_vector(double pitch, double yaw) {
  return {-std::cos(pitch) * std::sin(yaw), -std::sin(pitch), -std::cos(pitch) * std::cos(yaw)};
}

}  // namespace gazequiz

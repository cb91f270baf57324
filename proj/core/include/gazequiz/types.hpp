#pragma once

#include <Eigen/Dense>

namespace gazequiz {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Plain 2D point used in serialized state (sessions, events, messages),
/// where value equality and trivially copyable layout matter more than
/// linear algebra.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Vec2 to_vec(const Point2& p) { return {p.x, p.y}; }
inline Point2 to_point(const Vec2& v) { return {v.x(), v.y()}; }

}  // namespace gazequiz

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gazequiz/error.hpp"
#include "gazequiz/geometry.hpp"
#include "gazequiz/rng.hpp"
#include "oracles.hpp"

using namespace gazequiz;

namespace {

oracle::V3 arr(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

oracle::M3 arr(const Mat3& m) {
  oracle::M3 out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[r][c] = m(r, c);
  }
  return out;
}

Mat3 eig(const oracle::M3& m) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out(r, c) = m[r][c];
  }
  return out;
}

Vec3 random_unit(Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

CameraPose random_pose(Rng& rng) {
  const Mat3 r = eig(oracle::axis_angle(arr(random_unit(rng)), rng.uniform(-3.0, 3.0)));
  return CameraPose(r, Vec3(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(300, 900)));
}

const CameraIntrinsics kScene{766.0, 766.0, 544.0, 540.0, 1088, 1080};

std::vector<Correspondence> marker_correspondences(const CameraPose& pose, const CameraIntrinsics& k) {
  std::vector<Correspondence> out;
  for (const double x : {-330.0, 0.0, 330.0}) {
    for (const double y : {-170.0, 170.0}) {
      const auto pc = oracle::add(oracle::mul(arr(pose.rotation()), oracle::V3{x, y, 0.0}), arr(pose.translation_mm()));
      const auto px = oracle::project(k.fx, k.fy, k.cx, k.cy, pc);
      out.push_back({Vec2(px[0], px[1]), Vec2(x, y)});
    }
  }
  return out;
}

}  // namespace

TEST(GazeLabel, IdentityPoseExamples) {
  const CameraPose id;
  EXPECT_TRUE(gaze_label(id, Vec3(0, 0, 500)).isApprox(Vec3(0, 0, 1), 1e-15));
  const Vec3 diag = gaze_label(id, Vec3(500, 0, 500));
  EXPECT_NEAR(diag.x(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(diag.y(), 0.0, 1e-15);
  EXPECT_NEAR(diag.z(), std::sqrt(0.5), 1e-15);
}

TEST(GazeLabel, MatchesComponentwiseOracleAndIsUnit) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const CameraPose pose = random_pose(rng);
    const Vec3 target(rng.uniform(-300, 300), rng.uniform(-150, 150), 0.0);
    const Vec3 eye(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
    const Vec3 got = gaze_label(pose, target, eye);
    const auto want = oracle::unit(
        oracle::sub(oracle::add(oracle::mul(arr(pose.rotation()), arr(target)), arr(pose.translation_mm())), arr(eye)));
    EXPECT_NEAR(got.norm(), 1.0, 1e-12);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(got[c], want[c], 1e-12);
  }
}

TEST(GazeLabel, ZeroLengthThrows) {
  try {
    gaze_label(CameraPose(), Vec3(1, 2, 3), Vec3(1, 2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(AngularError, Examples) {
  const Vec3 v(0.3, -0.2, 0.9);
  EXPECT_NEAR(angular_error_deg(v, v), 0.0, 1e-6);
  EXPECT_NEAR(angular_error_deg(Vec3::UnitX(), Vec3::UnitY()), 90.0, 1e-12);
  const double a = deg2rad(3.81);
  EXPECT_NEAR(angular_error_deg(Vec3(0, 0, 1), Vec3(std::sin(a), 0, std::cos(a))), 3.81, 1e-9);
  EXPECT_NEAR(angular_error_deg(Vec3(1, 0, 0), Vec3(-2, 0, 0)), 180.0, 1e-12);
  EXPECT_THROW(angular_error_deg(Vec3::Zero(), v), Error);
}

TEST(AngularError, SymmetricNonNegativeRotationInvariant) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a = random_unit(rng) * rng.uniform(0.5, 2.0);
    const Vec3 b = random_unit(rng) * rng.uniform(0.5, 2.0);
    const double e = angular_error_deg(a, b);
    EXPECT_GE(e, 0.0);
    EXPECT_NEAR(e, angular_error_deg(b, a), 1e-12);
    EXPECT_NEAR(e, oracle::angle_deg(arr(a), arr(b)), 1e-9);
    const Mat3 r = eig(oracle::axis_angle(arr(random_unit(rng)), rng.uniform(-3.0, 3.0)));
    EXPECT_NEAR(angular_error_deg(r * a, r * b), e, 1e-9);
  }
}

TEST(Homography, IdentityAndScale) {
  std::vector<Correspondence> id;
  std::vector<Correspondence> s2;
  for (const auto& p : {Vec2(0, 0), Vec2(100, 0), Vec2(100, 80), Vec2(0, 80)}) {
    id.push_back({p, p});
    s2.push_back({p, 2.0 * p});
  }
  EXPECT_TRUE(estimate_homography(id).matrix().isApprox(Mat3::Identity(), 1e-12));
  Mat3 want = Mat3::Identity();
  want(0, 0) = want(1, 1) = 2.0;
  EXPECT_TRUE(estimate_homography(s2).matrix().isApprox(want, 1e-12));
}

TEST(Homography, RecoversKnownMatrixFromSixPoints) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Mat3 h;
    h << rng.uniform(0.5, 2), rng.uniform(-0.3, 0.3), rng.uniform(-50, 50), rng.uniform(-0.3, 0.3), rng.uniform(0.5, 2),
        rng.uniform(-50, 50), rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3), 1.0;
    std::vector<Correspondence> pts;
    for (int i = 0; i < 6; ++i) {
      const Vec2 img(rng.uniform(0, 1000), rng.uniform(0, 1000));
      const oracle::V3 w = oracle::mul(arr(h), oracle::V3{img.x(), img.y(), 1.0});
      pts.push_back({img, Vec2(w[0] / w[2], w[1] / w[2])});
    }
    const Mat3 got = estimate_homography(pts).matrix();
    EXPECT_LT((got - h).cwiseAbs().maxCoeff(), 1e-8) << trial;
  }
}

TEST(Homography, ErrorCases) {
  std::vector<Correspondence> three = {{Vec2(0, 0), Vec2(0, 0)}, {Vec2(1, 0), Vec2(1, 0)}, {Vec2(0, 1), Vec2(0, 1)}};
  try {
    estimate_homography(three);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
  std::vector<Correspondence> collinear = {
      {Vec2(0, 0), Vec2(0, 0)}, {Vec2(1, 1), Vec2(1, 0)}, {Vec2(2, 2), Vec2(0, 1)}, {Vec2(3, 3), Vec2(1, 1)}};
  try {
    estimate_homography(collinear);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
  EXPECT_THROW(Homography(Mat3::Zero()), Error);
}

TEST(PoseFromHomography, FrontoParallelAt600) {
  const CameraPose truth(Mat3::Identity(), Vec3(0, 0, 600));
  const Homography board_to_image(board_to_image_homography(truth, kScene));
  const CameraPose got = pose_from_homography(board_to_image.inverse(), kScene);
  EXPECT_LT((got.rotation() - Mat3::Identity()).norm(), 1e-6);
  EXPECT_LT((got.translation_mm() - Vec3(0, 0, 600)).norm(), 1e-6);
}

TEST(PoseFromHomography, YawTwentyDegrees) {
  const Mat3 r = eig(oracle::axis_angle({0, 1, 0}, oracle::rad(20)));
  const CameraPose truth(r, Vec3(10, -20, 700));
  const CameraPose got = pose_from_homography(estimate_homography(marker_correspondences(truth, kScene)), kScene);
  const Mat3 rg = got.rotation();
  const double yaw = std::atan2(rg(0, 2), rg(2, 2));
  EXPECT_NEAR(rad2deg(yaw), 20.0, 1e-6);
  EXPECT_LT((got.camera_origin_board() - truth.camera_origin_board()).norm(), 1e-6);
}

TEST(PoseFromHomography, RoundTripOverRandomPoses) {
  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    const double tilt = oracle::rad(rng.uniform(0, 30));
    const double azimuth = rng.uniform(0, 2 * oracle::kPi);
    const double dist = rng.uniform(400, 900);
    const Vec3 origin(dist * std::sin(tilt) * std::cos(azimuth), dist * std::sin(tilt) * std::sin(azimuth),
                      dist * std::cos(tilt));
    const CameraPose truth = CameraPose::look_at(origin, Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), 0));
    const Homography hb(board_to_image_homography(truth, kScene));
    const CameraPose got = pose_from_homography(hb.inverse(), kScene);
    EXPECT_LT((got.rotation() - truth.rotation()).norm(), 1e-6);
    EXPECT_LT((got.translation_mm() - truth.translation_mm()).norm() / truth.translation_mm().norm(), 1e-6);
  }
}

TEST(MapGaze, Examples) {
  const Homography id(Mat3::Identity());
  EXPECT_TRUE(map_gaze_to_board(Vec2(100, 50), id).isApprox(Vec2(100, 50)));
  Mat3 s = Mat3::Identity();
  s(0, 0) = s(1, 1) = 2.0;
  EXPECT_TRUE(map_gaze_to_board(Vec2(100, 50), Homography(s)).isApprox(Vec2(200, 100)));

  Rng rng(15);
  for (int i = 0; i < 200; ++i) {
    Mat3 h;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h(r, c) = rng.uniform(-1, 1);
    }
    h(2, 2) = 1.5;
    h(2, 0) *= 1e-3;
    h(2, 1) *= 1e-3;
    const Vec2 px(rng.uniform(0, 500), rng.uniform(0, 500));
    const oracle::V3 w = oracle::mul(arr(Homography(h).matrix()), oracle::V3{px.x(), px.y(), 1.0});
    const Vec2 got = map_gaze_to_board(px, Homography(h));
    EXPECT_NEAR(got.x(), w[0] / w[2], 1e-9);
    EXPECT_NEAR(got.y(), w[1] / w[2], 1e-9);
  }
}

TEST(MapGaze, PointAtInfinityAndOutsideFlag) {
  Mat3 h = Mat3::Identity();
  h(2, 0) = 1.0;
  h(2, 2) = 0.0;
  h(0, 2) = 1.0;
  try {
    map_gaze_to_board(Vec2(0, 5), Homography(h));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointAtInfinity);
  }
  const BoardHit hit = map_gaze_to_board(Vec2(-5, 10), Homography(Mat3::Identity()), kScene);
  EXPECT_TRUE(hit.outside_image);
  EXPECT_FALSE(map_gaze_to_board(Vec2(5, 10), Homography(Mat3::Identity()), kScene).outside_image);
}

TEST(PitchYaw, ExamplesAndRoundTrip) {
  auto [p0, y0] = vector_to_pitchyaw(Vec3(0, 0, -1));
  EXPECT_NEAR(p0, 0.0, 1e-15);
  EXPECT_NEAR(y0, 0.0, 1e-15);
  const double ten = deg2rad(10.0);
  auto [p1, y1] = vector_to_pitchyaw(Vec3(0, -std::sin(ten), -std::cos(ten)));
  EXPECT_NEAR(p1, ten, 1e-15);
  EXPECT_NEAR(y1, 0.0, 1e-15);

  Rng rng(16);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = random_unit(rng);
    auto [p, y] = vector_to_pitchyaw(v);
    EXPECT_TRUE(pitchyaw_to_vector(p, y).isApprox(v, 1e-12));
  }
}

TEST(CameraPose, RejectsNonRotation) {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = -1.0;
  EXPECT_THROW(CameraPose(bad, Vec3::Zero()), Error);
  EXPECT_THROW(CameraPose(2.0 * Mat3::Identity(), Vec3::Zero()), Error);
}

TEST(CameraPose, LookAtPutsTargetOnAxis) {
  const CameraPose pose = CameraPose::look_at(Vec3(0, 180, 600), Vec3::Zero());
  const Vec3 c = pose.to_camera(Vec3::Zero());
  EXPECT_NEAR(c.x(), 0.0, 1e-9);
  EXPECT_NEAR(c.y(), 0.0, 1e-9);
  EXPECT_GT(c.z(), 0.0);
  EXPECT_TRUE(pose.camera_origin_board().isApprox(Vec3(0, 180, 600), 1e-12));
  EXPECT_NEAR(pose.rotation().determinant(), 1.0, 1e-12);
}

TEST(Intrinsics, Validation) {
  EXPECT_NO_THROW(kScene.validate());
  CameraIntrinsics k = kScene;
  k.fx = 0;
  EXPECT_THROW(k.validate(), Error);
  k = kScene;
  k.cx = 1088;
  EXPECT_THROW(k.validate(), Error);
}

#include "gazequiz/camera.hpp"

#include <fstream>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "gazequiz/error.hpp"

namespace gazequiz {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::InvalidIntrinsics, "focal lengths must be positive");
  if (image_w <= 0 || image_h <= 0) throw Error(ErrorCode::InvalidIntrinsics, "image size must be positive");
  if (!(cx >= 0.0 && cx < image_w && cy >= 0.0 && cy < image_h)) {
    throw Error(ErrorCode::InvalidIntrinsics, "principal point outside the image");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraPose::CameraPose(const Mat3& rotation, const Vec3& translation_mm) : rotation_(rotation), translation_(translation_mm) {
  const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).norm();
  if (!(ortho < 1e-9) || !(std::abs(rotation.determinant() - 1.0) < 1e-9)) {
    throw Error(ErrorCode::DegenerateGeometry, "camera rotation is not a proper rotation matrix");
  }
  if (!translation_mm.allFinite()) throw Error(ErrorCode::DegenerateGeometry, "camera translation is not finite");
}

CameraPose CameraPose::look_at(const Vec3& origin_board, const Vec3& target_board, const Vec3& down_hint) {
  const Vec3 forward = target_board - origin_board;
  if (forward.norm() < 1e-12) throw Error(ErrorCode::DegenerateGeometry, "look_at target coincides with origin");
  const Vec3 z = forward.normalized();
  const Vec3 x_raw = down_hint.cross(z);
  if (x_raw.norm() < 1e-12) throw Error(ErrorCode::DegenerateGeometry, "look_at direction parallel to down hint");
  const Vec3 x = x_raw.normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return CameraPose(r, -r * origin_board);
}

void to_json(nlohmann::json& j, const CameraIntrinsics& k) {
  j = nlohmann::json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.image_w}, {"height", k.image_h}};
}

void from_json(const nlohmann::json& j, CameraIntrinsics& k) {
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.image_w = j.at("width").get<int>();
  k.image_h = j.at("height").get<int>();
}

Calibration parse_calibration(const nlohmann::json& doc) {
  Calibration out;
  try {
    for (const auto& cam : doc.at("cameras")) {
      CameraCalibration entry;
      entry.intrinsics = cam.at("intrinsics").get<CameraIntrinsics>();
      entry.intrinsics.validate();
      const auto rot = cam.at("rotation").get<std::vector<double>>();
      const auto trans = cam.at("translation_mm").get<std::vector<double>>();
      if (rot.size() != 9 || trans.size() != 3) {
        throw Error(ErrorCode::ConfigError, "rotation must have 9 entries (row-major) and translation_mm 3");
      }
      Mat3 r;
      r << rot[0], rot[1], rot[2], rot[3], rot[4], rot[5], rot[6], rot[7], rot[8];
      entry.pose = CameraPose(r, Vec3(trans[0], trans[1], trans[2]));
      out[side_from_string(cam.at("side").get<std::string>())] = entry;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("calibration: ") + e.what());
  }
  return out;
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open calibration file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("calibration: ") + e.what());
  }
  return parse_calibration(doc);
}

nlohmann::json calibration_to_json(const Calibration& calibration) {
  nlohmann::json cams = nlohmann::json::array();
  for (const auto& [side, cam] : calibration) {
    std::vector<double> rot;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(cam.pose.rotation()(r, c));
    const Vec3& t = cam.pose.translation_mm();
    cams.push_back({{"side", std::string(to_string(side))},
                    {"intrinsics", cam.intrinsics},
                    {"rotation", rot},
                    {"translation_mm", {t.x(), t.y(), t.z()}}});
  }
  return {{"cameras", cams}};
}

Calibration default_calibration() {
  CameraIntrinsics k{300.0, 300.0, 160.0, 120.0, 320, 240};
  Calibration out;
  out[Side::A] = {k, CameraPose::look_at(Vec3(0.0, 180.0, 0.0), Vec3(0.0, 0.0, 600.0))};
  out[Side::B] = {k, CameraPose::look_at(Vec3(0.0, 180.0, 0.0), Vec3(0.0, 0.0, -600.0))};
  return out;
}

}  // namespace gazequiz

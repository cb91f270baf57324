#include "gazequiz/capture.hpp"

#include <tuple>

#include "gazequiz/error.hpp"
#include "gazequiz/geometry.hpp"

namespace gazequiz {

Vec3 target_board_point(const BoardLayout& board, const CaptureTarget& target) {
  if (target.letter_id.has_value() == target.stimulus_xy_mm.has_value()) {
    throw Error(ErrorCode::ValidationError, "capture target needs exactly one of letter_id and stimulus_xy_mm");
  }
  if (target.letter_id) return letter_position(board, *target.letter_id);
  return {target.stimulus_xy_mm->x, target.stimulus_xy_mm->y, 0.0};
}

Point2 gaze_arrow(const Vec3& gaze_norm) {
  const Vec3 g = gaze_norm.normalized();
  return {0.5 + 0.5 * g.x(), 0.5 + 0.5 * g.y()};
}

CaptureOutcome capture(const CaptureContext& ctx, const CaptureTarget& target, const BoardLayout& board,
                       const CameraCalibration& camera, const CaptureDrivers& drivers, const CaptureSettings& settings) {
  if (drivers.source == nullptr || drivers.detector == nullptr) {
    throw Error(ErrorCode::ConfigError, "capture needs a frame source and a face detector");
  }
  const Vec3 target_board = target_board_point(board, target);

  GrabRequest request;
  request.t_ms = ctx.t_ms;
  request.deadline = settings.grab_deadline;
  request.request_id = ctx.capture_id;
  request.target_board_mm = target_board;
  Frame frame = drivers.source->grab(request);

  CaptureOutcome out;
  out.truth = frame.truth;
  const auto face = drivers.detector->detect(frame);
  if (!face) {
    out.no_face = true;
    out.image = std::move(frame.image);
    return out;
  }

  const Vec3 eye = settings.label_origin == LabelOrigin::face_center ? face->face_center_camera_mm : Vec3::Zero();
  const Vec3 label = gaze_label(camera.pose, target_board, eye);

  NormalizedSampleGeometry geom;
  geom.rotation = normalization_rotation(face->face_center_camera_mm);
  geom.warp = normalization_warp(camera.intrinsics, settings.normalization, geom.rotation, face->face_distance_mm);
  geom.gaze_norm = normalize_gaze(geom.rotation, label);
  out.normalized_image = warp_image(frame.image, geom.warp, settings.normalization);

  GazeSample s;
  s.sample_id = ctx.capture_id;
  s.session_id = ctx.session_id;
  s.participant_id = ctx.participant_id;
  s.mode = std::string(to_string(ctx.mode));
  s.letter_id = target.letter_id;
  s.stimulus_xy_mm = target.stimulus_xy_mm;
  s.label_vec = label;
  std::tie(s.label_pitch_rad, s.label_yaw_rad) = vector_to_pitchyaw(geom.gaze_norm);
  s.wearing_eyetracker = ctx.wearing_eyetracker;
  s.captured_at_ms = ctx.t_ms;
  s.camera_side = ctx.side;

  if (drivers.estimator != nullptr) {
    try {
      const auto est = drivers.estimator->estimate(out.normalized_image, geom, frame);
      if (est && est->gaze_norm.allFinite() && est->gaze_norm.norm() > 0.0) {
        const Vec3 g = est->gaze_norm.normalized();
        s.estimator_vec = (geom.rotation.transpose() * g).normalized();
        out.gaze_arrow_end = gaze_arrow(g);
      }
    } catch (const std::exception&) {
      // estimation is feedback only; the sample stands without it
    }
  }

  out.geometry = geom;
  out.sample = std::move(s);
  out.image = std::move(frame.image);
  return out;
}

}  // namespace gazequiz

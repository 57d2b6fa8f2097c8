#include "horizon/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "horizon/error.hpp"

namespace horizon {

Vec2 ImageFrame::to_centered(const Vec2& pixel) const {
  const double h = height;
  return {(pixel.x() - 0.5 * width) / h, (0.5 * h - pixel.y()) / h};
}

Vec2 ImageFrame::to_pixel(const Vec2& centered) const {
  const double h = height;
  return {centered.x() * h + 0.5 * width, 0.5 * h - centered.y() * h};
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 camera_rotation(double yaw, double tilt, double roll) {
  return rot_z(roll) * rot_x(tilt) * rot_y(yaw);
}

CameraRig::CameraRig(const Mat3& rotation, const Vec3& translation, double focal_px)
    : rotation_(rotation), translation_(translation), focal_(focal_px) {
  if (!(focal_px > 0.0) || !std::isfinite(focal_px)) {
    throw Error(ErrorCode::kInvalidArgument, "focal length must be positive");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "rotation is not a proper rotation matrix");
  }
}

Mat3 CameraRig::intrinsics(const ImageFrame& frame) const {
  const double f = focal_ / frame.height;
  Mat3 k = Mat3::Zero();
  k(0, 0) = f;
  k(1, 1) = f;
  k(2, 2) = -1.0;
  return k;
}

Projection project_point(const CameraRig& rig, const ImageFrame& frame,
                         const Vec3& world_point) {
  const Vec3 camera_point = rig.rotation() * world_point + rig.translation();
  const Vec3 q = rig.intrinsics(frame) * camera_point;
  if (std::abs(q.z()) < 1e-12) {
    throw Error(ErrorCode::kDegenerateProjection, "point lies on the principal plane");
  }
  return {q.head<2>() / q.z(), camera_point.z() < 0.0};
}

HorizonLine HorizonLine::from_coefficients(const Vec3& h) {
  const double n = std::hypot(h.x(), h.y());
  if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(h.z())) {
    throw Error(ErrorCode::kInvalidArgument, "line coefficients have no direction");
  }
  Vec3 out = h / n;
  if (out.y() < 0.0 || (out.y() == 0.0 && out.x() < 0.0)) out = -out;
  if (out.y() == 0.0) out.y() = 0.0;  // drop -0
  return HorizonLine(out);
}

HorizonLine HorizonLine::from_slope_offset(double theta, double rho) {
  return from_coefficients({std::cos(theta), std::sin(theta), -rho});
}

HorizonLine HorizonLine::from_left_right(double left, double right, double aspect) {
  const Vec3 a(-0.5 * aspect, left, 1.0);
  const Vec3 b(0.5 * aspect, right, 1.0);
  return from_coefficients(a.cross(b));
}

double HorizonLine::theta() const { return std::atan2(h_.y(), h_.x()); }

bool HorizonLine::is_vertical() const {
  const double t = theta();
  return t < kVerticalTolerance || t > kPi - kVerticalTolerance;
}

double HorizonLine::y_at(double x) const {
  if (is_vertical()) throw Error(ErrorCode::kVerticalHorizon, "line is vertical");
  return -(h_.x() * x + h_.z()) / h_.y();
}

LeftRight HorizonLine::left_right(double aspect) const {
  return {y_at(-0.5 * aspect), y_at(0.5 * aspect)};
}

HorizonViews convert_parameterization(const HorizonLine& line, const ImageFrame& frame) {
  return {line.coefficients(), line.slope_offset(), line.left_right(frame.aspect())};
}

HorizonLine horizon_from_zenith(const CameraRig& rig, const ImageFrame& frame,
                                const Vec3& zenith) {
  // p^T K^-T R z = 0
  const Mat3 k_inv_t = rig.intrinsics(frame).inverse().transpose();
  return HorizonLine::from_coefficients(k_inv_t * (rig.rotation() * zenith));
}

HorizonLine horizon_from_camera(const CameraRig& rig, const ImageFrame& frame) {
  return horizon_from_zenith(rig, frame, Vec3::UnitY());
}

TiltRoll tilt_roll_from_horizon(const HorizonLine& line, double focal_px,
                                const ImageFrame& frame) {
  if (!(focal_px > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal length must be positive");
  if (line.is_vertical()) throw Error(ErrorCode::kVerticalHorizon, "cannot recover tilt/roll");
  // h ∝ K^-T u with u the camera-frame zenith; undo K to recover u.
  const double f = focal_px / frame.height;
  const Vec3& h = line.coefficients();
  Vec3 up(f * h.x(), f * h.y(), -h.z());
  up.normalize();
  if (up.y() < 0.0) up = -up;
  // u = rot_z(roll) * (0, cos tilt, sin tilt)
  return {std::asin(std::clamp(up.z(), -1.0, 1.0)), std::atan2(-up.x(), up.y())};
}

Window Window::full(const ImageFrame& frame) {
  return {0.0, 0.0, static_cast<double>(frame.width), static_cast<double>(frame.height), false};
}

Mat3 Window::to_parent(const ImageFrame& parent) const {
  const double ph = parent.height;
  const double k = height / ph;
  Mat3 m = Mat3::Identity();
  m(0, 0) = mirrored ? -k : k;
  m(1, 1) = k;
  m(0, 2) = (x0 + 0.5 * width - 0.5 * parent.width) / ph;
  m(1, 2) = (0.5 * ph - y0 - 0.5 * height) / ph;
  return m;
}

HorizonLine transfer_horizon(const HorizonLine& line, const Window& from,
                             const Window& to, const ImageFrame& parent) {
  // Points map as p_parent = M p_window, so lines map as h_window = M^T h_parent.
  const Mat3 from_m = from.to_parent(parent);
  const Vec3 parent_h = from_m.transpose().inverse() * line.coefficients();
  return HorizonLine::from_coefficients(to.to_parent(parent).transpose() * parent_h);
}

}  // namespace horizon

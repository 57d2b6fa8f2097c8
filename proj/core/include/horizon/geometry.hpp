#pragma once

// Pinhole camera and horizon-line geometry.
//
// Camera axes: +x right, +y up, viewing direction down -z. The world zenith
// is [0,1,0]. Image quantities live in the "centered frame": origin at the
// image center, x right, y up, lengths measured in image heights. The pixel
// frame (origin top-left, y down) only appears at I/O boundaries.

#include <Eigen/Core>
#include <numbers>
#include <optional>

namespace horizon {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

/// Tolerance on the horizon's angle from vertical below which (l,r) is
/// undefined.
inline constexpr double kVerticalTolerance = 1e-6;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct ImageFrame {
  int width = 0;
  int height = 0;

  double aspect() const { return static_cast<double>(width) / height; }
  Vec2 to_centered(const Vec2& pixel) const;
  Vec2 to_pixel(const Vec2& centered) const;
};

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// World-to-camera rotation for a camera with the given yaw (about the
/// zenith), tilt (about the camera x axis, positive looks down) and roll
/// (about the optical axis): rot_z(roll) * rot_x(tilt) * rot_y(yaw).
Mat3 camera_rotation(double yaw, double tilt, double roll);

class CameraRig {
 public:
  /// Throws InvalidArgument unless `rotation` is a proper rotation (within
  /// 1e-9) and `focal_px` > 0.
  CameraRig(const Mat3& rotation, const Vec3& translation, double focal_px);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  double focal() const { return focal_; }

  /// K in centered units: diag(f/height, f/height, -1). The -1 folds the
  /// -z viewing direction into the homogeneous division.
  Mat3 intrinsics(const ImageFrame& frame) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
  double focal_;
};

struct Projection {
  Vec2 point;  // centered frame
  bool in_front = true;
};

Projection project_point(const CameraRig& rig, const ImageFrame& frame,
                         const Vec3& world_point);

struct SlopeOffset {
  double theta = 0.0;  // angle of the line's normal, radians
  double rho = 0.0;    // image heights
};

struct LeftRight {
  double left = 0.0;   // y at the left border, image heights
  double right = 0.0;  // y at the right border, image heights
};

/// Line {p : p^T h = 0} in the centered frame. Coefficients are kept with
/// unit (h1, h2) and h2 >= 0 (h1 >= 0 on ties) so equal lines compare equal.
class HorizonLine {
 public:
  HorizonLine() : h_(0.0, 1.0, 0.0) {}

  static HorizonLine from_coefficients(const Vec3& h);
  static HorizonLine from_slope_offset(double theta, double rho);
  static HorizonLine from_left_right(double left, double right, double aspect);

  const Vec3& coefficients() const { return h_; }

  /// Normal angle in [0, pi); rho = x cos(theta) + y sin(theta).
  double theta() const;
  double rho() const { return -h_.z(); }
  SlopeOffset slope_offset() const { return {theta(), rho()}; }
  /// Angle of the line itself with the x axis, in [-pi/2, pi/2).
  double slope_angle() const { return theta() - kPi / 2.0; }

  bool is_vertical() const;
  /// Throws VerticalHorizon for (near-)vertical lines.
  LeftRight left_right(double aspect) const;
  double y_at(double x) const;
  double residual(const Vec2& p) const { return h_.x() * p.x() + h_.y() * p.y() + h_.z(); }

 private:
  explicit HorizonLine(const Vec3& h) : h_(h) {}
  Vec3 h_;
};

struct HorizonViews {
  Vec3 coefficients;
  SlopeOffset slope_offset;
  LeftRight left_right;
};

/// All three views of a line. Throws VerticalHorizon when (l,r) is undefined.
HorizonViews convert_parameterization(const HorizonLine& line, const ImageFrame& frame);

/// Horizon of a camera for the canonical zenith [0,1,0]. A vertical result
/// is still returned; only its (l,r) view throws.
HorizonLine horizon_from_camera(const CameraRig& rig, const ImageFrame& frame);

/// Same as horizon_from_camera for an arbitrary world zenith direction.
HorizonLine horizon_from_zenith(const CameraRig& rig, const ImageFrame& frame,
                                const Vec3& zenith);

struct TiltRoll {
  double tilt = 0.0;
  double roll = 0.0;
};

/// Inverse of horizon_from_camera for cameras built with camera_rotation
/// (any yaw). Unique for |tilt|, |roll| < pi/2.
TiltRoll tilt_roll_from_horizon(const HorizonLine& line, double focal_px,
                                const ImageFrame& frame);

/// Axis-aligned window of a parent image in parent pixel coordinates
/// (origin top-left). A window has its own centered frame in units of its
/// own height. `mirrored` flips the window's x axis.
struct Window {
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;
  double height = 0.0;
  bool mirrored = false;

  static Window full(const ImageFrame& frame);
  static Window square(double x0, double y0, double side, bool mirrored = false) {
    return {x0, y0, side, side, mirrored};
  }
  double aspect() const { return width / height; }

  /// Homogeneous map taking window-centered points to parent-centered points.
  Mat3 to_parent(const ImageFrame& parent) const;
};

/// Re-expresses a line given in window `from` in the coordinates of window
/// `to`; both windows belong to `parent`.
HorizonLine transfer_horizon(const HorizonLine& line, const Window& from,
                             const Window& to, const ImageFrame& parent);

}  // namespace horizon

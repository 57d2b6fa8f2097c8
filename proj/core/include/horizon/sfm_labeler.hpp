#pragma once

// Automatic horizon labeling from structure-from-motion camera rotations.
//
// Each camera contributes the world directions of its left and right points
// at infinity. Assuming zero expected roll, these span the horizon plane;
// its normal is the world zenith. Cameras whose lateral directions leave the
// plane (e.g. images rotated by 90 degrees) are rejected as outliers.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "horizon/geometry.hpp"

namespace horizon {

struct SfmCamera {
  std::string image_id;
  CameraRig rig;
  ImageFrame frame;
};

struct SfmModel {
  std::string model_id;
  std::vector<SfmCamera> cameras;

  /// Throws InsufficientData below 3 cameras, InvalidArgument on duplicate ids.
  void validate() const;
};

// Canonical text format, one camera per line, whitespace separated:
//   image_id width height focal_px r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz
// R is world-to-camera, row-major. Blank lines and lines starting with '#'
// are ignored; an optional first line "model <id>" names the model.
SfmModel read_sfm_text(std::istream& in, const std::string& default_model_id = "model");
SfmModel read_sfm_json(std::istream& in);
/// Dispatches on extension: ".json" reads JSON, anything else text.
SfmModel read_sfm_file(const std::string& path);
void write_sfm_text(std::ostream& out, const SfmModel& model);

/// Two unit vectors per camera, in camera order: R^T[-1,0,0], R^T[1,0,0].
std::vector<Vec3> collect_lateral_directions(const SfmModel& model);

struct PlaneFitOptions {
  double min_outlier_angle = deg2rad(10.0);
  double median_factor = 3.0;
  int rounds = 2;
};

struct ZenithEstimate {
  std::array<Vec3, 2> horizon_plane_basis;
  Vec3 zenith;
  std::vector<bool> inliers;       // per camera
  std::vector<double> residuals;   // per camera, radians
  Vec3 singular_values;            // of the final inlier fit

  std::size_t inlier_count() const;
};

/// Fits the horizon plane to lateral directions grouped in consecutive pairs
/// per camera. The zenith sign is chosen to agree with `up_hint` (e.g. the
/// mean camera up vector) or, without a hint, to have a non-negative y.
/// Throws InsufficientData below 6 directions, DegenerateModel when the
/// plane is underdetermined.
ZenithEstimate fit_horizon_plane(std::span<const Vec3> directions,
                                 const std::optional<Vec3>& up_hint = std::nullopt,
                                 const PlaneFitOptions& options = {});

/// Mean world "up" direction of the cameras, normalized. Assumes zero mean
/// tilt and roll; kept as the baseline the plane fit is compared against.
Vec3 fit_zenith_naive(const SfmModel& model);

/// collect_lateral_directions + fit_horizon_plane oriented by the mean up.
ZenithEstimate estimate_zenith(const SfmModel& model, const PlaneFitOptions& options = {});

struct LabeledImage {
  std::string image_id;
  ImageFrame frame;
  HorizonLine line;
};

struct SkippedImage {
  std::string image_id;
  std::string reason;
};

struct ModelLabels {
  std::vector<LabeledImage> labels;
  std::vector<SkippedImage> skipped;
};

inline constexpr const char* kReasonExcessResidual = "excess residual";
inline constexpr const char* kReasonVerticalHorizon = "vertical horizon";

/// Projects the estimated horizon into every inlier camera.
ModelLabels label_model(const SfmModel& model, const ZenithEstimate& zenith);

struct ResidualReport {
  std::string model_id;
  std::size_t cameras = 0;
  std::size_t inliers = 0;
  double inlier_fraction = 0.0;
  double median_residual_deg = 0.0;
  Vec3 zenith = Vec3::UnitY();
  double zenith_angle_deg = 0.0;  // from the canonical up [0, 1, 0]
  std::vector<double> histogram_edges_deg;  // bins.size() + 1 edges
  std::vector<std::size_t> histogram;
};

/// Evidence for manual review of a model's global horizon.
ResidualReport make_residual_report(const SfmModel& model, const ZenithEstimate& zenith);
std::string residual_report_json(const ResidualReport& report);

}  // namespace horizon

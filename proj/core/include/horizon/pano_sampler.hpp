#pragma once

// Training-data synthesis from equirectangular panoramas.
//
// Camera parameters are drawn from distributions fitted to labeled data:
// field of view ~ normal, roll ~ Student's t with 2.43 degrees of freedom,
// tilt ~ Epanechnikov KDE (half-width 0.003 rad), yaw ~ uniform.
//
// Panorama convention: column u spans longitude [-pi, pi) left to right with
// longitude 0 (world -z) at the center; row v spans latitude +pi/2 (top) to
// -pi/2 (bottom). Pixel centers sit at half-integer positions.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "horizon/geometry.hpp"
#include "horizon/image.hpp"

namespace horizon {

inline constexpr double kRollDegreesOfFreedom = 2.43;
inline constexpr double kTiltBandwidth = 0.003;  // radians, kernel half-width
inline constexpr double kMinFovDeg = 10.0;
inline constexpr double kMaxFovDeg = 120.0;
inline constexpr std::size_t kMinFitSamples = 30;

struct NormalParams {
  double mean = 0.0;
  double stddev = 1.0;
};

struct StudentTParams {
  double location = 0.0;
  double scale = 1.0;
  double dof = kRollDegreesOfFreedom;
};

struct TiltKde {
  std::vector<double> samples;
  double bandwidth = kTiltBandwidth;
};

struct CameraParamDistributions {
  NormalParams fov_deg;
  StudentTParams roll;
  TiltKde tilt;

  /// Throws InvalidArgument when an invariant is broken.
  void validate() const;
};

struct CameraLabel {
  double tilt = 0.0;  // radians
  double roll = 0.0;  // radians
  double fov_deg = 60.0;
};

struct CameraSample {
  double yaw = 0.0;
  double tilt = 0.0;
  double roll = 0.0;
  double fov_deg = 60.0;
};

/// Location/scale MLE with fixed degrees of freedom by iterative
/// reweighting (EM); stops after `max_iterations` or when both parameters
/// move less than `tolerance`.
StudentTParams fit_student_t(std::span<const double> samples, double dof,
                             int max_iterations = 100, double tolerance = 1e-10);

/// Throws InsufficientData below 30 labels.
CameraParamDistributions fit_distributions(std::span<const CameraLabel> labels);

std::string distributions_to_json(const CameraParamDistributions& dists);
CameraParamDistributions distributions_from_json(const std::string& text);

/// Inverse CDF of the Epanechnikov kernel on [-1, 1] for p in [0, 1].
double epanechnikov_quantile(double p);

/// Pure function of (dists, seed).
CameraSample sample_camera(const CameraParamDistributions& dists, std::uint64_t seed);

/// Per-item seed derived from a run seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

class Panorama {
 public:
  /// Throws InvalidArgument unless width == 2 * height and height >= 64.
  explicit Panorama(Image pixels);

  const Image& pixels() const { return pixels_; }

  /// Bilinear lookup of a world direction; wraps horizontally, clamps
  /// vertically. Writes channels() values to `out`.
  void sample(const Vec3& direction, std::span<float> out) const;

 private:
  Image pixels_;
};

/// White above the horizon (latitude > 0), black below; the boundary falls
/// exactly between rows height/2 - 1 and height/2.
Panorama make_painted_panorama(int height);

/// Sky/ground panorama with longitude-varying texture, for synthetic
/// benchmarks. Deterministic in `seed`.
Panorama make_textured_panorama(int height, std::uint64_t seed);

struct Cutout {
  Image image;
  HorizonLine line;
  double focal_px = 0.0;
};

/// Square rectilinear view; throws InvalidArgument for out_size < 32 or fov
/// outside (10, 120) degrees.
Cutout render_cutout(const Panorama& pano, const CameraSample& camera, int out_size);

struct AugmentOptions {
  int count = 10;
  double min_side_fraction = 0.85;
  double mirror_probability = 0.5;
};

struct AugmentedCrop {
  Image image;
  HorizonLine line;  // in the crop's centered frame
  Window window;     // placement in the source image
};

/// Random square crops with optional horizontal mirroring, horizon adjusted
/// to each crop. Throws InvalidArgument if min(width, height) < 38.
std::vector<AugmentedCrop> augment_crop(const Image& image, const HorizonLine& line,
                                        std::uint64_t seed, const AugmentOptions& options = {});

}  // namespace horizon

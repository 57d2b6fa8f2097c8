#pragma once

// Synthetic SfM models with known ground truth, for fixtures and checks.

#include <cstdint>
#include <vector>

#include "horizon/geometry.hpp"
#include "horizon/sfm_labeler.hpp"

namespace horizon {

struct SyntheticSfmOptions {
  int cameras = 50;
  double roll_sigma_deg = 2.0;
  double tilt_sigma_deg = 5.0;
  /// Fraction of cameras given an extra +-90 degree roll (portrait shots
  /// with a wrong orientation tag).
  double outlier_fraction = 0.0;
  int width = 640;
  int height = 480;
  double min_fov_deg = 40.0;
  double max_fov_deg = 80.0;
  /// Rotate the whole world so the true zenith is not [0, 1, 0].
  bool random_world_rotation = false;
  std::uint64_t seed = 1;
};

struct SyntheticSfm {
  SfmModel model;
  Vec3 true_zenith = Vec3::UnitY();
  std::vector<bool> outlier;  // per camera
};

SyntheticSfm make_synthetic_sfm(const SyntheticSfmOptions& options);

}  // namespace horizon

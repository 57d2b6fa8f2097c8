#include "horizon/synthetic.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "horizon/error.hpp"

namespace horizon {

SyntheticSfm make_synthetic_sfm(const SyntheticSfmOptions& options) {
  if (options.cameras < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one camera");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Mat3 world = Mat3::Identity();
  if (options.random_world_rotation) {
    const Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
    world = q.normalized().toRotationMatrix();
  }

  // Choose outliers as an exact count so small models still get some.
  const auto n = static_cast<std::size_t>(options.cameras);
  const auto n_out = static_cast<std::size_t>(std::lround(options.outlier_fraction * options.cameras));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  SyntheticSfm out;
  out.outlier.assign(n, false);
  for (std::size_t k = 0; k < n_out && k < n; ++k) out.outlier[order[k]] = true;
  // Cameras are posed in an upright world, then the world is rotated.
  out.true_zenith = world * Vec3::UnitY();
  out.model.model_id = "synthetic-" + std::to_string(options.seed);

  const ImageFrame frame{options.width, options.height};
  for (std::size_t i = 0; i < n; ++i) {
    const double yaw = (2.0 * unit(rng) - 1.0) * kPi;
    const double tilt = deg2rad(options.tilt_sigma_deg) * normal(rng);
    double roll = deg2rad(options.roll_sigma_deg) * normal(rng);
    if (out.outlier[i]) roll += unit(rng) < 0.5 ? kPi / 2.0 : -kPi / 2.0;
    const double fov =
        deg2rad(options.min_fov_deg + (options.max_fov_deg - options.min_fov_deg) * unit(rng));
    const double focal = 0.5 * options.width / std::tan(0.5 * fov);
    const Mat3 r = camera_rotation(yaw, tilt, roll) * world.transpose();
    const Vec3 center(10.0 * normal(rng), 1.5 + 0.2 * normal(rng), 10.0 * normal(rng));
    const Vec3 t = -r * (world * center);
    out.model.cameras.push_back({"img" + std::to_string(10000 + i).substr(1), CameraRig(r, t, focal), frame});
  }
  return out;
}

}  // namespace horizon

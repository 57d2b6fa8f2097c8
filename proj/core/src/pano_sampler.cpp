#include "horizon/pano_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>

#include "horizon/error.hpp"

namespace horizon {
namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double clamp_fov(double fov_deg) {
  return std::clamp(fov_deg, std::nextafter(kMinFovDeg, kMaxFovDeg),
                    std::nextafter(kMaxFovDeg, kMinFovDeg));
}

}  // namespace

void CameraParamDistributions::validate() const {
  if (!(fov_deg.stddev > 0.0) || !(roll.scale > 0.0) || !(tilt.bandwidth > 0.0) ||
      !(roll.dof > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "distribution spreads must be positive");
  }
  if (tilt.samples.empty()) throw Error(ErrorCode::kInvalidArgument, "tilt KDE has no samples");
}

StudentTParams fit_student_t(std::span<const double> samples, double dof, int max_iterations,
                             double tolerance) {
  if (samples.empty()) throw Error(ErrorCode::kInsufficientData, "no samples");
  constexpr double kMinScale = 1e-9;
  const std::vector<double> xs(samples.begin(), samples.end());
  double location = median_of(xs);
  std::vector<double> dev(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = std::abs(xs[i] - location);
  double scale = std::max(1.4826 * median_of(dev), kMinScale);

  const double n = static_cast<double>(xs.size());
  std::vector<double> w(xs.size());
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double z = (xs[i] - location) / scale;
      w[i] = (dof + 1.0) / (dof + z * z);
    }
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    double next_location = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) next_location += w[i] * xs[i];
    next_location /= wsum;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ss += w[i] * (xs[i] - next_location) * (xs[i] - next_location);
    }
    const double next_scale = std::max(std::sqrt(ss / n), kMinScale);
    const double delta = std::abs(next_location - location) + std::abs(next_scale - scale);
    location = next_location;
    scale = next_scale;
    if (delta < tolerance) break;
  }
  return {location, scale, dof};
}

CameraParamDistributions fit_distributions(std::span<const CameraLabel> labels) {
  if (labels.size() < kMinFitSamples) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least " + std::to_string(kMinFitSamples) + " labels, got " +
                    std::to_string(labels.size()));
  }
  const double n = static_cast<double>(labels.size());
  double mean = 0.0;
  for (const auto& l : labels) mean += l.fov_deg;
  mean /= n;
  double var = 0.0;
  for (const auto& l : labels) var += (l.fov_deg - mean) * (l.fov_deg - mean);
  const double stddev = std::max(std::sqrt(var / (n - 1.0)), 1e-9);

  std::vector<double> rolls, tilts;
  for (const auto& l : labels) {
    rolls.push_back(l.roll);
    tilts.push_back(l.tilt);
  }
  CameraParamDistributions out;
  out.fov_deg = {mean, stddev};
  out.roll = fit_student_t(rolls, kRollDegreesOfFreedom);
  out.tilt = {std::move(tilts), kTiltBandwidth};
  return out;
}

std::string distributions_to_json(const CameraParamDistributions& d) {
  nlohmann::ordered_json j;
  j["fov_deg"] = {{"distribution", "normal"}, {"mean", d.fov_deg.mean}, {"stddev", d.fov_deg.stddev}};
  j["roll"] = {{"distribution", "student_t"},
               {"location", d.roll.location},
               {"scale", d.roll.scale},
               {"dof", d.roll.dof}};
  j["tilt"] = {{"distribution", "epanechnikov_kde"},
               {"bandwidth", d.tilt.bandwidth},
               {"samples", d.tilt.samples}};
  j["yaw"] = {{"distribution", "uniform"}, {"low", 0.0}, {"high", 2.0 * kPi}};
  return j.dump(2);
}

CameraParamDistributions distributions_from_json(const std::string& text) {
  CameraParamDistributions d;
  try {
    const auto j = nlohmann::json::parse(text);
    d.fov_deg = {j.at("fov_deg").at("mean").get<double>(), j.at("fov_deg").at("stddev").get<double>()};
    d.roll = {j.at("roll").at("location").get<double>(), j.at("roll").at("scale").get<double>(),
              j.at("roll").value("dof", kRollDegreesOfFreedom)};
    d.tilt = {j.at("tilt").at("samples").get<std::vector<double>>(),
              j.at("tilt").value("bandwidth", kTiltBandwidth)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("camera distributions: ") + e.what());
  }
  d.validate();
  return d;
}

double epanechnikov_quantile(double p) {
  // CDF F(u) = (2 + 3u - u^3) / 4; with u = 2 sin(a) this is sin(3a) = 2p - 1.
  p = std::clamp(p, 0.0, 1.0);
  return std::clamp(2.0 * std::sin(std::asin(2.0 * p - 1.0) / 3.0), -1.0, 1.0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CameraSample sample_camera(const CameraParamDistributions& dists, std::uint64_t seed) {
  dists.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CameraSample out;
  out.yaw = 2.0 * kPi * unit(rng);
  std::uniform_int_distribution<std::size_t> pick(0, dists.tilt.samples.size() - 1);
  const double base = dists.tilt.samples[pick(rng)];
  out.tilt = base + dists.tilt.bandwidth * epanechnikov_quantile(unit(rng));
  std::student_t_distribution<double> t(dists.roll.dof);
  out.roll = dists.roll.location + dists.roll.scale * t(rng);
  std::normal_distribution<double> fov(dists.fov_deg.mean, dists.fov_deg.stddev);
  out.fov_deg = clamp_fov(fov(rng));
  return out;
}

Panorama::Panorama(Image pixels) : pixels_(std::move(pixels)) {
  if (pixels_.width() != 2 * pixels_.height()) {
    throw Error(ErrorCode::kInvalidArgument,
                "equirectangular panorama must have width == 2 * height (got " +
                    std::to_string(pixels_.width()) + "x" + std::to_string(pixels_.height()) + ")");
  }
  if (pixels_.height() < 64) throw Error(ErrorCode::kInvalidArgument, "panorama height < 64");
}

void Panorama::sample(const Vec3& direction, std::span<float> out) const {
  const int w = pixels_.width(), h = pixels_.height();
  const double lon = std::atan2(direction.x(), -direction.z());
  const double lat = std::atan2(direction.y(), std::hypot(direction.x(), direction.z()));
  const double u = (lon + kPi) / (2.0 * kPi) * w - 0.5;
  const double v = (0.5 * kPi - lat) / kPi * h - 0.5;
  const double uf = std::floor(u), vf = std::floor(v);
  const double fu = u - uf, fv = v - vf;
  auto wrap = [w](long x) { return static_cast<int>(((x % w) + w) % w); };
  const int x0 = wrap(static_cast<long>(uf)), x1 = wrap(static_cast<long>(uf) + 1);
  const int y0 = std::clamp(static_cast<int>(vf), 0, h - 1);
  const int y1 = std::clamp(static_cast<int>(vf) + 1, 0, h - 1);
  for (int c = 0; c < pixels_.channels(); ++c) {
    const double top = (1.0 - fu) * pixels_.at(x0, y0, c) + fu * pixels_.at(x1, y0, c);
    const double bottom = (1.0 - fu) * pixels_.at(x0, y1, c) + fu * pixels_.at(x1, y1, c);
    out[c] = static_cast<float>((1.0 - fv) * top + fv * bottom);
  }
}

Panorama make_painted_panorama(int height) {
  Image img(2 * height, height, 1, 0.0f);
  for (int y = 0; y < height / 2; ++y) {
    for (int x = 0; x < img.width(); ++x) img.at(x, y) = 1.0f;
  }
  return Panorama(std::move(img));
}

Panorama make_textured_panorama(int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // A few random sinusoids in longitude shape the ground texture and a
  // skyline of "buildings" that never crosses the true horizon.
  double freq[4], phase[4];
  for (int k = 0; k < 4; ++k) {
    freq[k] = 1.0 + std::floor(12.0 * unit(rng));
    phase[k] = 2.0 * kPi * unit(rng);
  }
  Image img(2 * height, height, 3);
  for (int y = 0; y < height; ++y) {
    const double lat = kPi * (0.5 - (y + 0.5) / height);
    for (int x = 0; x < img.width(); ++x) {
      const double lon = 2.0 * kPi * ((x + 0.5) / img.width()) - kPi;
      double value;
      if (lat > 0.0) {
        const double skyline = 0.05 + 0.04 * std::sin(freq[0] * lon + phase[0]) +
                               0.03 * std::sin(freq[1] * lon + phase[1]);
        value = lat < skyline ? 0.45 + 0.05 * std::sin(40.0 * lon) : 0.65 + 0.3 * lat / (0.5 * kPi);
      } else {
        value = 0.25 + 0.08 * std::sin(freq[2] * lon + phase[2]) * std::cos(freq[3] * lat * 8.0 + phase[3]) +
                0.1 * lat / (0.5 * kPi);
      }
      img.at(x, y, 0) = static_cast<float>(value * 0.95);
      img.at(x, y, 1) = static_cast<float>(value);
      img.at(x, y, 2) = static_cast<float>(std::min(1.0, value * (lat > 0.0 ? 1.15 : 0.85)));
    }
  }
  return Panorama(std::move(img));
}

Cutout render_cutout(const Panorama& pano, const CameraSample& camera, int out_size) {
  if (out_size < 32) throw Error(ErrorCode::kInvalidArgument, "cutout size must be >= 32");
  if (!(camera.fov_deg > kMinFovDeg && camera.fov_deg < kMaxFovDeg)) {
    throw Error(ErrorCode::kInvalidArgument, "field of view outside (10, 120) degrees");
  }
  const double focal_px = 0.5 * out_size / std::tan(0.5 * deg2rad(camera.fov_deg));
  const CameraRig rig(camera_rotation(camera.yaw, camera.tilt, camera.roll), Vec3::Zero(), focal_px);
  const Mat3 camera_to_world = rig.rotation().transpose();

  const int channels = pano.pixels().channels();
  Cutout out{Image(out_size, out_size, channels), {}, focal_px};
  std::vector<float> px(channels);
  const double half = 0.5 * out_size;
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      // K^-1 p for the pixel center, in pixel units.
      const Vec3 ray((x + 0.5 - half) / focal_px, (half - (y + 0.5)) / focal_px, -1.0);
      pano.sample(camera_to_world * ray, px);
      for (int c = 0; c < channels; ++c) out.image.at(x, y, c) = px[c];
    }
  }
  out.line = horizon_from_camera(rig, {out_size, out_size});
  return out;
}

std::vector<AugmentedCrop> augment_crop(const Image& image, const HorizonLine& line,
                                        std::uint64_t seed, const AugmentOptions& options) {
  const int min_dim = std::min(image.width(), image.height());
  if (min_dim < 38) throw Error(ErrorCode::kInvalidArgument, "image too small to augment");
  const ImageFrame frame = image.frame();
  const Window full = Window::full(frame);
  const int min_side = static_cast<int>(std::ceil(options.min_side_fraction * min_dim));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<AugmentedCrop> out;
  out.reserve(options.count);
  for (int i = 0; i < options.count; ++i) {
    const int side = std::uniform_int_distribution<int>(min_side, min_dim)(rng);
    const int x0 = std::uniform_int_distribution<int>(0, image.width() - side)(rng);
    const int y0 = std::uniform_int_distribution<int>(0, image.height() - side)(rng);
    const bool mirrored = unit(rng) < options.mirror_probability;
    const Window window = Window::square(x0, y0, side, mirrored);
    out.push_back({crop(image, window), transfer_horizon(line, full, window, frame), window});
  }
  return out;
}

}  // namespace horizon

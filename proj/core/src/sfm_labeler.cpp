#include "horizon/sfm_labeler.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "horizon/error.hpp"

namespace horizon {
namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct PlaneFit {
  Vec3 u0, u1, normal;
  Vec3 singular_values;
};

PlaneFit fit_plane(std::span<const Vec3> directions, const std::vector<bool>& use) {
  std::size_t rows = 0;
  for (std::size_t cam = 0; cam < use.size(); ++cam) rows += use[cam] ? 2 : 0;
  if (rows < 6) throw Error(ErrorCode::kDegenerateModel, "fewer than 3 inlier cameras");
  Eigen::MatrixXd stacked(rows, 3);
  std::size_t r = 0;
  for (std::size_t cam = 0; cam < use.size(); ++cam) {
    if (!use[cam]) continue;
    stacked.row(r++) = directions[2 * cam].normalized().transpose();
    stacked.row(r++) = directions[2 * cam + 1].normalized().transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(1) < 1e-6 * sv(0)) {
    throw Error(ErrorCode::kDegenerateModel,
                "lateral directions do not span a plane (cameras share one orientation)");
  }
  const Eigen::Matrix3d v = svd.matrixV();
  return {v.col(0), v.col(1), v.col(2), sv};
}

std::vector<double> camera_residuals(std::span<const Vec3> directions, const Vec3& normal) {
  std::vector<double> out(directions.size() / 2);
  for (std::size_t cam = 0; cam < out.size(); ++cam) {
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
      const Vec3 d = directions[2 * cam + k].normalized();
      worst = std::max(worst, std::asin(std::min(1.0, std::abs(d.dot(normal)))));
    }
    out[cam] = worst;
  }
  return out;
}

}  // namespace

void SfmModel::validate() const {
  if (cameras.size() < 3) {
    throw Error(ErrorCode::kInsufficientData,
                "insufficient cameras: " + std::to_string(cameras.size()) + " < 3");
  }
  std::set<std::string> ids;
  for (const auto& cam : cameras) {
    if (!ids.insert(cam.image_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate image id '" + cam.image_id + "'");
    }
  }
}

SfmModel read_sfm_text(std::istream& in, const std::string& default_model_id) {
  SfmModel model{default_model_id, {}};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string id;
    fields >> id;
    if (id == "model") {
      if (!(fields >> model.model_id)) {
        throw Error(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": missing model id");
      }
      continue;
    }
    int width = 0, height = 0;
    double focal = 0.0;
    Mat3 rotation;
    Vec3 translation;
    fields >> width >> height >> focal;
    for (int i = 0; i < 9; ++i) fields >> rotation(i / 3, i % 3);
    for (int i = 0; i < 3; ++i) fields >> translation(i);
    std::string trailing;
    if (fields.fail() || (fields >> trailing)) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line_no) +
                                          ": expected 16 fields (id w h f R[9] t[3])");
    }
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": non-positive image size");
    }
    try {
      model.cameras.push_back({id, CameraRig(rotation, translation, focal), {width, height}});
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return model;
}

SfmModel read_sfm_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("invalid JSON: ") + e.what());
  }
  SfmModel model{doc.value("model_id", std::string("model")), {}};
  std::size_t index = 0;
  for (const auto& cam : doc.at("cameras")) {
    try {
      const auto r = cam.at("rotation").get<std::vector<double>>();
      const auto t = cam.value("translation", std::vector<double>{0.0, 0.0, 0.0});
      if (r.size() != 9 || t.size() != 3) {
        throw Error(ErrorCode::kFormat, "rotation needs 9 and translation 3 entries");
      }
      Mat3 rotation;
      for (int i = 0; i < 9; ++i) rotation(i / 3, i % 3) = r[i];
      model.cameras.push_back({cam.at("image_id").get<std::string>(),
                               CameraRig(rotation, Vec3(t[0], t[1], t[2]), cam.at("focal").get<double>()),
                               {cam.at("width").get<int>(), cam.at("height").get<int>()}});
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kFormat, "camera " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }
  return model;
}

SfmModel read_sfm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormat, "cannot open '" + path + "'");
  const std::filesystem::path p(path);
  if (p.extension() == ".json") return read_sfm_json(in);
  return read_sfm_text(in, p.stem().string());
}

void write_sfm_text(std::ostream& out, const SfmModel& model) {
  out << "model " << model.model_id << '\n';
  out << std::setprecision(17);
  for (const auto& cam : model.cameras) {
    out << cam.image_id << ' ' << cam.frame.width << ' ' << cam.frame.height << ' '
        << cam.rig.focal();
    for (int i = 0; i < 9; ++i) out << ' ' << cam.rig.rotation()(i / 3, i % 3);
    for (int i = 0; i < 3; ++i) out << ' ' << cam.rig.translation()(i);
    out << '\n';
  }
}

std::vector<Vec3> collect_lateral_directions(const SfmModel& model) {
  std::vector<Vec3> out;
  out.reserve(2 * model.cameras.size());
  for (const auto& cam : model.cameras) {
    const Mat3 rt = cam.rig.rotation().transpose();
    out.push_back((rt * Vec3(-1.0, 0.0, 0.0)).normalized());
    out.push_back((rt * Vec3(1.0, 0.0, 0.0)).normalized());
  }
  return out;
}

std::size_t ZenithEstimate::inlier_count() const {
  return static_cast<std::size_t>(std::count(inliers.begin(), inliers.end(), true));
}

ZenithEstimate fit_horizon_plane(std::span<const Vec3> directions,
                                 const std::optional<Vec3>& up_hint,
                                 const PlaneFitOptions& options) {
  if (directions.size() < 6 || directions.size() % 2 != 0) {
    throw Error(ErrorCode::kInsufficientData, "need an even number (>= 6) of lateral directions");
  }
  const std::size_t cameras = directions.size() / 2;
  std::vector<bool> inliers(cameras, true);
  PlaneFit fit = fit_plane(directions, inliers);
  for (int round = 0; round < options.rounds; ++round) {
    const auto residuals = camera_residuals(directions, fit.normal);
    const double threshold =
        std::max(options.min_outlier_angle, options.median_factor * median_of(residuals));
    for (std::size_t cam = 0; cam < cameras; ++cam) inliers[cam] = residuals[cam] <= threshold;
    fit = fit_plane(directions, inliers);
  }

  Vec3 zenith = fit.normal.normalized();
  const Vec3 reference = up_hint.value_or(Vec3::UnitY());
  if (zenith.dot(reference) < 0.0) zenith = -zenith;
  Vec3 b0 = fit.u0.normalized();
  Vec3 b1 = zenith.cross(b0).normalized();  // right-handed (b0, b1, zenith)

  ZenithEstimate out;
  out.horizon_plane_basis = {b0, b1};
  out.zenith = zenith;
  out.inliers = std::move(inliers);
  out.residuals = camera_residuals(directions, zenith);
  out.singular_values = fit.singular_values;
  return out;
}

Vec3 fit_zenith_naive(const SfmModel& model) {
  Vec3 sum = Vec3::Zero();
  for (const auto& cam : model.cameras) sum += cam.rig.rotation().transpose() * Vec3::UnitY();
  if (sum.norm() < 1e-12) throw Error(ErrorCode::kDegenerateModel, "camera up vectors cancel");
  return sum.normalized();
}

ZenithEstimate estimate_zenith(const SfmModel& model, const PlaneFitOptions& options) {
  model.validate();
  const auto directions = collect_lateral_directions(model);
  Vec3 mean_up = Vec3::Zero();
  for (const auto& cam : model.cameras) mean_up += cam.rig.rotation().transpose() * Vec3::UnitY();
  return fit_horizon_plane(directions, mean_up, options);
}

ModelLabels label_model(const SfmModel& model, const ZenithEstimate& zenith) {
  if (zenith.inliers.size() != model.cameras.size()) {
    throw Error(ErrorCode::kInvalidArgument, "zenith estimate does not match model");
  }
  ModelLabels out;
  for (std::size_t i = 0; i < model.cameras.size(); ++i) {
    const auto& cam = model.cameras[i];
    if (!zenith.inliers[i]) {
      out.skipped.push_back({cam.image_id, kReasonExcessResidual});
      continue;
    }
    const HorizonLine line = horizon_from_zenith(cam.rig, cam.frame, zenith.zenith);
    if (line.is_vertical()) {
      out.skipped.push_back({cam.image_id, kReasonVerticalHorizon});
      continue;
    }
    out.labels.push_back({cam.image_id, cam.frame, line});
  }
  return out;
}

ResidualReport make_residual_report(const SfmModel& model, const ZenithEstimate& zenith) {
  ResidualReport report;
  report.model_id = model.model_id;
  report.cameras = zenith.residuals.size();
  report.inliers = zenith.inlier_count();
  report.inlier_fraction =
      report.cameras == 0 ? 0.0 : static_cast<double>(report.inliers) / report.cameras;
  std::vector<double> deg;
  for (double r : zenith.residuals) deg.push_back(rad2deg(r));
  report.median_residual_deg = median_of(deg);
  report.zenith = zenith.zenith;
  report.zenith_angle_deg =
      rad2deg(std::acos(std::clamp(zenith.zenith.normalized().y(), -1.0, 1.0)));
  // 1-degree bins up to 10, then one bin per 10 degrees to 90.
  for (int e = 0; e <= 10; ++e) report.histogram_edges_deg.push_back(e);
  for (int e = 20; e <= 90; e += 10) report.histogram_edges_deg.push_back(e);
  report.histogram.assign(report.histogram_edges_deg.size() - 1, 0);
  for (double d : deg) {
    auto it = std::upper_bound(report.histogram_edges_deg.begin(), report.histogram_edges_deg.end(), d);
    auto bin = static_cast<std::size_t>(std::distance(report.histogram_edges_deg.begin(), it));
    bin = std::clamp<std::size_t>(bin, 1, report.histogram.size()) - 1;
    ++report.histogram[bin];
  }
  return report;
}

std::string residual_report_json(const ResidualReport& report) {
  nlohmann::ordered_json j;
  j["model_id"] = report.model_id;
  j["cameras"] = report.cameras;
  j["inliers"] = report.inliers;
  j["inlier_fraction"] = report.inlier_fraction;
  j["median_residual_deg"] = report.median_residual_deg;
  j["zenith"] = {report.zenith.x(), report.zenith.y(), report.zenith.z()};
  j["zenith_angle_deg"] = report.zenith_angle_deg;
  j["histogram_edges_deg"] = report.histogram_edges_deg;
  j["histogram"] = report.histogram;
  return j.dump(2);
}

}  // namespace horizon

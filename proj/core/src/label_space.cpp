#include "horizon/label_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>

#include "horizon/error.hpp"

namespace horizon {
namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? sorted[lo] : sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::ordered_json bins_json(const BinSpec& spec) {
  nlohmann::ordered_json j;
  j["parameter"] = to_string(spec.parameter);
  j["symmetric"] = spec.symmetric;
  j["symmetry_center"] = spec.symmetry_center;
  j["edges"] = spec.edges;
  j["centers"] = spec.centers;
  return j;
}

BinSpec bins_from_json(const nlohmann::json& j) {
  BinSpec spec;
  spec.parameter = parse_label_parameter(j.at("parameter").get<std::string>());
  spec.symmetric = j.value("symmetric", false);
  spec.symmetry_center = j.value("symmetry_center", default_symmetry_center(spec.parameter));
  spec.edges = j.at("edges").get<std::vector<double>>();
  spec.centers = j.at("centers").get<std::vector<double>>();
  spec.validate();
  return spec;
}

// Index i and weight t such that value ~ (1-t)*x[i] + t*x[i+1], clamped.
std::pair<std::size_t, double> locate(const std::vector<double>& centers, double value) {
  if (centers.size() == 1 || value <= centers.front()) return {0, 0.0};
  if (value >= centers.back()) return {centers.size() - 2, 1.0};
  const auto it = std::upper_bound(centers.begin(), centers.end(), value);
  const auto i = static_cast<std::size_t>(std::distance(centers.begin(), it)) - 1;
  const double span = centers[i + 1] - centers[i];
  return {i, span > 0.0 ? (value - centers[i]) / span : 0.0};
}

}  // namespace

const char* to_string(LabelParameter parameter) {
  switch (parameter) {
    case LabelParameter::kTheta: return "theta";
    case LabelParameter::kRho: return "rho";
    case LabelParameter::kLeft: return "l";
    case LabelParameter::kRight: return "r";
  }
  return "?";
}

LabelParameter parse_label_parameter(const std::string& name) {
  if (name == "theta") return LabelParameter::kTheta;
  if (name == "rho") return LabelParameter::kRho;
  if (name == "l" || name == "left") return LabelParameter::kLeft;
  if (name == "r" || name == "right") return LabelParameter::kRight;
  throw Error(ErrorCode::kFormat, "unknown label parameter '" + name + "'");
}

double default_symmetry_center(LabelParameter parameter) {
  return parameter == LabelParameter::kTheta ? kPi / 2.0 : 0.0;
}

void BinSpec::validate() const {
  if (centers.empty() || edges.size() != centers.size() + 1) {
    throw Error(ErrorCode::kDegenerateBins, "bin spec needs N centers and N+1 edges");
  }
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1])) {
      throw Error(ErrorCode::kDegenerateBins,
                  "bin edges " + std::to_string(i) + " and " + std::to_string(i + 1) + " coincide");
    }
  }
}

BinSpec build_bins(LabelParameter parameter, std::span<const double> samples, std::size_t n,
                   bool symmetric) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "bin count must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> uniq = sorted;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < n) {
    throw Error(ErrorCode::kInsufficientData, "need at least " + std::to_string(n) +
                                                  " distinct samples, got " + std::to_string(uniq.size()));
  }

  BinSpec spec;
  spec.parameter = parameter;
  spec.symmetric = symmetric;
  spec.symmetry_center = default_symmetry_center(parameter);
  spec.edges.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    spec.edges[k] = quantile_sorted(sorted, static_cast<double>(k) / static_cast<double>(n));
  }

  if (symmetric) {
    const double c = spec.symmetry_center;
    std::vector<double> sym(n + 1);
    for (std::size_t k = 0; 2 * k < n; ++k) {
      const std::size_t hi = n - k;
      const double d = 0.5 * (spec.edges[hi] - spec.edges[k]);
      // Upper edge first; the lower one is its exact mirror (Sterbenz).
      sym[hi] = c + d;
      sym[k] = 2.0 * c - sym[hi];
    }
    if (n % 2 == 0) sym[n / 2] = c;
    spec.edges = std::move(sym);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!(spec.edges[i] < spec.edges[i + 1])) {
      throw Error(ErrorCode::kDegenerateBins,
                  "bin edges " + std::to_string(i) + " and " + std::to_string(i + 1) +
                      " coincide (duplicate-heavy data)");
    }
  }

  spec.centers.assign(n, 0.0);
  std::vector<std::vector<double>> members(n);
  for (double s : sorted) members[assign_bin(spec, s)].push_back(s);
  for (std::size_t i = 0; i < n; ++i) {
    spec.centers[i] = members[i].empty() ? 0.5 * (spec.edges[i] + spec.edges[i + 1])
                                         : median_sorted(members[i]);
  }
  return spec;
}

std::size_t assign_bin(const BinSpec& spec, double value) {
  const auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), value);
  const auto idx = std::distance(spec.edges.begin(), it) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(spec.size()) - 1));
}

std::string label_space_to_json(const LabelSpace& space) {
  nlohmann::ordered_json j;
  j["theta"] = bins_json(space.theta);
  j["rho"] = bins_json(space.rho);
  return j.dump(2);
}

LabelSpace label_space_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return {bins_from_json(j.at("theta")), bins_from_json(j.at("rho"))};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("label space: ") + e.what());
  }
}

LabelSpace read_label_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormat, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return label_space_from_json(ss.str());
}

void write_label_space(const std::string& path, const LabelSpace& space) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFormat, "cannot write '" + path + "'");
  out << label_space_to_json(space) << '\n';
}

HorizonDistribution::HorizonDistribution(std::shared_ptr<const LabelSpace> space,
                                         std::vector<double> probabilities, Window window)
    : space_(std::move(space)), probs_(std::move(probabilities)), window_(window) {
  if (!space_) throw Error(ErrorCode::kInvalidArgument, "distribution needs a label space");
  if (probs_.size() != theta_bins() * rho_bins()) {
    throw Error(ErrorCode::kInvalidArgument, "probability grid does not match label space");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kInvalidArgument, "probabilities must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "probabilities sum to " + std::to_string(sum));
  }
  for (double& p : probs_) p /= sum;
  if (!(window_.width > 0.0 && window_.height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "distribution window must have positive size");
  }
  point_ = decode(Decoder::kArgmaxCenter);
}

std::size_t HorizonDistribution::argmax() const {
  return static_cast<std::size_t>(
      std::distance(probs_.begin(), std::max_element(probs_.begin(), probs_.end())));
}

HorizonLine HorizonDistribution::decode(Decoder decoder) const {
  if (decoder == Decoder::kArgmaxCenter) {
    const std::size_t idx = argmax();
    return HorizonLine::from_slope_offset(space_->theta.centers[idx / rho_bins()],
                                          space_->rho.centers[idx % rho_bins()]);
  }
  double theta = 0.0, rho = 0.0;
  for (std::size_t i = 0; i < theta_bins(); ++i) {
    for (std::size_t j = 0; j < rho_bins(); ++j) {
      theta += at(i, j) * space_->theta.centers[i];
      rho += at(i, j) * space_->rho.centers[j];
    }
  }
  return HorizonLine::from_slope_offset(theta, rho);
}

double HorizonDistribution::density_at(double theta, double rho) const {
  const auto [i, ti] = locate(space_->theta.centers, theta);
  const auto [j, tj] = locate(space_->rho.centers, rho);
  const std::size_t i1 = std::min(i + 1, theta_bins() - 1);
  const std::size_t j1 = std::min(j + 1, rho_bins() - 1);
  return (1.0 - ti) * ((1.0 - tj) * at(i, j) + tj * at(i, j1)) +
         ti * ((1.0 - tj) * at(i1, j) + tj * at(i1, j1));
}

HorizonDistribution bins_to_distribution(std::shared_ptr<const LabelSpace> space,
                                         std::span<const double> logits, const Window& window) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "logits must be finite");
    peak = std::max(peak, v);
  }
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += probs[i] = std::exp(logits[i] - peak);
  for (double& p : probs) p /= sum;
  return HorizonDistribution(std::move(space), std::move(probs), window);
}

HorizonDistribution distribution_from_marginals(std::shared_ptr<const LabelSpace> space,
                                                std::span<const double> theta_probs,
                                                std::span<const double> rho_probs,
                                                const Window& window) {
  std::vector<double> probs;
  probs.reserve(theta_probs.size() * rho_probs.size());
  for (double a : theta_probs) {
    for (double b : rho_probs) probs.push_back(a * b);
  }
  return HorizonDistribution(std::move(space), std::move(probs), window);
}

}  // namespace horizon

#include "horizon/estimator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "horizon/error.hpp"

namespace horizon {
namespace {

constexpr char kGridMagic[8] = {'H', 'Z', 'G', 'R', 'I', 'D', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::kFormat, "external grid file truncated");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw Error(ErrorCode::kFormat, "external grid file truncated");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw Error(ErrorCode::kFormat, "external grid file truncated");
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFormat, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

HorizonDistribution one_hot(std::shared_ptr<const LabelSpace> space, const HorizonLine& line,
                            const Window& window) {
  const std::size_t i = assign_bin(space->theta, line.theta());
  const std::size_t j = assign_bin(space->rho, line.rho());
  std::vector<double> probs(space->theta.size() * space->rho.size(), 0.0);
  probs[i * space->rho.size() + j] = 1.0;
  HorizonDistribution dist(std::move(space), std::move(probs), window);
  dist.set_point_estimate(line);
  return dist;
}

}  // namespace

LossValue huber_loss(double x, double delta) {
  if (std::abs(x) <= delta) return {0.5 * x * x, x};
  return {delta * (std::abs(x) - 0.5 * delta), x > 0.0 ? delta : -delta};
}

LossValue l2_loss(double x) { return {0.5 * x * x, x}; }

LossValue evaluate_loss(LossKind kind, double x, double delta) {
  return kind == LossKind::kHuber ? huber_loss(x, delta) : l2_loss(x);
}

const char* to_string(LossKind kind) { return kind == LossKind::kHuber ? "huber" : "l2"; }

const char* to_string(Parameterization p) {
  return p == Parameterization::kSlopeOffset ? "theta_rho" : "lr";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "huber") return LossKind::kHuber;
  if (name == "l2") return LossKind::kL2;
  throw Error(ErrorCode::kFormat, "unknown loss '" + name + "'");
}

Parameterization parse_parameterization(const std::string& name) {
  if (name == "theta_rho") return Parameterization::kSlopeOffset;
  if (name == "lr") return Parameterization::kLeftRight;
  throw Error(ErrorCode::kFormat, "unknown parameterization '" + name + "'");
}

std::array<double, 2> regression_targets(const HorizonLine& line, Parameterization p, double aspect) {
  if (p == Parameterization::kSlopeOffset) return {line.theta(), line.rho()};
  const LeftRight lr = line.left_right(aspect);
  return {lr.left, lr.right};
}

HorizonLine line_from_targets(const std::array<double, 2>& t, Parameterization p, double aspect) {
  if (p == Parameterization::kSlopeOffset) return HorizonLine::from_slope_offset(t[0], t[1]);
  return HorizonLine::from_left_right(t[0], t[1], aspect);
}

Eigen::VectorXd extract_features(const Image& image) {
  const Image small = resize_area(to_grayscale(image), kFeatureGrid, kFeatureGrid);
  Eigen::VectorXd f(kFeatureDim);
  constexpr int n = kFeatureGrid;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      f(y * n + x) = small.at(x, y);
      const int up = std::max(y - 1, 0), down = std::min(y + 1, n - 1);
      f(n * n + y * n + x) = std::abs(small.at(x, down) - small.at(x, up)) / (down - up);
    }
  }
  return f;
}

LinearObjective::LinearObjective(Eigen::MatrixXd features, Eigen::MatrixXd targets,
                                 LossKind loss, double delta)
    : features_(std::move(features)), targets_(std::move(targets)), loss_(loss), delta_(delta) {
  if (features_.rows() != targets_.rows() || targets_.cols() != 2 || features_.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "feature/target shapes disagree");
  }
}

double LinearObjective::value_and_gradient(const Eigen::VectorXd& params,
                                           std::span<const std::size_t> rows,
                                           Eigen::VectorXd* grad) const {
  const Eigen::Index d = features_.cols();
  if (grad) grad->setZero(static_cast<Eigen::Index>(parameter_count()));
  double total = 0.0;
  for (std::size_t r : rows) {
    const auto x = features_.row(static_cast<Eigen::Index>(r));
    for (Eigen::Index t = 0; t < 2; ++t) {
      const auto w = params.segment(t * (d + 1), d);
      const double pred = x.dot(w) + params(t * (d + 1) + d);
      const LossValue lv = evaluate_loss(loss_, pred - targets_(static_cast<Eigen::Index>(r), t), delta_);
      total += lv.loss;
      if (grad) {
        grad->segment(t * (d + 1), d) += lv.gradient * x.transpose();
        (*grad)(t * (d + 1) + d) += lv.gradient;
      }
    }
  }
  const double scale = 1.0 / static_cast<double>(rows.size());
  if (grad) *grad *= scale;
  return total * scale;
}

double LinearObjective::value(const Eigen::VectorXd& params) const {
  std::vector<std::size_t> rows(static_cast<std::size_t>(features_.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return value_and_gradient(params, rows, nullptr);
}

Eigen::VectorXd LinearObjective::gradient(const Eigen::VectorXd& params) const {
  std::vector<std::size_t> rows(static_cast<std::size_t>(features_.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  Eigen::VectorXd g;
  value_and_gradient(params, rows, &g);
  return g;
}

std::array<double, 2> LinearModel::predict(const Image& square_image) const {
  const Eigen::VectorXd x =
      (extract_features(square_image) - feature_mean).cwiseQuotient(feature_scale);
  const Eigen::Index d = x.size();
  return {x.dot(params.segment(0, d)) + params(d),
          x.dot(params.segment(d + 1, d)) + params(2 * d + 1)};
}

ExternalGridStore::ExternalGridStore(std::string label_space_ref,
                                     std::vector<ExternalGridRecord> records)
    : label_space_ref_(std::move(label_space_ref)), records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.probabilities.size() != r.theta_bins * r.rho_bins) {
      throw Error(ErrorCode::kFormat, "grid for '" + r.image_id + "' has wrong size");
    }
    if (!index_.emplace(std::make_pair(r.image_id, r.crop_index), i).second) {
      throw Error(ErrorCode::kFormat, "duplicate grid for '" + r.image_id + "' crop " +
                                          std::to_string(r.crop_index));
    }
  }
}

const ExternalGridRecord& ExternalGridStore::find(const std::string& image_id, int crop_index) const {
  const auto it = index_.find({image_id, crop_index});
  if (it == index_.end()) {
    throw Error(ErrorCode::kMissingExternalGrid,
                "no grid for image '" + image_id + "' crop " + std::to_string(crop_index));
  }
  return records_[it->second];
}

ExternalGridStore read_external_grids(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".json") {
    try {
      const auto j = nlohmann::json::parse(read_text(path));
      std::vector<ExternalGridRecord> records;
      for (const auto& r : j.at("records")) {
        records.push_back({r.at("image_id").get<std::string>(), r.value("crop", 0),
                           r.at("theta_bins").get<std::size_t>(), r.at("rho_bins").get<std::size_t>(),
                           r.at("probabilities").get<std::vector<double>>()});
      }
      return {j.value("label_space", std::string()), std::move(records)};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, std::string("external grid JSON: ") + e.what());
    }
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFormat, "cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kGridMagic, 8) != 0) {
    throw Error(ErrorCode::kFormat, "'" + path + "' is not an external grid file");
  }
  std::string ref = get_string(in);
  const std::uint32_t count = get_u32(in);
  std::vector<ExternalGridRecord> records;
  records.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    ExternalGridRecord r;
    r.image_id = get_string(in);
    r.crop_index = static_cast<int>(get_u32(in));
    r.theta_bins = get_u32(in);
    r.rho_bins = get_u32(in);
    r.probabilities.resize(r.theta_bins * r.rho_bins);
    for (double& p : r.probabilities) p = get_f64(in);
    records.push_back(std::move(r));
  }
  return {std::move(ref), std::move(records)};
}

void write_external_grids_json(const std::string& path, const ExternalGridStore& store) {
  nlohmann::ordered_json j;
  j["label_space"] = store.label_space_ref();
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : store.records()) {
    j["records"].push_back({{"image_id", r.image_id},
                            {"crop", r.crop_index},
                            {"theta_bins", r.theta_bins},
                            {"rho_bins", r.rho_bins},
                            {"probabilities", r.probabilities}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFormat, "cannot write '" + path + "'");
  out << j.dump() << '\n';
}

void write_external_grids_binary(const std::string& path, const ExternalGridStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFormat, "cannot write '" + path + "'");
  out.write(kGridMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(store.label_space_ref().size()));
  out.write(store.label_space_ref().data(), static_cast<std::streamsize>(store.label_space_ref().size()));
  put_u32(out, static_cast<std::uint32_t>(store.records().size()));
  for (const auto& r : store.records()) {
    put_u32(out, static_cast<std::uint32_t>(r.image_id.size()));
    out.write(r.image_id.data(), static_cast<std::streamsize>(r.image_id.size()));
    put_u32(out, static_cast<std::uint32_t>(r.crop_index));
    put_u32(out, static_cast<std::uint32_t>(r.theta_bins));
    put_u32(out, static_cast<std::uint32_t>(r.rho_bins));
    for (double p : r.probabilities) put_f64(out, p);
  }
}

const char* to_string(PredictorSpec::Kind kind) {
  switch (kind) {
    case PredictorSpec::Kind::kPrior: return "prior";
    case PredictorSpec::Kind::kLinear: return "linear-feature";
    case PredictorSpec::Kind::kExternalGrid: return "external-grid";
  }
  return "?";
}

std::string predictor_to_json(const PredictorSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(spec.kind);
  j["parameterization"] = to_string(spec.parameterization);
  j["metadata"] = spec.metadata;
  switch (spec.kind) {
    case PredictorSpec::Kind::kPrior:
      j["probabilities"] = spec.prior;
      break;
    case PredictorSpec::Kind::kLinear:
      j["feature_mean"] = to_std(spec.linear.feature_mean);
      j["feature_scale"] = to_std(spec.linear.feature_scale);
      j["params"] = to_std(spec.linear.params);
      break;
    case PredictorSpec::Kind::kExternalGrid:
      j["grid_file"] = spec.external_grid_file;
      break;
  }
  return j.dump(1);
}

PredictorSpec predictor_from_json(const std::string& text, const std::string& base_dir) {
  PredictorSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto kind = j.at("kind").get<std::string>();
    spec.parameterization = parse_parameterization(j.value("parameterization", std::string("theta_rho")));
    spec.metadata = j.value("metadata", std::map<std::string, std::string>{});
    if (kind == "prior") {
      spec.kind = PredictorSpec::Kind::kPrior;
      spec.prior = j.at("probabilities").get<std::vector<double>>();
    } else if (kind == "linear-feature") {
      spec.kind = PredictorSpec::Kind::kLinear;
      spec.linear.feature_mean = to_eigen(j.at("feature_mean").get<std::vector<double>>());
      spec.linear.feature_scale = to_eigen(j.at("feature_scale").get<std::vector<double>>());
      spec.linear.params = to_eigen(j.at("params").get<std::vector<double>>());
      if (spec.linear.feature_mean.size() != kFeatureDim ||
          spec.linear.feature_scale.size() != kFeatureDim ||
          spec.linear.params.size() != 2 * (kFeatureDim + 1)) {
        throw Error(ErrorCode::kFormat, "linear predictor has wrong dimensions");
      }
    } else if (kind == "external-grid") {
      spec.kind = PredictorSpec::Kind::kExternalGrid;
      spec.external_grid_file = j.at("grid_file").get<std::string>();
      std::filesystem::path grid(spec.external_grid_file);
      if (grid.is_relative()) grid = std::filesystem::path(base_dir) / grid;
      spec.external = std::make_shared<ExternalGridStore>(read_external_grids(grid.string()));
    } else {
      throw Error(ErrorCode::kFormat, "unknown predictor kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("predictor spec: ") + e.what());
  }
  return spec;
}

PredictorSpec read_predictor(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path();
  return predictor_from_json(read_text(path), dir.empty() ? "." : dir.string());
}

void write_predictor(const std::string& path, const PredictorSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFormat, "cannot write '" + path + "'");
  out << predictor_to_json(spec) << '\n';
}

TrainResult train_linear_baseline(std::span<const TrainingExample> data, const TrainOptions& options) {
  if (data.size() < kMinTrainingImages) {
    throw Error(ErrorCode::kInsufficientData, "need at least " + std::to_string(kMinTrainingImages) +
                                                  " labeled images, got " + std::to_string(data.size()));
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd raw(n, kFeatureDim);
  Eigen::MatrixXd targets(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ex = data[static_cast<std::size_t>(i)];
    const ImageFrame frame = ex.image.frame();
    const Window square = center_square(frame);
    HorizonLine line = ex.line;
    Image image = ex.image;
    if (frame.width != frame.height) {
      line = transfer_horizon(ex.line, Window::full(frame), square, frame);
      image = crop(ex.image, square);
    }
    raw.row(i) = extract_features(image).transpose();
    const auto t = regression_targets(line, options.parameterization);
    targets(i, 0) = t[0];
    targets(i, 1) = t[1];
  }

  LinearModel model;
  model.feature_mean = raw.colwise().mean().transpose();
  model.feature_scale.resize(kFeatureDim);
  for (Eigen::Index c = 0; c < kFeatureDim; ++c) {
    const double var = (raw.col(c).array() - model.feature_mean(c)).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    model.feature_scale(c) = sd > 1e-8 ? sd : 1.0;
  }
  Eigen::MatrixXd features = raw;
  for (Eigen::Index r = 0; r < n; ++r) {
    features.row(r) = (raw.row(r).transpose() - model.feature_mean).cwiseQuotient(model.feature_scale).transpose();
  }
  const LinearObjective objective(std::move(features), targets, options.loss, options.delta);

  TrainResult result;
  {
    // Constant baseline: target means as biases, zero weights.
    Eigen::VectorXd constant = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(objective.parameter_count()));
    constant(kFeatureDim) = targets.col(0).mean();
    constant(2 * kFeatureDim + 1) = targets.col(1).mean();
    result.constant_predictor_loss = objective.value(constant);
  }

  Eigen::VectorXd params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(objective.parameter_count()));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  result.epoch_losses.push_back(objective.value(params));
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      objective.value_and_gradient(params, std::span(order).subspan(start, len), &grad);
      params -= options.learning_rate * grad;
    }
    result.epoch_losses.push_back(objective.value(params));
  }
  model.params = std::move(params);

  result.spec.kind = PredictorSpec::Kind::kLinear;
  result.spec.parameterization = options.parameterization;
  result.spec.linear = std::move(model);
  result.spec.metadata = {{"loss", to_string(options.loss)},
                          {"delta", std::to_string(options.delta)},
                          {"learning_rate", std::to_string(options.learning_rate)},
                          {"epochs", std::to_string(options.epochs)},
                          {"batch_size", std::to_string(batch)},
                          {"seed", std::to_string(options.seed)}};
  return result;
}

PredictorSpec train_prior(std::span<const HorizonLine> labels, const LabelSpace& space) {
  if (labels.empty()) throw Error(ErrorCode::kInsufficientData, "prior needs at least one label");
  PredictorSpec spec;
  spec.kind = PredictorSpec::Kind::kPrior;
  spec.prior.assign(space.theta.size() * space.rho.size(), 0.0);
  for (const auto& line : labels) {
    spec.prior[assign_bin(space.theta, line.theta()) * space.rho.size() +
               assign_bin(space.rho, line.rho())] += 1.0;
  }
  for (double& p : spec.prior) p /= static_cast<double>(labels.size());
  return spec;
}

HorizonDistribution predict(const PredictorSpec& spec, const PredictionInput& input,
                            std::shared_ptr<const LabelSpace> space) {
  if (!space) throw Error(ErrorCode::kInvalidArgument, "predict needs a label space");
  const std::size_t cells = space->theta.size() * space->rho.size();
  switch (spec.kind) {
    case PredictorSpec::Kind::kPrior:
      if (spec.prior.size() != cells) {
        throw Error(ErrorCode::kInvalidArgument, "prior grid does not match label space");
      }
      return HorizonDistribution(std::move(space), spec.prior, input.window);
    case PredictorSpec::Kind::kExternalGrid: {
      if (!spec.external) throw Error(ErrorCode::kMissingExternalGrid, "no external grids loaded");
      const auto& record = spec.external->find(input.image_id, input.crop_index);
      if (record.theta_bins != space->theta.size() || record.rho_bins != space->rho.size()) {
        throw Error(ErrorCode::kInvalidArgument, "external grid for '" + input.image_id +
                                                     "' does not match label space");
      }
      return HorizonDistribution(std::move(space), record.probabilities, input.window);
    }
    case PredictorSpec::Kind::kLinear: {
      if (!input.image || input.image->width() != input.image->height()) {
        throw Error(ErrorCode::kInvalidArgument, "linear predictor needs a square image");
      }
      const auto targets = spec.linear.predict(*input.image);
      return one_hot(std::move(space), line_from_targets(targets, spec.parameterization), input.window);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown predictor kind");
}

}  // namespace horizon

#pragma once

// Horizon predictors behind one interface.
//
// The CNNs used for real horizon estimation are out of reach here; their
// outputs enter through external probability grids. Two in-process
// predictors exist to exercise the label spaces and losses: the training
// label prior and a linear regressor over a fixed 512-dim feature recipe.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "horizon/geometry.hpp"
#include "horizon/image.hpp"
#include "horizon/label_space.hpp"

namespace horizon {

struct LossValue {
  double loss = 0.0;
  double gradient = 0.0;
};

/// 0.5 x^2 for |x| <= delta, delta (|x| - delta / 2) otherwise.
LossValue huber_loss(double x, double delta = 1.0);
/// x^2 / 2, so the gradient matches Huber's quadratic zone.
LossValue l2_loss(double x);

enum class LossKind { kHuber, kL2 };
LossValue evaluate_loss(LossKind kind, double x, double delta = 1.0);

enum class Parameterization { kSlopeOffset, kLeftRight };

const char* to_string(LossKind kind);
const char* to_string(Parameterization p);
LossKind parse_loss_kind(const std::string& name);
Parameterization parse_parameterization(const std::string& name);

/// Regression targets for a line in a frame of the given aspect ratio.
std::array<double, 2> regression_targets(const HorizonLine& line, Parameterization p,
                                         double aspect = 1.0);
HorizonLine line_from_targets(const std::array<double, 2>& targets, Parameterization p,
                              double aspect = 1.0);

inline constexpr int kFeatureGrid = 16;
inline constexpr int kFeatureDim = 2 * kFeatureGrid * kFeatureGrid;

/// 16x16 area-downsampled grayscale followed by 16x16 absolute vertical
/// gradients of that grid.
Eigen::VectorXd extract_features(const Image& image);

/// Mean loss over samples and both targets of a linear model on
/// (already standardized) features. Parameters are packed per target as
/// [w_0 .. w_{d-1}, b].
class LinearObjective {
 public:
  LinearObjective(Eigen::MatrixXd features, Eigen::MatrixXd targets, LossKind loss,
                  double delta = 1.0);

  std::size_t parameter_count() const { return 2 * (features_.cols() + 1); }
  double value(const Eigen::VectorXd& params) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const;
  /// Value and gradient over a subset of rows.
  double value_and_gradient(const Eigen::VectorXd& params, std::span<const std::size_t> rows,
                            Eigen::VectorXd* grad) const;

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::MatrixXd& targets() const { return targets_; }

 private:
  Eigen::MatrixXd features_;
  Eigen::MatrixXd targets_;
  LossKind loss_;
  double delta_;
};

struct LinearModel {
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  Eigen::VectorXd params;  // packed as in LinearObjective

  std::array<double, 2> predict(const Image& square_image) const;
};

struct ExternalGridRecord {
  std::string image_id;
  int crop_index = 0;
  std::size_t theta_bins = 0;
  std::size_t rho_bins = 0;
  std::vector<double> probabilities;  // row-major theta x rho
};

// External grid files hold one record per (image id, crop index); crop 0 is
// the center crop, 1..9 the 3x3 grid in row-major order.
//
// JSON:  {"label_space": "<ref>", "records": [{"image_id", "crop",
//         "theta_bins", "rho_bins", "probabilities": [...]}, ...]}
// Binary (little endian): "HZGRID01", u32 ref_len, ref bytes, u32 count,
//         then per record: u32 id_len, id bytes, u32 crop, u32 theta_bins,
//         u32 rho_bins, theta_bins*rho_bins float64 values.
class ExternalGridStore {
 public:
  ExternalGridStore() = default;
  ExternalGridStore(std::string label_space_ref, std::vector<ExternalGridRecord> records);

  const std::string& label_space_ref() const { return label_space_ref_; }
  const std::vector<ExternalGridRecord>& records() const { return records_; }
  /// Throws MissingExternalGrid.
  const ExternalGridRecord& find(const std::string& image_id, int crop_index) const;

 private:
  std::string label_space_ref_;
  std::vector<ExternalGridRecord> records_;
  std::map<std::pair<std::string, int>, std::size_t> index_;
};

ExternalGridStore read_external_grids(const std::string& path);
void write_external_grids_json(const std::string& path, const ExternalGridStore& store);
void write_external_grids_binary(const std::string& path, const ExternalGridStore& store);

struct PredictorSpec {
  enum class Kind { kPrior, kLinear, kExternalGrid };

  Kind kind = Kind::kPrior;
  Parameterization parameterization = Parameterization::kSlopeOffset;
  std::vector<double> prior;  // kPrior: theta x rho grid
  LinearModel linear;         // kLinear
  std::string external_grid_file;
  std::shared_ptr<const ExternalGridStore> external;  // kExternalGrid
  /// Free-form notes, e.g. how an external CNN was initialized and trained.
  std::map<std::string, std::string> metadata;
};

const char* to_string(PredictorSpec::Kind kind);

std::string predictor_to_json(const PredictorSpec& spec);
/// External grid files are resolved relative to `base_dir`.
PredictorSpec predictor_from_json(const std::string& text, const std::string& base_dir = ".");
PredictorSpec read_predictor(const std::string& path);
void write_predictor(const std::string& path, const PredictorSpec& spec);

struct TrainingExample {
  Image image;
  HorizonLine line;  // in the image's own centered frame
};

struct TrainOptions {
  LossKind loss = LossKind::kHuber;
  Parameterization parameterization = Parameterization::kLeftRight;
  double delta = 1.0;
  double learning_rate = 1e-3;
  int epochs = 300;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainResult {
  PredictorSpec spec;
  std::vector<double> epoch_losses;  // full-set objective; [0] is before training
  double constant_predictor_loss = 0.0;
};

inline constexpr std::size_t kMinTrainingImages = 50;

/// Mini-batch gradient descent on the chosen loss. Non-square images are
/// reduced to their maximal center square (label transferred). Throws
/// InsufficientData below 50 images.
TrainResult train_linear_baseline(std::span<const TrainingExample> data,
                                  const TrainOptions& options);

/// Histogram of training labels over the label space's (theta, rho) cells.
PredictorSpec train_prior(std::span<const HorizonLine> square_frame_labels, const LabelSpace& space);

struct PredictionInput {
  std::string image_id;
  int crop_index = 0;
  const Image* image = nullptr;  // square crop fed to the predictor
  Window window;                 // placement of that crop in the full image
};

/// Throws MissingExternalGrid for unknown (image id, crop) pairs and
/// InvalidArgument for non-square images.
HorizonDistribution predict(const PredictorSpec& spec, const PredictionInput& input,
                            std::shared_ptr<const LabelSpace> space);

}  // namespace horizon

#pragma once

// Horizon detection error and the cumulative error histogram (AUC).

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "horizon/geometry.hpp"
#include "horizon/label_io.hpp"

namespace horizon {

inline constexpr double kDefaultMaxThreshold = 0.25;

/// Largest vertical gap between the two lines over the image width, in
/// image heights. Throws VerticalHorizon.
double horizon_error(const HorizonLine& pred, const HorizonLine& truth, const ImageFrame& frame);

struct ErrorCurve {
  std::vector<double> errors;  // sorted ascending
  double max_threshold = kDefaultMaxThreshold;
  double auc = 0.0;

  /// Fraction of errors <= t.
  double fraction_at(double t) const;
  /// (0, F(0)), (e_i, i/n) for every e_i <= max threshold, (T, F(T)).
  std::vector<std::pair<double, double>> points() const;
};

/// Exact area under the empirical CDF on [0, T], divided by T.
ErrorCurve auc(std::span<const double> errors, double max_threshold = kDefaultMaxThreshold);

struct ImageError {
  std::string image_id;
  double error = 0.0;
};

struct DatasetEvaluation {
  ErrorCurve curve;
  std::vector<ImageError> per_image;  // label order
  std::vector<std::string> missing;   // labeled ids without a prediction
};

/// Pairs predictions with labels by image id. Throws MissingPrediction on
/// unmatched labels unless `allow_missing`, in which case they are listed
/// and excluded.
DatasetEvaluation evaluate_dataset(const std::vector<LabelRecord>& labels,
                                   const std::vector<LabelRecord>& predictions,
                                   double max_threshold = kDefaultMaxThreshold,
                                   bool allow_missing = false, unsigned workers = 1);

void write_per_image_csv(std::ostream& out, const DatasetEvaluation& eval);
void write_curve_csv(std::ostream& out, const ErrorCurve& curve);

}  // namespace horizon

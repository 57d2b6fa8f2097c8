#include "horizon/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "horizon/error.hpp"
#include "horizon/parallel.hpp"

namespace horizon {

double horizon_error(const HorizonLine& pred, const HorizonLine& truth, const ImageFrame& frame) {
  const double aspect = frame.aspect();
  const LeftRight p = pred.left_right(aspect);
  const LeftRight t = truth.left_right(aspect);
  return std::max(std::abs(p.left - t.left), std::abs(p.right - t.right));
}

double ErrorCurve::fraction_at(double t) const {
  if (errors.empty()) return 0.0;
  const auto n = std::upper_bound(errors.begin(), errors.end(), t) - errors.begin();
  return static_cast<double>(n) / static_cast<double>(errors.size());
}

std::vector<std::pair<double, double>> ErrorCurve::points() const {
  std::vector<std::pair<double, double>> out;
  out.emplace_back(0.0, fraction_at(0.0));
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size() && errors[i] <= max_threshold; ++i) {
    out.emplace_back(errors[i], static_cast<double>(i + 1) / n);
  }
  out.emplace_back(max_threshold, fraction_at(max_threshold));
  return out;
}

ErrorCurve auc(std::span<const double> errors, double max_threshold) {
  if (!(max_threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "max threshold must be positive");
  ErrorCurve curve;
  curve.max_threshold = max_threshold;
  curve.errors.assign(errors.begin(), errors.end());
  for (double e : curve.errors) {
    if (!(e >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "errors must be non-negative");
  }
  std::sort(curve.errors.begin(), curve.errors.end());
  if (curve.errors.empty()) return curve;
  // Each error e contributes the length of [e, T] on which it is counted.
  double area = 0.0;
  for (double e : curve.errors) area += max_threshold - std::min(e, max_threshold);
  curve.auc = area / (static_cast<double>(curve.errors.size()) * max_threshold);
  return curve;
}

DatasetEvaluation evaluate_dataset(const std::vector<LabelRecord>& labels,
                                   const std::vector<LabelRecord>& predictions,
                                   double max_threshold, bool allow_missing, unsigned workers) {
  std::unordered_map<std::string, const LabelRecord*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.image_id, &p).second) {
      throw Error(ErrorCode::kFormat, "duplicate prediction for '" + p.image_id + "'");
    }
  }
  DatasetEvaluation eval;
  std::vector<std::pair<const LabelRecord*, const LabelRecord*>> pairs;
  for (const auto& label : labels) {
    const auto it = by_id.find(label.image_id);
    if (it == by_id.end()) {
      eval.missing.push_back(label.image_id);
      continue;
    }
    const LabelRecord& pred = *it->second;
    if (pred.frame.width != label.frame.width || pred.frame.height != label.frame.height) {
      throw Error(ErrorCode::kFormat, "image size mismatch for '" + label.image_id + "'");
    }
    pairs.emplace_back(&label, &pred);
  }
  if (!eval.missing.empty() && !allow_missing) {
    std::string msg = "missing prediction for " + std::to_string(eval.missing.size()) + " image(s):";
    for (std::size_t i = 0; i < eval.missing.size() && i < 10; ++i) msg += " " + eval.missing[i];
    throw Error(ErrorCode::kMissingPrediction, msg);
  }
  eval.per_image.resize(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    const auto& [label, pred] = pairs[i];
    eval.per_image[i] = {label->image_id, horizon_error(pred->line(), label->line(), label->frame)};
  });
  std::vector<double> errors;
  errors.reserve(eval.per_image.size());
  for (const auto& e : eval.per_image) errors.push_back(e.error);
  eval.curve = auc(errors, max_threshold);
  return eval;
}

void write_per_image_csv(std::ostream& out, const DatasetEvaluation& eval) {
  out << "image_id,error\n";
  for (const auto& e : eval.per_image) out << e.image_id << ',' << format_double(e.error) << '\n';
}

void write_curve_csv(std::ostream& out, const ErrorCurve& curve) {
  out << "threshold,fraction\n";
  for (const auto& [t, f] : curve.points()) out << format_double(t) << ',' << format_double(f) << '\n';
}

}  // namespace horizon

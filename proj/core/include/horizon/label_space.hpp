#pragma once

// Discretized horizon label space.
//
// Each parameter gets N bins whose edges are empirical-CDF quantiles of the
// training labels, so bins carry roughly equal mass. Theta edges can be
// forced symmetric about pi/2 (horizontal horizon). A HorizonDistribution is
// a probability grid over (theta-bin, rho-bin) cells for one image window.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "horizon/geometry.hpp"

namespace horizon {

enum class LabelParameter { kTheta, kRho, kLeft, kRight };

const char* to_string(LabelParameter parameter);
LabelParameter parse_label_parameter(const std::string& name);

/// Default symmetry center: pi/2 for theta, 0 otherwise.
double default_symmetry_center(LabelParameter parameter);

struct BinSpec {
  LabelParameter parameter = LabelParameter::kRho;
  std::vector<double> edges;    // size() + 1, strictly increasing
  std::vector<double> centers;  // decode value per bin
  double symmetry_center = 0.0;
  bool symmetric = false;

  std::size_t size() const { return centers.size(); }
  /// Throws DegenerateBins on non-increasing edges or size mismatch.
  void validate() const;
};

/// Quantile edges by linear interpolation of the sorted samples; centers are
/// per-bin sample medians (edge midpoint for empty bins). With `symmetric`,
/// each edge is averaged with the reflection of its opposite-rank edge.
BinSpec build_bins(LabelParameter parameter, std::span<const double> samples,
                   std::size_t n = 100, bool symmetric = false);

/// Half-open [e_i, e_{i+1}), last bin closed, out-of-range values clamp.
std::size_t assign_bin(const BinSpec& spec, double value);

struct LabelSpace {
  BinSpec theta;
  BinSpec rho;
};

std::string label_space_to_json(const LabelSpace& space);
LabelSpace label_space_from_json(const std::string& text);
LabelSpace read_label_space(const std::string& path);
void write_label_space(const std::string& path, const LabelSpace& space);

enum class Decoder { kArgmaxCenter, kExpectation };

class HorizonDistribution {
 public:
  /// `probabilities` is row-major theta x rho; entries must be >= 0 and sum
  /// to 1 within 1e-6 (they are renormalized exactly).
  HorizonDistribution(std::shared_ptr<const LabelSpace> space, std::vector<double> probabilities,
                      Window window);

  const LabelSpace& space() const { return *space_; }
  const std::shared_ptr<const LabelSpace>& space_ptr() const { return space_; }
  const std::vector<double>& probabilities() const { return probs_; }
  const Window& window() const { return window_; }
  std::size_t theta_bins() const { return space_->theta.size(); }
  std::size_t rho_bins() const { return space_->rho.size(); }
  double at(std::size_t theta_bin, std::size_t rho_bin) const {
    return probs_[theta_bin * rho_bins() + rho_bin];
  }

  /// Flat index of the largest cell; ties go to the lowest index.
  std::size_t argmax() const;
  double max_probability() const { return probs_[argmax()]; }

  /// Point estimate in the window's centered frame. Defaults to the center
  /// of the argmax cell; regression predictors override it.
  const HorizonLine& point_estimate() const { return point_; }
  void set_point_estimate(const HorizonLine& line) { point_ = line; }
  HorizonLine decode(Decoder decoder) const;

  /// Bilinear interpolation over bin centers, clamped at the grid border.
  double density_at(double theta, double rho) const;

 private:
  std::shared_ptr<const LabelSpace> space_;
  std::vector<double> probs_;
  Window window_;
  HorizonLine point_;
};

/// Softmax over the full theta x rho logit grid.
HorizonDistribution bins_to_distribution(std::shared_ptr<const LabelSpace> space,
                                         std::span<const double> logits, const Window& window);

/// Outer product of per-parameter softmax outputs.
HorizonDistribution distribution_from_marginals(std::shared_ptr<const LabelSpace> space,
                                                std::span<const double> theta_probs,
                                                std::span<const double> rho_probs,
                                                const Window& window);

}  // namespace horizon

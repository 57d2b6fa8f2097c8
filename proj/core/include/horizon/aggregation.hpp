#pragma once

// Combining subwindow predictions into one full-image horizon.

#include <cstddef>
#include <vector>

#include "horizon/geometry.hpp"
#include "horizon/label_space.hpp"

namespace horizon {

/// Each distribution carries its own crop geometry (its window) in the
/// coordinates of `frame`.
struct SubwindowSet {
  ImageFrame frame;
  std::vector<HorizonDistribution> subwindows;

  /// Throws InvalidArgument for an empty set or crops outside the image.
  void validate() const;
};

inline constexpr int kMinCropGridDimension = 100;
inline constexpr double kGridCropFraction = 0.99;

/// Center crop first, then the 3x3 grid row-major from the top-left.
/// Grid crops have side round(0.99 * min dimension); corner crops are flush
/// with the corners and middle ones are centered (offsets floored to whole
/// pixels).
std::vector<Window> make_crop_grid(const ImageFrame& frame);

struct AggregateResult {
  HorizonLine line;
  std::size_t dropped = 0;  // vertical estimates skipped by averaging
  double objective = 0.0;   // joint NLL of `line`; averaging leaves it 0
};

/// Confidence-weighted mean of transferred (l, r); confidence is the
/// maximum cell probability.
AggregateResult aggregate_average(const SubwindowSet& set);

struct NllOptions {
  std::size_t max_axis_candidates = 200;
  int max_refine_evaluations = 200;
  unsigned workers = 1;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over subwindows of -log(max(p_i, floor)) where p_i is the bilinear
/// density of `global` transferred into subwindow i.
double nll_objective(const SubwindowSet& set, const HorizonLine& global);

struct CandidateGrid {
  std::vector<double> theta;
  std::vector<double> rho;
};

/// Every subwindow's bin-center lines moved to full-image coordinates,
/// split into sorted unique theta and rho sets and evenly subsampled to at
/// most `max_per_axis` values each (end points kept).
CandidateGrid nll_candidate_grid(const SubwindowSet& set, std::size_t max_per_axis);

/// Coarse search over the candidate grid plus each subwindow's transferred
/// argmax, then pattern search in (theta, rho) with halving steps.
/// Throws DegenerateDistribution when every candidate sits on the floor in
/// every subwindow.
AggregateResult aggregate_nll(const SubwindowSet& set, const NllOptions& options = {});

}  // namespace horizon

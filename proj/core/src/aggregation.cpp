#include "horizon/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "horizon/error.hpp"
#include "horizon/image.hpp"
#include "horizon/parallel.hpp"

namespace horizon {
namespace {

struct Score {
  double value = std::numeric_limits<double>::infinity();
  bool floored = true;  // every subwindow hit the floor
};

Score score(const SubwindowSet& set, const Window& full, const HorizonLine& global) {
  std::vector<double> terms;
  terms.reserve(set.subwindows.size());
  bool floored = true;
  for (const auto& d : set.subwindows) {
    const HorizonLine local = transfer_horizon(global, full, d.window(), set.frame);
    const double p = d.density_at(local.theta(), local.rho());
    if (p > kProbabilityFloor) floored = false;
    terms.push_back(-std::log(std::max(p, kProbabilityFloor)));
  }
  // Summing in sorted order keeps the result independent of subwindow order.
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return {sum / static_cast<double>(terms.size()), floored};
}

std::vector<double> subsample(std::vector<double> values, std::size_t max_count) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.size() <= max_count || max_count < 2) return values;
  std::vector<double> out;
  out.reserve(max_count);
  const std::size_t last = values.size() - 1;
  for (std::size_t k = 0; k < max_count; ++k) out.push_back(values[k * last / (max_count - 1)]);
  return out;
}

double spacing(const std::vector<double>& v, double fallback) {
  if (v.size() < 2 || v.back() <= v.front()) return fallback;
  return (v.back() - v.front()) / static_cast<double>(v.size() - 1);
}

bool better(const Score& a, double a_theta, double a_rho, const Score& b, double b_theta, double b_rho) {
  return std::tie(a.value, a_theta, a_rho) < std::tie(b.value, b_theta, b_rho);
}

}  // namespace

void SubwindowSet::validate() const {
  if (subwindows.empty()) throw Error(ErrorCode::kInvalidArgument, "subwindow set is empty");
  constexpr double tol = 1e-9;
  for (const auto& d : subwindows) {
    const Window& w = d.window();
    if (w.width <= 0.0 || w.height <= 0.0 || w.x0 < -tol || w.y0 < -tol ||
        w.x0 + w.width > frame.width + tol || w.y0 + w.height > frame.height + tol) {
      throw Error(ErrorCode::kInvalidArgument, "subwindow lies outside the image");
    }
  }
}

std::vector<Window> make_crop_grid(const ImageFrame& frame) {
  const int m = std::min(frame.width, frame.height);
  if (m < kMinCropGridDimension) {
    throw Error(ErrorCode::kInvalidArgument,
                "crop grid needs a minimum dimension of " + std::to_string(kMinCropGridDimension) + " px");
  }
  std::vector<Window> crops;
  crops.push_back(center_square(frame));
  const int g = static_cast<int>(std::lround(kGridCropFraction * m));
  const int xs[3] = {0, (frame.width - g) / 2, frame.width - g};
  const int ys[3] = {0, (frame.height - g) / 2, frame.height - g};
  for (int y : ys) {
    for (int x : xs) crops.push_back(Window::square(x, y, g));
  }
  return crops;
}

AggregateResult aggregate_average(const SubwindowSet& set) {
  set.validate();
  const Window full = Window::full(set.frame);
  const double aspect = set.frame.aspect();
  std::vector<std::tuple<double, double, double>> items;  // weight, left, right
  AggregateResult result;
  for (const auto& d : set.subwindows) {
    const HorizonLine line = transfer_horizon(d.point_estimate(), d.window(), full, set.frame);
    if (line.is_vertical()) {
      ++result.dropped;
      continue;
    }
    const LeftRight lr = line.left_right(aspect);
    items.emplace_back(d.max_probability(), lr.left, lr.right);
  }
  if (items.empty()) throw Error(ErrorCode::kVerticalHorizon, "every subwindow estimate is vertical");
  std::sort(items.begin(), items.end());
  double total = 0.0;
  for (const auto& [w, l, r] : items) total += w;
  double left = 0.0, right = 0.0;
  for (const auto& [w, l, r] : items) {
    left += (w / total) * l;
    right += (w / total) * r;
  }
  result.line = HorizonLine::from_left_right(left, right, aspect);
  return result;
}

double nll_objective(const SubwindowSet& set, const HorizonLine& global) {
  set.validate();
  return score(set, Window::full(set.frame), global).value;
}

CandidateGrid nll_candidate_grid(const SubwindowSet& set, std::size_t max_per_axis) {
  set.validate();
  const Window full = Window::full(set.frame);
  std::vector<double> thetas, rhos;
  for (const auto& d : set.subwindows) {
    const auto& space = d.space();
    for (double t : space.theta.centers) {
      for (double r : space.rho.centers) {
        const HorizonLine g =
            transfer_horizon(HorizonLine::from_slope_offset(t, r), d.window(), full, set.frame);
        thetas.push_back(g.theta());
        rhos.push_back(g.rho());
      }
    }
  }
  return {subsample(std::move(thetas), max_per_axis), subsample(std::move(rhos), max_per_axis)};
}

AggregateResult aggregate_nll(const SubwindowSet& set, const NllOptions& options) {
  set.validate();
  const Window full = Window::full(set.frame);
  const CandidateGrid grid = nll_candidate_grid(set, options.max_axis_candidates);

  struct Best {
    Score s;
    double theta = 0.0, rho = 0.0;
    bool any_unfloored = false;
  };
  auto consider = [&](Best& best, double theta, double rho) {
    const Score s = score(set, full, HorizonLine::from_slope_offset(theta, rho));
    if (!s.floored) best.any_unfloored = true;
    if (better(s, theta, rho, best.s, best.theta, best.rho)) {
      best.s = s;
      best.theta = theta;
      best.rho = rho;
    }
  };

  std::vector<Best> rows(grid.theta.size());
  parallel_for(grid.theta.size(), options.workers, [&](std::size_t i) {
    for (double r : grid.rho) consider(rows[i], grid.theta[i], r);
  });
  Best best;
  for (const Best& b : rows) {
    best.any_unfloored = best.any_unfloored || b.any_unfloored;
    if (better(b.s, b.theta, b.rho, best.s, best.theta, best.rho)) {
      best.s = b.s;
      best.theta = b.theta;
      best.rho = b.rho;
    }
  }
  std::vector<std::pair<double, double>> argmaxes;
  for (const auto& d : set.subwindows) {
    const HorizonLine local = d.decode(Decoder::kArgmaxCenter);
    const HorizonLine g = transfer_horizon(local, d.window(), full, set.frame);
    argmaxes.emplace_back(g.theta(), g.rho());
  }
  std::sort(argmaxes.begin(), argmaxes.end());
  for (const auto& [t, r] : argmaxes) consider(best, t, r);
  if (!best.any_unfloored) {
    throw Error(ErrorCode::kDegenerateDistribution,
                "every candidate horizon has negligible probability in every subwindow");
  }

  double step_theta = spacing(grid.theta, 1e-3);
  double step_rho = spacing(grid.rho, 1e-3);
  int evaluations = 0;
  while (evaluations + 4 <= options.max_refine_evaluations && (step_theta > 1e-12 || step_rho > 1e-12)) {
    const double moves[4][2] = {{step_theta, 0.0}, {-step_theta, 0.0}, {0.0, step_rho}, {0.0, -step_rho}};
    Best trial = best;
    for (const auto& m : moves) {
      const double t = best.theta + m[0];
      const double r = best.rho + m[1];
      ++evaluations;
      if (t <= 0.0 || t >= kPi) continue;
      const Score s = score(set, full, HorizonLine::from_slope_offset(t, r));
      if (s.value < trial.s.value) {
        trial.s = s;
        trial.theta = t;
        trial.rho = r;
      }
    }
    if (trial.s.value < best.s.value) {
      best = trial;
    } else {
      step_theta *= 0.5;
      step_rho *= 0.5;
    }
  }

  AggregateResult result;
  result.line = HorizonLine::from_slope_offset(best.theta, best.rho);
  result.objective = best.s.value;
  return result;
}

}  // namespace horizon

#pragma once

// Reference evaluation of the joint subwindow negative log-likelihood,
// written from the definitions with plain doubles: each window's affine map
// is rebuilt by hand and grids are read by bilinear interpolation.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct NllWindow {
  double x0, y0, side;
  bool mirrored;
  std::vector<double> grid;  // row-major theta x rho
};

inline double clamp_lookup(const std::vector<double>& c, double v, std::size_t* i) {
  if (v <= c.front()) {
    *i = 0;
    return 0.0;
  }
  if (v >= c.back()) {
    *i = c.size() - 2;
    return 1.0;
  }
  std::size_t k = 0;
  while (c[k + 1] <= v) ++k;
  *i = k;
  return (v - c[k]) / (c[k + 1] - c[k]);
}

/// Mean over windows of -log(max(p, 1e-12)) for the full-image line
/// x cos(theta) + y sin(theta) = rho in an image of size width x height.
inline double nll(const std::vector<double>& theta_centers, const std::vector<double>& rho_centers,
                  double width, double height, const std::vector<NllWindow>& windows,
                  double theta, double rho) {
  const double h1 = std::cos(theta), h2 = std::sin(theta), h3 = -rho;
  double total = 0.0;
  for (const auto& w : windows) {
    // Parent-centered point as an affine function of window-centered (x, y):
    //   X = cx + sx * x, Y = cy + s * y.
    const double s = w.side / height;
    const double sx = w.mirrored ? -s : s;
    const double cx = (w.x0 + 0.5 * w.side - 0.5 * width) / height;
    const double cy = (0.5 * height - w.y0 - 0.5 * w.side) / height;
    double a = h1 * sx, b = h2 * s, c = h1 * cx + h2 * cy + h3;
    const double norm = std::hypot(a, b);
    a /= norm;
    b /= norm;
    c /= norm;
    if (b < 0.0) {
      a = -a;
      b = -b;
      c = -c;
    }
    std::size_t i, j;
    const double ti = clamp_lookup(theta_centers, std::atan2(b, a), &i);
    const double tj = clamp_lookup(rho_centers, -c, &j);
    const std::size_t n = rho_centers.size();
    auto at = [&](std::size_t p, std::size_t q) { return w.grid[p * n + q]; };
    const double p = (1 - ti) * ((1 - tj) * at(i, j) + tj * at(i, j + 1)) +
                     ti * ((1 - tj) * at(i + 1, j) + tj * at(i + 1, j + 1));
    total += -std::log(std::max(p, 1e-12));
  }
  return total / static_cast<double>(windows.size());
}

}  // namespace oracle

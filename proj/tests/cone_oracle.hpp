#pragma once

// Brute-force reference for the k = 2 cone projection: dense grid over the loadings followed
// by a compass search, independent of the Newton solver.

#include "vclink/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace testing {

inline double cone_objective(const Eigen::Vector3d& Z, const Eigen::Matrix3d& W, double a1, double a2) {
  const Eigen::Vector3d r = Z - Eigen::Vector3d(a1 * a1, a2 * a2, a1 * a2);
  return r.dot(W * r);
}

inline double grid_projection_objective(const Eigen::Vector3d& Z, const Eigen::Matrix3d& W, double range = 4.0,
                                        double step = 0.005) {
  double best = Z.dot(W * Z), b1 = 0.0, b2 = 0.0;
  const int n = static_cast<int>(std::lround(2.0 * range / step));
  for (int i = 0; i <= n; ++i) {
    const double a1 = -range + i * step;
    for (int j = 0; j <= n; ++j) {
      const double a2 = -range + j * step;
      const double f = cone_objective(Z, W, a1, a2);
      if (f < best) best = f, b1 = a1, b2 = a2;
    }
  }
  for (double h = step; h > 1e-10; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      const std::array<std::array<double, 2>, 4> dirs{{{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}};
      for (const auto& d : dirs) {
        const double f = cone_objective(Z, W, b1 + d[0], b2 + d[1]);
        if (f < best) best = f, b1 += d[0], b2 += d[1], moved = true;
      }
    }
  }
  return best;
}

}  // namespace testing

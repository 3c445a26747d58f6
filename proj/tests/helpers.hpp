#pragma once

#include "vclink/model.hpp"
#include "vclink/rng.hpp"
#include "vclink/sim.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace testing {

// Symmetric positive definite m x m matrix B'B + shift I with Gaussian B.
inline Eigen::MatrixXd random_spd(int m, vclink::RngStream& rng, double shift = 0.5) {
  Eigen::MatrixXd B(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) B(i, j) = rng.normal();
  return B.transpose() * B / m + shift * Eigen::MatrixXd::Identity(m, m);
}

inline Eigen::VectorXd random_normal(int m, vclink::RngStream& rng, double scale = 1.0) {
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v(i) = scale * rng.normal();
  return v;
}

inline vclink::Dataset null_data(int k, int families, std::uint64_t seed) {
  const auto c = vclink::StudyConfig::standard(k);
  vclink::RngStream rng(seed);
  return vclink::simulate_null_dataset(k, c.G, c.E, families, c.piLaw, rng);
}

inline double rel_err(double x, double ref) { return std::abs(x - ref) / std::max(1e-300, std::abs(ref)); }

}  // namespace testing

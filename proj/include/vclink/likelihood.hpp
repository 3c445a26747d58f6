#pragma once

// Fast sib-pair likelihood on sufficient statistics.
//
// With s = (y1 + y2)/sqrt2 and d = (y1 - y2)/sqrt2 a family's traits split into two
// independent k-variate normals:
//   s ~ N(sqrt2 mu, (1+pi)A + (1+2phi)G + E),   d ~ N(0, (1-pi)A + (1-2phi)G + E).
// Families sharing (pi, phi) therefore reduce to one scatter matrix per half, and an
// evaluation costs O(groups * k^3) regardless of the number of families.

#include "vclink/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace vclink {

class PairLikelihood {
 public:
  explicit PairLikelihood(const Dataset& data);

  // d loglik = tr(dA dA_) + tr(dG dG_) + tr(dE dE_), all symmetric k x k.
  struct Gradient {
    Eigen::MatrixXd dA, dG, dE;
  };

  // Log-likelihood maximised over mu (generalised least squares mean) for the given covariances.
  // Returns nullopt when a group covariance is not positive definite.
  std::optional<double> profile(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
                                const Eigen::MatrixXd& E, Eigen::VectorXd* muHat = nullptr,
                                Gradient* grad = nullptr) const;

  int k() const noexcept { return k_; }
  double families() const noexcept { return n_; }

  // Pooled per-sib trait covariance and symmetrised cross-sib covariance (moment estimates).
  const Eigen::MatrixXd& total_covariance() const noexcept { return total_; }
  const Eigen::MatrixXd& cross_covariance() const noexcept { return cross_; }
  const Eigen::VectorXd& center() const noexcept { return center_; }

 private:
  struct Group {
    double pi, phi, n;
    Eigen::VectorXd sumS;
    Eigen::MatrixXd scatterS, scatterD;
  };

  int k_;
  double n_;
  Eigen::VectorXd center_;
  Eigen::MatrixXd total_, cross_;
  std::vector<Group> groups_;
};

}  // namespace vclink

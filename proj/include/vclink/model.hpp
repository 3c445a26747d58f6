#pragma once

// Single-factor variance-components model for sib pairs.
//
// Family i contributes y_i = (sib1 traits 1..k, sib2 traits 1..k) ~ N(mu~, Sigma_i) with
//
//   Sigma_i = [ A + G + E              pi_i A + 2 phi_i G ]
//             [ pi_i A + 2 phi_i G     A + G + E          ],   A = a a^T.

#include "vclink/linalg.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace vclink {

inline constexpr double kSibKinship = 0.25;

struct FamilyObservation {
  double pi = 0.0;
  double phi = kSibKinship;
  Eigen::VectorXd y;  // length 2k
};

class Dataset {
 public:
  // Validates 0 <= pi <= 1, 0 <= phi <= 0.5 and |y| == 2k for every family.
  Dataset(int k, std::vector<FamilyObservation> families);

  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return families_.size(); }
  bool empty() const noexcept { return families_.empty(); }
  const std::vector<FamilyObservation>& families() const noexcept { return families_; }
  const FamilyObservation& operator[](std::size_t i) const { return families_[i]; }

 private:
  int k_;
  std::vector<FamilyObservation> families_;
};

struct ComponentParams {
  Eigen::VectorXd a;      // major-gene loadings, A = a a^T
  Eigen::MatrixXd gChol;  // lower triangular, G = gChol gChol^T
  Eigen::MatrixXd eChol;  // lower triangular, E = eChol eChol^T
  Eigen::VectorXd mu;

  // Builds factors from covariance matrices; throws NumericDomainError unless G, E are PSD.
  static ComponentParams from_covariances(Eigen::VectorXd a, const Eigen::MatrixXd& G,
                                          const Eigen::MatrixXd& E, Eigen::VectorXd mu);

  int k() const noexcept { return static_cast<int>(a.size()); }
  Eigen::MatrixXd A() const { return a * a.transpose(); }
  Eigen::MatrixXd G() const { return gChol * gChol.transpose(); }
  Eigen::MatrixXd E() const { return eChol * eChol.transpose(); }

  // Flips a so its first nonzero entry is positive; A is unchanged.
  void normalize_sign();
};

// Number of free entries of a symmetric k x k matrix.
constexpr int theta_dim(int k) noexcept { return k * (k + 1) / 2; }

// Inverse of theta_dim; -1 when m is not triangular.
int trait_count_for_theta_dim(int m) noexcept;

// Theta ordering: diagonal (1,1)..(k,k), then off-diagonals (1,2),(1,3),...,(k-1,k) row-major.
std::pair<int, int> theta_entry(int k, int index);
int theta_index(int k, int p, int q);

Eigen::VectorXd theta_map(const Eigen::VectorXd& a);

// Symmetric k x k matrix whose theta coordinates are `theta`.
Eigen::MatrixXd theta_to_matrix(int k, const Eigen::VectorXd& theta);

SymMatrix assemble_sigma(const Eigen::VectorXd& a, const SymMatrix& G, const SymMatrix& E,
                         double pi, double phi);

// Exact Gaussian log-likelihood summed over families. Throws NumericDomainError carrying the
// family index when some Sigma_i is not positive definite.
double loglik(const Dataset& data, const ComponentParams& params);

}  // namespace vclink

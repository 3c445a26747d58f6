#pragma once

// The single-factor cone {theta_map(a) : a in R^k} in theta-space, projection of a Gaussian
// observation onto it in the metric W, and the one-observation likelihood-ratio test.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace vclink {

struct ConeSettings {
  int nStarts = 4;         // random Gaussian starts on top of the structured ones
  double epsObj = 1e-12;   // objective gap counting a loading as positive, times max(1, Z'WZ)
  double tolPolar = 1e-8;  // polar membership tolerance, relative to ||Z||_W
  int maxIter = 200;
  std::uint64_t seed = 0;
};

class ConeProblem {
 public:
  // Throws StructuralError on shape errors and NumericDomainError unless W is PD.
  ConeProblem(Eigen::VectorXd Z, Eigen::MatrixXd W);

  int k() const noexcept { return k_; }
  int m() const noexcept { return static_cast<int>(Z_.size()); }
  const Eigen::VectorXd& Z() const noexcept { return Z_; }
  const Eigen::MatrixXd& W() const noexcept { return W_; }
  // Z'WZ, the squared distance to the origin.
  double origin_distance() const noexcept { return zwz_; }

 private:
  int k_;
  Eigen::VectorXd Z_;
  Eigen::MatrixXd W_;
  double zwz_;
};

struct ProjectionResult {
  Eigen::VectorXd thetaHat;
  Eigen::VectorXd aHat;
  double objective = 0.0;  // (Z - thetaHat)' W (Z - thetaHat)
  double lambda = 0.0;     // Z'WZ - objective, >= 0
  int nu = 0;
  bool converged = true;
};

// Multi-start Newton search over the loadings; `pinned[i]` fixes a_i = 0.
// nu is counted by re-projecting with each loading pinned in turn.
ProjectionResult project(const ConeProblem& problem, const ConeSettings& settings = {});

// Projection without the nu refits, optionally with pinned loadings and extra starts.
ProjectionResult project_restricted(const ConeProblem& problem, const ConeSettings& settings,
                                    const std::vector<bool>& pinned = {},
                                    std::span<const Eigen::VectorXd> extraStarts = {});

struct GaussianLrt {
  double lambda = 0.0;
  int nu = 0;
};

GaussianLrt gaussian_lrt(const ConeProblem& problem, const ConeSettings& settings = {});

// True iff Z'W theta <= 0 for every theta on the cone, i.e. the top eigenvalue of the symmetric
// matrix with theta-coordinates WZ is <= tolPolar * ||Z||_W.
bool polar_membership(const ConeProblem& problem, const ConeSettings& settings = {});

// Largest value of Z'W theta_map(a) over unit loadings a.
double polar_margin(const ConeProblem& problem);

// Angle between the rays (1,1,1) and (1,1,-1) on the two sheets of the k = 2 cone.
double sheet_angle_cosine();
double sheet_angle_degrees();

}  // namespace vclink

#pragma once

// Monte Carlo harnesses: null data simulation, the replicate LRT study, the nuisance-parameter
// sweep, and the permutation / parametric-bootstrap baselines.

#include "vclink/fisher.hpp"
#include "vclink/mle.hpp"
#include "vclink/model.hpp"
#include "vclink/rng.hpp"
#include "vclink/statutil.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace vclink {

struct StudyConfig {
  int k = 2;
  int nFamilies = 500;
  int nReplicates = 1000;
  Eigen::MatrixXd G, E;
  PiLaw piLaw = sib_pair_pi_law();
  OptimizerSettings optimizer;
  std::uint64_t seed = 1;

  // g_ii = 0.4, e_ii = 0.6, g_ij = 0.04, e_ij = 0.06.
  static StudyConfig standard(int k);
  void validate() const;  // throws StructuralError / NumericDomainError before any compute
};

struct ReplicateRecord {
  int replicate = 0;
  double lambda = 0.0;
  int nu = 0;
  bool failed = false;
  std::string error;
  Eigen::VectorXd aHat;  // full-fit loadings
  double loglikNull = 0.0, loglikFull = 0.0;
};

struct StudyResult {
  int k = 0;
  std::vector<ReplicateRecord> replicates;
  int nFailed = 0;
  std::vector<double> mixing;  // over nu = 0..k, among successful replicates
  double critical01 = 0.0, critical05 = 0.0;
  KsResult ksTopComponent;  // nu = k lambdas against chi-square(k)
  bool ksAvailable = false;
  double seconds = 0.0;

  std::vector<double> component(int nu) const;  // sorted
};

// Data under the alternative (a may be nonzero): pi from the law, y ~ N(mu~, Sigma(pi)).
Dataset simulate_dataset(const ComponentParams& truth, int nFamilies, const PiLaw& piLaw,
                         RngStream& rng, double phi = kSibKinship);

Dataset simulate_null_dataset(int k, const Eigen::MatrixXd& G, const Eigen::MatrixXd& E,
                              int nFamilies, const PiLaw& piLaw, RngStream& rng);

// Replicate r uses substream (seed, r) for data and derive_seed(seed, r) for the optimizer.
// Fails with ConvergenceError when more than 1% of replicates fail.
StudyResult run_null_study(const StudyConfig& config);
StudyResult run_null_study_serial(const StudyConfig& config);

// Aggregate statistics over finished replicate records.
void summarize(StudyResult& result);

struct NuisanceSet {
  Eigen::MatrixXd G, E;
};

// Rescales both matrices of an inverse-Wishart pair so diag(G) = effect and diag(E) = 1 - effect.
NuisanceSet rescale_nuisance(const Eigen::MatrixXd& G, const Eigen::MatrixXd& E, double effect);

// nDraws pairs from W^-1(I, k+1), rescaled; K-means on their off-diagonal correlations; returns
// the draw nearest each center, in center order.
std::vector<NuisanceSet> nuisance_sweep(int k, double effect, int nDraws, int K, RngStream& rng);

// Lambda per permutation of pi across families; replicate 0 is the identity permutation.
std::vector<double> permutation_baseline(const Dataset& data, int nPerm, std::uint64_t seed,
                                         const OptimizerSettings& settings);

// Lambda per parametric-bootstrap replicate simulated from the null fit, keeping each family's pi.
std::vector<double> bootstrap_baseline(const Dataset& data, int nBoot, std::uint64_t seed,
                                       const OptimizerSettings& settings);

// The replicate datasets bootstrap_baseline analyses, exposed for inspection.
Dataset bootstrap_replicate(const Dataset& data, const ComponentParams& nullFit, std::uint64_t seed,
                            int replicate);

}  // namespace vclink

#pragma once

// Expected Fisher information of the 3m covariance entries (A; G; E) at the null, and the
// inverse-information block V for the major-gene entries.

#include "vclink/linalg.hpp"
#include "vclink/mle.hpp"
#include "vclink/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace vclink {

struct PiAtom {
  double pi = 0.0;
  double weight = 0.0;
};
using PiLaw = std::vector<PiAtom>;

// {0: 1/4, 1/2: 1/2, 1: 1/4}, the sib-pair law under complete linkage information.
PiLaw sib_pair_pi_law();
// Throws StructuralError unless weights are nonnegative, sum to 1, and pi in [0, 1].
void validate_pi_law(const PiLaw& law);

// Parameter order: theta order for A entries, then G entries, then E entries.
struct InfoMatrix {
  int k = 0;
  Eigen::MatrixXd entries;  // 3m x 3m
};

struct VMatrix {
  int k = 0;
  Eigen::MatrixXd entries;  // m x m, positive definite
};

// Name of a full-set parameter, e.g. "a11", "g12", "e22".
std::string parameter_name(int k, int paramIndex);

// Derivative of Sigma with respect to one of the 3m entries, all entries treated as free.
SymMatrix dsigma(int k, int paramIndex, double pi, double phi);

// Per-family information averaged over the pi law: sum_pi w(pi) * 1/2 Tr(S^-1 dS_i S^-1 dS_j)
// with Sigma assembled at A = 0.
InfoMatrix fisher_info(const SymMatrix& G, const SymMatrix& E, const PiLaw& piLaw, double phi);

// Inverts the information (Cholesky) and returns the leading m x m block. Throws
// NumericDomainError naming the weakest direction when the smallest eigenvalue is below
// 1e-10 times the largest.
VMatrix extract_v(const InfoMatrix& info);

// Per-family information at the null estimates, averaged over the dataset's own (pi, phi) values.
InfoMatrix empirical_fisher_info(const Dataset& data, const ComponentParams& nullFit);

// Null fit -> Sigma-hat -> information over the empirical (pi, phi) law -> V.
VMatrix estimate_v_from_data(const Dataset& data, const OptimizerSettings& settings);

// Known-parameter route: V at the given nuisance matrices.
VMatrix known_parameter_v(const Eigen::MatrixXd& G, const Eigen::MatrixXd& E,
                          const PiLaw& piLaw = sib_pair_pi_law(), double phi = kSibKinship);

}  // namespace vclink

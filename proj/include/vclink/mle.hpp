#pragma once

// Maximum-likelihood fits of the full, null and partially restricted models, the
// data-level likelihood-ratio statistic, and refit-based counting of positive variances.

#include "vclink/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vclink {

struct OptimizerSettings {
  int nStarts = 5;
  double tol = 1e-9;  // relative log-likelihood change
  int maxIter = 2000;
  double epsLL = 1e-9;  // log-likelihood equality tolerance for counting nu
  std::uint64_t seed = 1;

  void validate() const;  // throws StructuralError
};

enum class RestrictionKind { Full, Null, Partial };

struct Restriction {
  RestrictionKind kind = RestrictionKind::Full;
  int index = -1;  // 0-based trait whose loading is pinned to 0 (Partial only)

  static Restriction full() { return {RestrictionKind::Full, -1}; }
  static Restriction null() { return {RestrictionKind::Null, -1}; }
  static Restriction partial(int i) { return {RestrictionKind::Partial, i}; }

  bool pinned(int trait) const {
    return kind == RestrictionKind::Null || (kind == RestrictionKind::Partial && trait == index);
  }
  std::string label() const;
};

struct FitResult {
  ComponentParams params;
  double loglik = 0.0;  // model::loglik(dataset, params), recomputed
  bool converged = false;
  int nStarts = 0;
  int bestStartIndex = -1;
  int iterations = 0;
};

// Start information a caller already has (lrt passes the null fit and partial optima).
struct FitSeeds {
  std::optional<ComponentParams> nullFit;
  std::vector<ComponentParams> extraStarts;
};

FitResult fit(const Dataset& data, Restriction restriction, const OptimizerSettings& settings,
              const FitSeeds& seeds = {});

int classify_nu(double loglikFull, std::span<const double> loglikPartial, double epsLL);
int classify_nu(const FitResult& full, std::span<const FitResult> partial, double epsLL);

struct LrtResult {
  double lambda = 0.0;
  int nu = 0;
  FitResult nullFit, fullFit;
  std::vector<FitResult> partialFits;  // one per trait
};

// lambda = 2 (loglik_full - loglik_null). Values in (-1e-6, 0) are clamped to 0; more negative
// values raise ConvergenceError.
LrtResult lrt(const Dataset& data, const OptimizerSettings& settings);

}  // namespace vclink

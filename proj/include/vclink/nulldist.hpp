#pragma once

// Asymptotic null distribution of the multivariate linkage LRT by simulation of the
// one-observation Gaussian cone problem, plus the binomial chi-square mixture it replaces.

#include "vclink/cone.hpp"
#include "vclink/fisher.hpp"

#include <cstdint>
#include <vector>

namespace vclink {

struct NullDraw {
  double lambda = 0.0;
  int nu = 0;
};

struct NullSample {
  int k = 0;
  VMatrix V;
  std::vector<NullDraw> draws;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return draws.size(); }
  std::vector<double> lambdas() const;
  // Lambdas of draws with the given nu, sorted ascending.
  std::vector<double> component(int nu) const;
};

// Z_j = chol(V) * standard normals from stream (seed, j); (lambda_j, nu_j) = gaussian_lrt(Z_j, V^-1).
// OpenMP across draws; identical output to generate_serial for any thread count.
NullSample generate(const VMatrix& V, std::size_t N, std::uint64_t seed, const ConeSettings& cone = {});
NullSample generate_serial(const VMatrix& V, std::size_t N, std::uint64_t seed,
                           const ConeSettings& cone = {});

// The j-th draw's Gaussian observation, exposed so callers can reproduce single draws.
Eigen::VectorXd null_observation(const Eigen::MatrixXd& cholV, std::uint64_t seed, std::size_t j);

struct PValue {
  double value = 1.0;
  bool belowResolution = false;  // no draw reached the observed value: p < 1/N
};

// count(lambda_j >= observed) / N, or (count + 1) / (N + 1) with addOne.
PValue pvalue(const NullSample& sample, double observed, bool addOne = false);

struct CriticalValue {
  double value = 0.0;
  bool lowResolution = false;  // N * alpha < 10
};

// Smallest sample lambda whose p value is <= alpha (the largest lambda when ties prevent it).
CriticalValue critical_value(const NullSample& sample, double alpha);

// Empirical frequencies of nu = 0..k.
std::vector<double> mixing_probs(const NullSample& sample);

// Binomial(k, 1/2) weights on chi-square components 0..k.
std::vector<double> binom_mixture_weights(int k);
double binom_mixture_cdf(int k, double x);
double binom_mixture_tail(int k, double x);
double binom_mixture_critical(int k, double alpha);

}  // namespace vclink

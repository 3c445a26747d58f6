#pragma once

#include "vclink/rng.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace vclink {

// Chi-square CDF. df == 0 is the point mass at zero.
double chisq_cdf(double df, double x);
// Upper tail 1 - CDF, computed without cancellation.
double chisq_sf(double df, double x);
// Inverse CDF for df > 0 and p in [0, 1).
double chisq_quantile(double df, double p);

// Asymptotic Kolmogorov tail P(K > x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_sf(double x);

struct KsResult {
  double D = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

using Cdf = std::function<double(double)>;

// One-sample KS test of a sorted sample against a reference CDF. `leftCdf`, when given,
// returns the left limit F(x-) so references with atoms (a point mass at 0) are handled.
// Throws StructuralError when the sample is unsorted or has fewer than 5 points.
KsResult ks_test(std::span<const double> sorted, const Cdf& cdf, const Cdf& leftCdf = {});

// Two-sample KS test on sorted samples, p from the asymptotic series with sqrt(nm/(n+m)).
KsResult ks_two_sample(std::span<const double> sortedA, std::span<const double> sortedB);

// n draws as rows of an n x m matrix. Throws NumericDomainError unless cov is PD.
Eigen::MatrixXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                           RngStream& rng);

// One draw from W^{-1}(scale, dof): Wishart draw of scale^{-1} by Bartlett decomposition, inverted.
Eigen::MatrixXd inv_wishart_sample(const Eigen::MatrixXd& scale, double dof, RngStream& rng);

// Correlation matrix of a covariance matrix.
Eigen::MatrixXd correlation(const Eigen::MatrixXd& cov);

struct KMeansResult {
  Eigen::MatrixXd centers;       // K x d
  std::vector<int> assignments;  // cluster of each point
  double wcss = 0.0;             // within-cluster sum of squares
};

// Lloyd's algorithm from K distinct seeded points, best of `restarts` runs.
// Throws StructuralError when there are fewer distinct points than K.
KMeansResult kmeans(const Eigen::MatrixXd& points, int K, RngStream& rng, int restarts = 10);

}  // namespace vclink

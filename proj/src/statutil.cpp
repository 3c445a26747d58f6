#include "vclink/statutil.hpp"

#include "vclink/errors.hpp"
#include "vclink/linalg.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace vclink {

double chisq_cdf(double df, double x) {
  if (df == 0.0) return x >= 0.0 ? 1.0 : 0.0;
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chisq_sf(double df, double x) {
  if (df == 0.0) return x >= 0.0 ? 0.0 : 1.0;
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chisq_quantile(double df, double p) {
  if (!(df > 0.0)) throw StructuralError("chisq_quantile: df must be positive");
  if (!(p >= 0.0 && p < 1.0)) throw StructuralError("chisq_quantile: p must be in [0,1)");
  if (p == 0.0) return 0.0;
  return 2.0 * boost::math::gamma_p_inv(0.5 * df, p);
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Jacobi-theta form converges fast for small x.
    const double c = std::sqrt(2.0 * std::numbers::pi) / x;
    const double f = -std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double term = std::exp(f * (2 * j - 1) * (2 * j - 1));
      cdf += term;
      if (term < 1e-17) break;
    }
    return std::clamp(1.0 - c * cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sorted, const Cdf& cdf, const Cdf& leftCdf) {
  const std::size_t n = sorted.size();
  if (n < 5) throw StructuralError("ks_test: need at least 5 points");
  if (!std::is_sorted(sorted.begin(), sorted.end()))
    throw StructuralError("ks_test: sample is not sorted");
  const Cdf& left = leftCdf ? leftCdf : cdf;
  const double nd = static_cast<double>(n);
  double D = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double v = sorted[i];
    std::size_t j = i;
    while (j < n && sorted[j] == v) ++j;
    // Empirical CDF jumps from i/n to j/n at v.
    D = std::max(D, std::abs(static_cast<double>(i) / nd - left(v)));
    D = std::max(D, std::abs(static_cast<double>(j) / nd - cdf(v)));
    i = j;
  }
  return {D, kolmogorov_sf(std::sqrt(nd) * D), n};
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 5 || b.size() < 5) throw StructuralError("ks_two_sample: need at least 5 points");
  if (!std::is_sorted(a.begin(), a.end()) || !std::is_sorted(b.begin(), b.end()))
    throw StructuralError("ks_two_sample: samples are not sorted");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {D, kolmogorov_sf(ne * D), a.size() + b.size()};
}

Eigen::MatrixXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                           RngStream& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw StructuralError("mvn_sample: dimension mismatch");
  const auto L = try_cholesky(cov);
  if (!L) throw NumericDomainError("mvn_sample: covariance is not positive definite");
  const Eigen::Index m = mean.size();
  Eigen::MatrixXd out(n, m);
  Eigen::VectorXd z(m);
  for (int r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) z(c) = rng.normal();
    out.row(r) = (mean + (*L) * z).transpose();
  }
  return out;
}

Eigen::MatrixXd inv_wishart_sample(const Eigen::MatrixXd& scale, double dof, RngStream& rng) {
  const Eigen::Index k = scale.rows();
  if (scale.cols() != k) throw StructuralError("inv_wishart_sample: scale is not square");
  if (!(dof > static_cast<double>(k) - 1.0))
    throw StructuralError("inv_wishart_sample: dof must exceed k - 1");
  const auto Ls = try_cholesky(scale);
  if (!Ls) throw NumericDomainError("inv_wishart_sample: scale is not positive definite");
  // Wishart(scale^{-1}, dof) = M B B^T M^T with M the Cholesky factor of scale^{-1}.
  const Eigen::MatrixXd scaleInv = Ls->transpose().triangularView<Eigen::Upper>().solve(
      Ls->triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(k, k)));
  const Eigen::MatrixXd M = *try_cholesky(symmetrized(scaleInv));
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    B(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) B(i, j) = rng.normal();
  }
  const Eigen::MatrixXd F = M * B;  // Wishart draw = F F^T
  // (F F^T)^{-1} = F^{-T} F^{-1}
  const Eigen::MatrixXd Finv =
      F.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(k, k));
  return symmetrized(Finv.transpose() * Finv);
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd s = cov.diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * cov * s.asDiagonal();
}

namespace {

struct LloydRun {
  Eigen::MatrixXd centers;
  std::vector<int> assign;
  double wcss;
};

LloydRun lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd centers) {
  const Eigen::Index n = X.rows(), K = centers.rows();
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bestD = (X.row(i) - centers.row(0)).squaredNorm();
      for (Eigen::Index c = 1; c < K; ++c) {
        const double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < bestD) {
          bestD = d;
          best = static_cast<int>(c);
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) changed = true;
      assign[static_cast<std::size_t>(i)] = best;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, X.cols());
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index c = 0; c < K; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      // Empty cluster: move it to the point farthest from its current center.
      Eigen::Index far = 0;
      double farD = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (X.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > farD) {
          farD = d;
          far = i;
        }
      }
      centers.row(c) = X.row(far);
      changed = true;
    }
    if (!changed) break;
  }
  // Final assignment consistent with the returned centers.
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double bestD = (X.row(i) - centers.row(0)).squaredNorm();
    for (Eigen::Index c = 1; c < K; ++c) {
      const double d = (X.row(i) - centers.row(c)).squaredNorm();
      if (d < bestD) {
        bestD = d;
        best = static_cast<int>(c);
      }
    }
    assign[static_cast<std::size_t>(i)] = best;
    total += bestD;
  }
  return {std::move(centers), std::move(assign), total};
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int K, RngStream& rng, int restarts) {
  const Eigen::Index n = points.rows();
  if (K < 1) throw StructuralError("kmeans: K must be >= 1");
  if (n < K) throw StructuralError("kmeans: fewer points than clusters");

  std::vector<Eigen::Index> distinct;
  for (Eigen::Index i = 0; i < n && static_cast<int>(distinct.size()) < K; ++i) {
    bool seen = false;
    for (auto d : distinct) seen = seen || points.row(d) == points.row(i);
    if (!seen) distinct.push_back(i);
  }
  if (static_cast<int>(distinct.size()) < K)
    throw StructuralError("kmeans: fewer distinct points than clusters");

  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Eigen::MatrixXd centers(K, points.cols());
    std::vector<Eigen::Index> chosen;
    while (static_cast<int>(chosen.size()) < K) {
      const auto i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
      bool dup = false;
      for (auto c : chosen) dup = dup || points.row(c) == points.row(i);
      if (!dup) chosen.push_back(i);
    }
    for (int c = 0; c < K; ++c) centers.row(c) = points.row(chosen[static_cast<std::size_t>(c)]);
    auto run = lloyd(points, std::move(centers));
    if (run.wcss < best.wcss) {
      best.centers = std::move(run.centers);
      best.assignments = std::move(run.assign);
      best.wcss = run.wcss;
    }
  }
  return best;
}

}  // namespace vclink

#include "vclink/nulldist.hpp"

#include "vclink/errors.hpp"
#include "vclink/parallel.hpp"
#include "vclink/rng.hpp"
#include "vclink/statutil.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vclink {

std::vector<double> NullSample::lambdas() const {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d.lambda);
  return out;
}

std::vector<double> NullSample::component(int nu) const {
  std::vector<double> out;
  for (const auto& d : draws)
    if (d.nu == nu) out.push_back(d.lambda);
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd null_observation(const Eigen::MatrixXd& cholV, std::uint64_t seed, std::size_t j) {
  RngStream rng(seed, j);
  Eigen::VectorXd e(cholV.rows());
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = rng.normal();
  return cholV * e;
}

namespace {

NullSample generate_impl(const VMatrix& V, std::size_t N, std::uint64_t seed, const ConeSettings& cone,
                         bool parallel) {
  if (N < 1) throw StructuralError("generate: N must be >= 1");
  const auto L = try_cholesky(V.entries);
  if (!L) throw NumericDomainError("generate: V is not positive definite");
  const Eigen::Index m = V.entries.rows();
  const Eigen::MatrixXd W = symmetrized(
      L->transpose().triangularView<Eigen::Upper>().solve(
          L->triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(m, m))));

  NullSample out;
  out.k = V.k;
  out.V = V;
  out.seed = seed;
  out.draws.resize(N);
  parallel_for(
      N,
      [&](std::size_t j) {
        ConeSettings s = cone;
        s.seed = derive_seed(seed ^ 0xC0DEC0DEULL, j);
        try {
          const auto r = gaussian_lrt(ConeProblem(null_observation(*L, seed, j), W), s);
          out.draws[j] = {r.lambda, r.nu};
        } catch (const std::exception& e) {
          throw ConvergenceError("generate: draw " + std::to_string(j) + ": " + e.what());
        }
      },
      parallel);
  return out;
}

}  // namespace

NullSample generate(const VMatrix& V, std::size_t N, std::uint64_t seed, const ConeSettings& cone) {
  return generate_impl(V, N, seed, cone, true);
}

NullSample generate_serial(const VMatrix& V, std::size_t N, std::uint64_t seed,
                           const ConeSettings& cone) {
  return generate_impl(V, N, seed, cone, false);
}

PValue pvalue(const NullSample& sample, double observed, bool addOne) {
  if (sample.draws.empty()) throw StructuralError("pvalue: empty sample");
  if (!(observed >= 0.0)) throw StructuralError("pvalue: observed statistic must be >= 0");
  std::size_t count = 0;
  for (const auto& d : sample.draws) count += (d.lambda >= observed);
  const double N = static_cast<double>(sample.size());
  PValue p;
  p.value = addOne ? (static_cast<double>(count) + 1.0) / (N + 1.0) : static_cast<double>(count) / N;
  p.belowResolution = count == 0;
  return p;
}

CriticalValue critical_value(const NullSample& sample, double alpha) {
  if (sample.draws.empty()) throw StructuralError("critical_value: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw StructuralError("critical_value: alpha must be in (0,1)");
  std::vector<double> x = sample.lambdas();
  std::sort(x.begin(), x.end());
  const std::size_t N = x.size();
  const double allowed = alpha * static_cast<double>(N);
  CriticalValue cv;
  cv.lowResolution = allowed < 10.0;
  cv.value = x.back();
  // Walk down from the top; count(>= x[i]) is N - (first index of the value x[i]).
  for (std::size_t i = N; i-- > 0;) {
    std::size_t first = i;
    while (first > 0 && x[first - 1] == x[i]) --first;
    if (static_cast<double>(N - first) <= allowed) cv.value = x[i];
    else break;
    if (first == 0) break;
    i = first;
  }
  return cv;
}

std::vector<double> mixing_probs(const NullSample& sample) {
  if (sample.draws.empty()) throw StructuralError("mixing_probs: empty sample");
  std::vector<std::size_t> counts(static_cast<std::size_t>(sample.k + 1), 0);
  for (const auto& d : sample.draws) {
    if (d.nu < 0 || d.nu > sample.k) throw StructuralError("mixing_probs: nu out of range");
    ++counts[static_cast<std::size_t>(d.nu)];
  }
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(sample.size());
  return p;
}

std::vector<double> binom_mixture_weights(int k) {
  if (k < 1) throw StructuralError("binomial mixture: k must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(k + 1));
  double c = 1.0;
  const double scale = std::ldexp(1.0, -k);
  for (int d = 0; d <= k; ++d) {
    w[static_cast<std::size_t>(d)] = c * scale;
    c = c * (k - d) / (d + 1);
  }
  return w;
}

double binom_mixture_cdf(int k, double x) {
  const auto w = binom_mixture_weights(k);
  double cdf = 0.0;
  for (int d = 0; d <= k; ++d) cdf += w[static_cast<std::size_t>(d)] * chisq_cdf(d, x);
  return cdf;
}

double binom_mixture_tail(int k, double x) {
  const auto w = binom_mixture_weights(k);
  double tail = 0.0;
  for (int d = 0; d <= k; ++d) tail += w[static_cast<std::size_t>(d)] * chisq_sf(d, x);
  return tail;
}

double binom_mixture_critical(int k, double alpha) {
  const double maxTail = 1.0 - binom_mixture_weights(k)[0];
  if (!(alpha > 0.0 && alpha < maxTail))
    throw StructuralError("binomial mixture critical value: alpha out of range");
  double lo = 0.0, hi = 1.0;
  while (binom_mixture_tail(k, hi) > alpha) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (binom_mixture_tail(k, mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace vclink

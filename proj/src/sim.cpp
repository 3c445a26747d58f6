#include "vclink/sim.hpp"

#include "vclink/errors.hpp"
#include "vclink/nulldist.hpp"
#include "vclink/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

namespace vclink {

StudyConfig StudyConfig::standard(int k) {
  StudyConfig c;
  c.k = k;
  c.G = Eigen::MatrixXd::Constant(k, k, 0.04);
  c.E = Eigen::MatrixXd::Constant(k, k, 0.06);
  c.G.diagonal().setConstant(0.4);
  c.E.diagonal().setConstant(0.6);
  return c;
}

void StudyConfig::validate() const {
  if (k < 1) throw StructuralError("study: k must be >= 1");
  if (nFamilies < 1) throw StructuralError("study: nFamilies must be >= 1");
  if (nReplicates < 1) throw StructuralError("study: nReplicates must be >= 1");
  if (G.rows() != k || G.cols() != k || E.rows() != k || E.cols() != k)
    throw StructuralError("study: G and E must be k x k");
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 || (E - E.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw StructuralError("study: G and E must be symmetric");
  const double scale = std::max(1.0, std::max(G.cwiseAbs().maxCoeff(), E.cwiseAbs().maxCoeff()));
  if (min_eigenvalue(G) < -1e-10 * scale) throw NumericDomainError("study: G is not positive semidefinite");
  if (min_eigenvalue(E) < -1e-10 * scale) throw NumericDomainError("study: E is not positive semidefinite");
  if (!try_cholesky(G + E)) throw NumericDomainError("study: G + E is not positive definite");
  validate_pi_law(piLaw);
  optimizer.validate();
}

std::vector<double> StudyResult::component(int nu) const {
  std::vector<double> out;
  for (const auto& r : replicates)
    if (!r.failed && r.nu == nu) out.push_back(r.lambda);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double draw_pi(const PiLaw& law, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& atom : law) {
    acc += atom.weight;
    if (u < acc) return atom.pi;
  }
  return law.back().pi;
}

}  // namespace

Dataset simulate_dataset(const ComponentParams& truth, int nFamilies, const PiLaw& piLaw,
                         RngStream& rng, double phi) {
  validate_pi_law(piLaw);
  const int k = truth.k();
  const auto G = SymMatrix::from_dense(truth.G());
  const auto E = SymMatrix::from_dense(truth.E());
  Eigen::VectorXd mu2(2 * k);
  mu2 << truth.mu, truth.mu;
  std::map<double, Eigen::MatrixXd> factors;
  std::vector<FamilyObservation> fams;
  fams.reserve(static_cast<std::size_t>(nFamilies));
  Eigen::VectorXd z(2 * k);
  for (int i = 0; i < nFamilies; ++i) {
    const double pi = draw_pi(piLaw, rng);
    auto it = factors.find(pi);
    if (it == factors.end()) {
      const auto L = try_cholesky(assemble_sigma(truth.a, G, E, pi, phi).dense());
      if (!L) throw NumericDomainError("simulate: covariance is not positive definite");
      it = factors.emplace(pi, *L).first;
    }
    for (int d = 0; d < 2 * k; ++d) z(d) = rng.normal();
    fams.push_back({pi, phi, mu2 + it->second * z});
  }
  return Dataset(k, std::move(fams));
}

Dataset simulate_null_dataset(int k, const Eigen::MatrixXd& G, const Eigen::MatrixXd& E,
                              int nFamilies, const PiLaw& piLaw, RngStream& rng) {
  const auto truth = ComponentParams::from_covariances(Eigen::VectorXd::Zero(k), G, E,
                                                       Eigen::VectorXd::Zero(k));
  return simulate_dataset(truth, nFamilies, piLaw, rng);
}

void summarize(StudyResult& result) {
  const int k = result.k;
  result.nFailed = 0;
  NullSample sample;
  sample.k = k;
  for (const auto& r : result.replicates) {
    if (r.failed) {
      ++result.nFailed;
      continue;
    }
    sample.draws.push_back({r.lambda, r.nu});
  }
  if (sample.draws.empty()) throw ConvergenceError("study: every replicate failed");
  result.mixing = mixing_probs(sample);
  result.critical01 = critical_value(sample, 0.01).value;
  result.critical05 = critical_value(sample, 0.05).value;
  const auto top = sample.component(k);
  result.ksAvailable = top.size() >= 5;
  if (result.ksAvailable)
    result.ksTopComponent = ks_test(top, [k](double x) { return chisq_cdf(k, x); });
}

namespace {

StudyResult run_study(const StudyConfig& config, bool parallel) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  StudyResult result;
  result.k = config.k;
  result.replicates.resize(static_cast<std::size_t>(config.nReplicates));
  parallel_for(
      result.replicates.size(),
      [&](std::size_t r) {
        auto& rec = result.replicates[r];
        rec.replicate = static_cast<int>(r);
        try {
          RngStream rng(config.seed, r);
          const Dataset data =
              simulate_null_dataset(config.k, config.G, config.E, config.nFamilies, config.piLaw, rng);
          OptimizerSettings s = config.optimizer;
          s.seed = derive_seed(config.seed, r);
          const auto t = lrt(data, s);
          rec.lambda = t.lambda;
          rec.nu = t.nu;
          rec.aHat = t.fullFit.params.a;
          rec.loglikNull = t.nullFit.loglik;
          rec.loglikFull = t.fullFit.loglik;
        } catch (const std::exception& e) {
          rec.failed = true;
          rec.error = e.what();
        }
      },
      parallel);
  summarize(result);
  if (result.nFailed * 100 > config.nReplicates)
    throw ConvergenceError("study: " + std::to_string(result.nFailed) + " of " +
                           std::to_string(config.nReplicates) + " replicates failed (> 1%)");
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace

StudyResult run_null_study(const StudyConfig& config) { return run_study(config, true); }
StudyResult run_null_study_serial(const StudyConfig& config) { return run_study(config, false); }

NuisanceSet rescale_nuisance(const Eigen::MatrixXd& G, const Eigen::MatrixXd& E, double effect) {
  if (!(effect > 0.0 && effect < 1.0)) throw StructuralError("rescale: effect size must be in (0,1)");
  const Eigen::VectorXd dg = (effect / G.diagonal().array()).sqrt();
  const Eigen::VectorXd de = ((1.0 - effect) / E.diagonal().array()).sqrt();
  NuisanceSet s{dg.asDiagonal() * G * dg.asDiagonal(), de.asDiagonal() * E * de.asDiagonal()};
  // Exact diagonals; the similarity scaling only leaves rounding there.
  s.G.diagonal().setConstant(effect);
  s.E.diagonal().setConstant(1.0 - effect);
  return s;
}

std::vector<NuisanceSet> nuisance_sweep(int k, double effect, int nDraws, int K, RngStream& rng) {
  if (k < 2) throw StructuralError("nuisance_sweep: needs k >= 2 (no correlations for k = 1)");
  if (nDraws < K) throw StructuralError("nuisance_sweep: nDraws must be >= K");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  const int offd = k * (k - 1) / 2;
  std::vector<NuisanceSet> draws;
  draws.reserve(static_cast<std::size_t>(nDraws));
  Eigen::MatrixXd features(nDraws, 2 * offd);
  for (int i = 0; i < nDraws; ++i) {
    const Eigen::MatrixXd G = inv_wishart_sample(I, k + 1.0, rng);
    const Eigen::MatrixXd E = inv_wishart_sample(I, k + 1.0, rng);
    draws.push_back(rescale_nuisance(G, E, effect));
    const Eigen::MatrixXd rg = correlation(draws.back().G), re = correlation(draws.back().E);
    int t = 0;
    for (int p = 0; p < k; ++p)
      for (int q = p + 1; q < k; ++q, ++t) {
        features(i, t) = rg(p, q);
        features(i, offd + t) = re(p, q);
      }
  }
  const auto km = kmeans(features, K, rng);
  std::vector<NuisanceSet> out;
  for (int c = 0; c < K; ++c) {
    Eigen::Index nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      const double d = (features.row(i) - km.centers.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    out.push_back(draws[static_cast<std::size_t>(nearest)]);
  }
  return out;
}

std::vector<double> permutation_baseline(const Dataset& data, int nPerm, std::uint64_t seed,
                                         const OptimizerSettings& settings) {
  if (nPerm < 1) throw StructuralError("permutation_baseline: nPerm must be >= 1");
  std::vector<double> lambdas(static_cast<std::size_t>(nPerm));
  parallel_for(lambdas.size(), [&](std::size_t r) {
    std::vector<FamilyObservation> fams = data.families();
    if (r > 0) {
      RngStream rng(seed, r);
      for (std::size_t i = fams.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(fams[i - 1].pi, fams[j].pi);
      }
    }
    OptimizerSettings s = settings;
    s.seed = r == 0 ? settings.seed : derive_seed(seed, r);
    lambdas[r] = lrt(Dataset(data.k(), std::move(fams)), s).lambda;
  });
  return lambdas;
}

Dataset bootstrap_replicate(const Dataset& data, const ComponentParams& nullFit, std::uint64_t seed,
                            int replicate) {
  const int k = data.k();
  const auto G = SymMatrix::from_dense(nullFit.G());
  const auto E = SymMatrix::from_dense(nullFit.E());
  const Eigen::VectorXd zeroA = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd mu2(2 * k);
  mu2 << nullFit.mu, nullFit.mu;
  RngStream rng(seed, static_cast<std::uint64_t>(replicate));
  std::vector<FamilyObservation> fams;
  fams.reserve(data.size());
  std::map<std::pair<double, double>, Eigen::MatrixXd> factors;
  Eigen::VectorXd z(2 * k);
  for (const auto& f : data.families()) {
    auto it = factors.find({f.pi, f.phi});
    if (it == factors.end()) {
      const auto L = try_cholesky(assemble_sigma(zeroA, G, E, f.pi, f.phi).dense());
      if (!L) throw NumericDomainError("bootstrap: null covariance is not positive definite");
      it = factors.emplace(std::make_pair(f.pi, f.phi), *L).first;
    }
    for (int d = 0; d < 2 * k; ++d) z(d) = rng.normal();
    fams.push_back({f.pi, f.phi, mu2 + it->second * z});
  }
  return Dataset(k, std::move(fams));
}

std::vector<double> bootstrap_baseline(const Dataset& data, int nBoot, std::uint64_t seed,
                                       const OptimizerSettings& settings) {
  if (nBoot < 1) throw StructuralError("bootstrap_baseline: nBoot must be >= 1");
  const FitResult nullFit = fit(data, Restriction::null(), settings);
  std::vector<double> lambdas(static_cast<std::size_t>(nBoot));
  parallel_for(lambdas.size(), [&](std::size_t r) {
    OptimizerSettings s = settings;
    s.seed = derive_seed(seed, r);
    lambdas[r] = lrt(bootstrap_replicate(data, nullFit.params, seed, static_cast<int>(r)), s).lambda;
  });
  return lambdas;
}

}  // namespace vclink

#include "vclink/mle.hpp"

#include "vclink/errors.hpp"
#include "vclink/likelihood.hpp"
#include "vclink/optim.hpp"
#include "vclink/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vclink {

void OptimizerSettings::validate() const {
  if (nStarts < 1) throw StructuralError("optimizer: nStarts must be >= 1");
  if (!(tol > 0.0)) throw StructuralError("optimizer: tol must be positive");
  if (maxIter < 1) throw StructuralError("optimizer: maxIter must be >= 1");
  if (!(epsLL > 0.0)) throw StructuralError("optimizer: epsLL must be positive");
}

std::string Restriction::label() const {
  switch (kind) {
    case RestrictionKind::Full: return "full";
    case RestrictionKind::Null: return "null";
    case RestrictionKind::Partial: return "partial(" + std::to_string(index + 1) + ")";
  }
  return "?";
}

namespace {

// x = [free loadings, packed gChol, packed eChol]
struct Layout {
  int k = 0;
  int m = 0;
  std::vector<int> freeA;

  Layout(int traits, Restriction r) : k(traits), m(theta_dim(traits)) {
    for (int i = 0; i < k; ++i)
      if (!r.pinned(i)) freeA.push_back(i);
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(freeA.size()) + 2 * m; }

  Eigen::VectorXd pack(const Eigen::VectorXd& a, const Eigen::MatrixXd& gL,
                       const Eigen::MatrixXd& eL) const {
    Eigen::VectorXd x(size());
    Eigen::Index t = 0;
    for (int i : freeA) x(t++) = a(i);
    x.segment(t, m) = pack_lower(gL);
    x.segment(t + m, m) = pack_lower(eL);
    return x;
  }

  void unpack(const Eigen::VectorXd& x, Eigen::VectorXd& a, Eigen::MatrixXd& gL,
              Eigen::MatrixXd& eL) const {
    a = Eigen::VectorXd::Zero(k);
    Eigen::Index t = 0;
    for (int i : freeA) a(i) = x(t++);
    gL = unpack_lower(x.segment(t, m), k);
    eL = unpack_lower(x.segment(t + m, m), k);
  }
};

class Objective {
 public:
  Objective(const PairLikelihood& lik, const Layout& layout) : lik_(lik), layout_(layout) {}

  bool operator()(const Eigen::VectorXd& x, double& value, Eigen::VectorXd* grad) const {
    Eigen::VectorXd a;
    Eigen::MatrixXd gL, eL;
    layout_.unpack(x, a, gL, eL);
    PairLikelihood::Gradient g;
    const auto ll = lik_.profile(a * a.transpose(), gL * gL.transpose(), eL * eL.transpose(),
                                 nullptr, grad ? &g : nullptr);
    if (!ll) return false;
    const double n = lik_.families();
    value = -*ll / n;
    if (grad) {
      grad->resize(x.size());
      const Eigen::VectorXd da = 2.0 * g.dA * a;
      Eigen::Index t = 0;
      for (int i : layout_.freeA) (*grad)(t++) = -da(i) / n;
      const Eigen::MatrixXd dgL = (2.0 * g.dG * gL).triangularView<Eigen::Lower>();
      const Eigen::MatrixXd deL = (2.0 * g.dE * eL).triangularView<Eigen::Lower>();
      grad->segment(t, layout_.m) = -pack_lower(dgL) / n;
      grad->segment(t + layout_.m, layout_.m) = -pack_lower(deL) / n;
    }
    return true;
  }

 private:
  const PairLikelihood& lik_;
  const Layout& layout_;
};

struct MomentStart {
  Eigen::MatrixXd gL, eL;
  double scale;
};

MomentStart moment_start(const PairLikelihood& lik) {
  const Eigen::MatrixXd& T = lik.total_covariance();
  const int k = lik.k();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> te(T, Eigen::EigenvaluesOnly);
  const double top = te.eigenvalues().maxCoeff();
  if (!(top > 0.0) || !(te.eigenvalues()(0) > 1e-10 * top))
    throw NumericDomainError("fit: trait covariance is singular (constant or collinear traits)");
  const Eigen::MatrixXd L = *try_cholesky(T);
  // Under the null the cross-sib covariance is G/2; whiten, clamp, and map back.
  const Eigen::MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(symmetrized(Linv * (2.0 * lik.cross_covariance()) * Linv.transpose()));
  const Eigen::VectorXd lam = se.eigenvalues().cwiseMax(0.05).cwiseMin(0.9);
  const Eigen::MatrixXd S = se.eigenvectors() * lam.asDiagonal() * se.eigenvectors().transpose();
  const Eigen::MatrixXd G0 = symmetrized(L * S * L.transpose());
  const Eigen::MatrixXd E0 = symmetrized(T - G0);
  return {*try_cholesky(G0), *try_cholesky(E0), std::sqrt(T.diagonal().mean())};
}

Eigen::MatrixXd jitter(const Eigen::MatrixXd& lower, double sd, RngStream& rng) {
  Eigen::MatrixXd out = lower;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out(i, j) += sd * rng.normal();
  return out;
}

std::uint64_t restriction_stream(Restriction r) {
  switch (r.kind) {
    case RestrictionKind::Null: return 0;
    case RestrictionKind::Full: return 1;
    case RestrictionKind::Partial: return 2 + static_cast<std::uint64_t>(r.index);
  }
  return 0;
}

// Newton refinement with a central-difference Hessian of the analytic gradient.
optim::Result polish(const Objective& obj, const Eigen::VectorXd& x0) {
  auto twice = [&obj](const Eigen::VectorXd& x, double& v, Eigen::VectorXd* g,
                      Eigen::MatrixXd* h) -> bool {
    Eigen::VectorXd grad;
    if (!obj(x, v, &grad)) return false;
    if (g) *g = grad;
    if (h) {
      const Eigen::Index n = x.size();
      h->resize(n, n);
      Eigen::VectorXd gp, gm;
      double vp, vm;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double step = 1e-5 * std::max(1.0, std::abs(x(j)));
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += step;
        xm(j) -= step;
        if (!obj(xp, vp, &gp) || !obj(xm, vm, &gm)) return false;
        h->col(j) = (gp - gm) / (2.0 * step);
      }
      *h = symmetrized(*h);
    }
    return true;
  };
  optim::Options opts;
  opts.maxIter = 25;
  opts.relTol = 1e-15;
  opts.stepTol = 1e-13;
  opts.gradTol = 1e-12;
  return optim::minimize_newton(twice, x0, opts);
}

}  // namespace

FitResult fit(const Dataset& data, Restriction restriction, const OptimizerSettings& settings,
              const FitSeeds& seeds) {
  settings.validate();
  if (data.empty()) throw StructuralError("fit: empty dataset");
  const int k = data.k();
  if (restriction.kind == RestrictionKind::Partial && (restriction.index < 0 || restriction.index >= k))
    throw StructuralError("fit: partial restriction index out of range");

  const Layout layout(k, restriction);
  const Eigen::Index nParams = layout.size() + k;
  if (static_cast<Eigen::Index>(2 * k * data.size()) <= nParams)
    throw StructuralError("fit: more parameters than observations (" + std::to_string(nParams) +
                          " vs " + std::to_string(2 * k * data.size()) + ")");

  const PairLikelihood lik(data);
  const MomentStart moments = moment_start(lik);
  const Objective objective(lik, layout);
  RngStream rng(settings.seed, restriction_stream(restriction));

  std::vector<Eigen::VectorXd> starts;
  const Eigen::VectorXd zeroA = Eigen::VectorXd::Zero(k);
  if (restriction.kind == RestrictionKind::Null) {
    starts.push_back(layout.pack(zeroA, moments.gL, moments.eL));
    if (seeds.nullFit) starts.push_back(layout.pack(zeroA, seeds.nullFit->gChol, seeds.nullFit->eChol));
    while (static_cast<int>(starts.size()) < settings.nStarts)
      starts.push_back(layout.pack(zeroA, jitter(moments.gL, 0.15 * moments.scale, rng),
                                   jitter(moments.eL, 0.15 * moments.scale, rng)));
  } else {
    const ComponentParams nullFit = seeds.nullFit
        ? *seeds.nullFit
        : fit(data, Restriction::null(), settings).params;
    for (const auto& s : seeds.extraStarts) starts.push_back(layout.pack(s.a, s.gChol, s.eChol));

    // Ascent direction of the loadings at the null optimum: top eigenvector of dl/dA
    // restricted to the free traits, scaled by a short line search.
    PairLikelihood::Gradient g0;
    const Eigen::MatrixXd G0 = nullFit.G(), E0 = nullFit.E();
    if (lik.profile(Eigen::MatrixXd::Zero(k, k), G0, E0, nullptr, &g0)) {
      const auto nf = static_cast<Eigen::Index>(layout.freeA.size());
      Eigen::MatrixXd sub(nf, nf);
      for (Eigen::Index i = 0; i < nf; ++i)
        for (Eigen::Index j = 0; j < nf; ++j) sub(i, j) = g0.dA(layout.freeA[i], layout.freeA[j]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
      const Eigen::VectorXd v = es.eigenvectors().col(nf - 1);
      double bestVal = std::numeric_limits<double>::infinity();
      Eigen::VectorXd bestX;
      for (double t : {0.02, 0.05, 0.1, 0.2, 0.35, 0.6}) {
        Eigen::VectorXd a = zeroA;
        for (Eigen::Index i = 0; i < nf; ++i) a(layout.freeA[i]) = t * moments.scale * v(i);
        const Eigen::VectorXd x = layout.pack(a, nullFit.gChol, nullFit.eChol);
        double val;
        if (objective(x, val, nullptr) && val < bestVal) {
          bestVal = val;
          bestX = x;
        }
      }
      if (bestX.size()) starts.push_back(bestX);
    }
    int generated = 0;
    while (generated < settings.nStarts) {
      Eigen::VectorXd a = zeroA;
      const bool fromNull = generated % 2 == 0;
      const double sd = (fromNull ? 0.05 : 0.3) * moments.scale;
      for (int i : layout.freeA) a(i) = sd * rng.normal();
      starts.push_back(fromNull ? layout.pack(a, nullFit.gChol, nullFit.eChol)
                                : layout.pack(a, moments.gL, moments.eL));
      ++generated;
    }
  }

  optim::Options opts;
  opts.maxIter = settings.maxIter;
  opts.relTol = settings.tol;
  opts.stepTol = 1e-8;
  opts.gradTol = 1e-10;

  auto fnObjective = [&objective](const Eigen::VectorXd& x, double& v, Eigen::VectorXd* g) {
    return objective(x, v, g);
  };
  int bestIndex = -1;
  optim::Result best;
  best.value = std::numeric_limits<double>::infinity();
  int anyConverged = 0;
  int totalIter = 0;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    auto r = optim::minimize_bfgs(fnObjective, starts[s], opts);
    totalIter += r.iterations;
    if (!std::isfinite(r.value)) continue;
    anyConverged += r.converged;
    // Strict improvement keeps the lowest start index on ties.
    if (r.value < best.value) {
      best = std::move(r);
      bestIndex = static_cast<int>(s);
    }
  }
  if (bestIndex < 0)
    throw NumericDomainError("fit(" + restriction.label() +
                             "): covariance not positive definite at every start");
  if (!anyConverged) {
    std::ostringstream msg;
    msg << "fit(" << restriction.label() << "): no start converged; best -loglik/n = " << best.value
        << " after " << totalIter << " iterations";
    throw ConvergenceError(msg.str());
  }

  auto refined = polish(objective, best.x);
  if (std::isfinite(refined.value) && refined.value <= best.value) {
    best.x = refined.x;
    best.value = refined.value;
    best.converged = best.converged || refined.converged;
  }

  FitResult out;
  Eigen::MatrixXd gL, eL;
  layout.unpack(best.x, out.params.a, gL, eL);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (gL(j, j) < 0) gL.col(j) = -gL.col(j);
    if (eL(j, j) < 0) eL.col(j) = -eL.col(j);
  }
  out.params.gChol = gL;
  out.params.eChol = eL;
  lik.profile(out.params.A(), out.params.G(), out.params.E(), &out.params.mu);
  out.params.normalize_sign();
  out.loglik = loglik(data, out.params);
  out.converged = best.converged;
  out.nStarts = static_cast<int>(starts.size());
  out.bestStartIndex = bestIndex;
  out.iterations = totalIter;
  return out;
}

int classify_nu(double loglikFull, std::span<const double> loglikPartial, double epsLL) {
  int nu = 0;
  for (double ll : loglikPartial) nu += (loglikFull - ll > epsLL);
  return nu;
}

int classify_nu(const FitResult& full, std::span<const FitResult> partial, double epsLL) {
  std::vector<double> ll;
  ll.reserve(partial.size());
  for (const auto& p : partial) ll.push_back(p.loglik);
  return classify_nu(full.loglik, ll, epsLL);
}

LrtResult lrt(const Dataset& data, const OptimizerSettings& settings) {
  LrtResult r;
  r.nullFit = fit(data, Restriction::null(), settings);
  FitSeeds seeds;
  seeds.nullFit = r.nullFit.params;
  const int k = data.k();
  if (k == 1) {
    r.partialFits.push_back(r.nullFit);
  } else {
    for (int i = 0; i < k; ++i) {
      r.partialFits.push_back(fit(data, Restriction::partial(i), settings, seeds));
      seeds.extraStarts.push_back(r.partialFits.back().params);
    }
  }
  r.fullFit = fit(data, Restriction::full(), settings, seeds);

  double lambda = 2.0 * (r.fullFit.loglik - r.nullFit.loglik);
  if (lambda < -1e-6) {
    std::ostringstream msg;
    msg << "lrt: full fit is below the null fit (lambda = " << lambda << ")";
    throw ConvergenceError(msg.str());
  }
  r.lambda = std::max(0.0, lambda);
  r.nu = classify_nu(r.fullFit, r.partialFits, settings.epsLL);
  return r;
}

}  // namespace vclink

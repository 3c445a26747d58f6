#include "vclink/cone.hpp"

#include "vclink/errors.hpp"
#include "vclink/linalg.hpp"
#include "vclink/model.hpp"
#include "vclink/optim.hpp"
#include "vclink/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace vclink {

ConeProblem::ConeProblem(Eigen::VectorXd Z, Eigen::MatrixXd W) : Z_(std::move(Z)), W_(std::move(W)) {
  const int m = static_cast<int>(Z_.size());
  k_ = trait_count_for_theta_dim(m);
  if (k_ < 1) throw StructuralError("ConeProblem: |Z| is not k(k+1)/2 for any k");
  if (W_.rows() != m || W_.cols() != m) throw StructuralError("ConeProblem: W has the wrong shape");
  if (!Z_.allFinite()) throw StructuralError("ConeProblem: Z is not finite");
  if (!try_cholesky(W_)) throw NumericDomainError("ConeProblem: W is not positive definite");
  zwz_ = Z_.dot(W_ * Z_);
}

namespace {

// Symmetric k x k matrix R(u) with u'theta_map(a) = a' R(u) a.
Eigen::MatrixXd inner_product_matrix(int k, const Eigen::VectorXd& u) {
  Eigen::MatrixXd R = theta_to_matrix(k, u);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) R(i, j) *= 0.5;
  return R;
}

// d theta / d a, m x k.
Eigen::MatrixXd theta_jacobian(const Eigen::VectorXd& a) {
  const int k = static_cast<int>(a.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(theta_dim(k), k);
  for (int i = 0; i < k; ++i) J(i, i) = 2.0 * a(i);
  int t = k;
  for (int p = 0; p < k; ++p)
    for (int q = p + 1; q < k; ++q, ++t) {
      J(t, p) = a(q);
      J(t, q) = a(p);
    }
  return J;
}

struct Reduced {
  int k;
  std::vector<int> free;

  Eigen::VectorXd expand(const Eigen::VectorXd& x) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < free.size(); ++i) a(free[i]) = x(static_cast<Eigen::Index>(i));
    return a;
  }
  Eigen::VectorXd restrict(const Eigen::VectorXd& a) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(free.size()));
    for (std::size_t i = 0; i < free.size(); ++i) x(static_cast<Eigen::Index>(i)) = a(free[i]);
    return x;
  }
};

ProjectionResult finish(const ConeProblem& pb, Eigen::VectorXd a, double objective, bool converged) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != 0.0) {
      if (a(i) < 0.0) a = -a;
      break;
    }
  }
  a.array() += 0.0;  // -0 -> +0
  ProjectionResult r;
  r.aHat = std::move(a);
  r.thetaHat = theta_map(r.aHat);
  r.objective = objective;
  r.lambda = std::max(0.0, pb.origin_distance() - objective);
  r.converged = converged;
  return r;
}

ProjectionResult zero_projection(const ConeProblem& pb) {
  return finish(pb, Eigen::VectorXd::Zero(pb.k()), pb.origin_distance(), true);
}

double gap_tolerance(const ConeProblem& pb, const ConeSettings& s) {
  return s.epsObj * std::max(1.0, pb.origin_distance());
}

}  // namespace

double polar_margin(const ConeProblem& pb) {
  const Eigen::MatrixXd R = inner_product_matrix(pb.k(), pb.W() * pb.Z());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(pb.k() - 1);
}

bool polar_membership(const ConeProblem& pb, const ConeSettings& settings) {
  return polar_margin(pb) <= settings.tolPolar * std::sqrt(pb.origin_distance());
}

ProjectionResult project_restricted(const ConeProblem& pb, const ConeSettings& settings,
                                    const std::vector<bool>& pinned,
                                    std::span<const Eigen::VectorXd> extraStarts) {
  const int k = pb.k();
  if (!pinned.empty() && static_cast<int>(pinned.size()) != k)
    throw StructuralError("project: pinned mask has the wrong length");
  Reduced red{k, {}};
  for (int i = 0; i < k; ++i)
    if (pinned.empty() || !pinned[static_cast<std::size_t>(i)]) red.free.push_back(i);

  if (red.free.empty() || pb.Z().isZero(0.0)) return zero_projection(pb);

  const Eigen::VectorXd& Z = pb.Z();
  const Eigen::MatrixXd& W = pb.W();

  // One free loading: theta = t e_jj with t = a_j^2 >= 0, a quadratic in t.
  if (red.free.size() == 1) {
    const int j = red.free[0];
    const double wz = (W * Z)(j);
    const double t = std::max(0.0, wz / W(j, j));
    Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
    a(j) = std::sqrt(t);
    return finish(pb, a, pb.origin_distance() - 2.0 * t * wz + t * t * W(j, j), true);
  }

  auto objective = [&](const Eigen::VectorXd& x, double& value, Eigen::VectorXd* grad,
                       Eigen::MatrixXd* hess) -> bool {
    const Eigen::VectorXd a = red.expand(x);
    const Eigen::VectorXd r = Z - theta_map(a);
    const Eigen::VectorXd Wr = W * r;
    value = r.dot(Wr);
    if (grad || hess) {
      const Eigen::MatrixXd J = theta_jacobian(a);
      if (grad) *grad = red.restrict(-2.0 * J.transpose() * Wr);
      if (hess) {
        const Eigen::MatrixXd full = 2.0 * J.transpose() * W * J - 4.0 * inner_product_matrix(k, Wr);
        const auto nf = static_cast<Eigen::Index>(red.free.size());
        hess->resize(nf, nf);
        for (Eigen::Index i = 0; i < nf; ++i)
          for (Eigen::Index j = 0; j < nf; ++j) (*hess)(i, j) = full(red.free[i], red.free[j]);
      }
    }
    return std::isfinite(value);
  };

  std::vector<Eigen::VectorXd> starts;
  for (const auto& s : extraStarts) starts.push_back(red.restrict(s));

  // Best rank-one fit of the matrix reconstructed from Z.
  {
    Eigen::MatrixXd M = theta_to_matrix(k, Z);
    Eigen::MatrixXd sub(red.free.size(), red.free.size());
    for (std::size_t i = 0; i < red.free.size(); ++i)
      for (std::size_t j = 0; j < red.free.size(); ++j) sub(i, j) = M(red.free[i], red.free[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    const Eigen::Index top = sub.rows() - 1;
    starts.push_back(std::sqrt(std::max(es.eigenvalues()(top), 0.0)) * es.eigenvectors().col(top));
  }
  // Direction of steepest W-inner product with Z, scaled to the best point on its ray.
  {
    const Eigen::MatrixXd R = inner_product_matrix(k, W * Z);
    Eigen::MatrixXd sub(red.free.size(), red.free.size());
    for (std::size_t i = 0; i < red.free.size(); ++i)
      for (std::size_t j = 0; j < red.free.size(); ++j) sub(i, j) = R(red.free[i], red.free[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    const Eigen::VectorXd v = es.eigenvectors().col(sub.rows() - 1);
    const Eigen::VectorXd th = theta_map(red.expand(v));
    const double t = std::max(0.0, es.eigenvalues()(sub.rows() - 1)) / th.dot(W * th);
    starts.push_back(std::sqrt(t) * v);
  }
  for (std::size_t i = 0; i < red.free.size(); ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(red.free.size()));
    x(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(Z(red.free[i]), 0.0));
    starts.push_back(x);
  }
  std::uint64_t mask = 0;
  for (int i = 0; i < k; ++i)
    if (!pinned.empty() && pinned[static_cast<std::size_t>(i)]) mask |= (1ULL << i);
  RngStream rng(settings.seed, mask);
  const double spread = std::sqrt(Z.lpNorm<Eigen::Infinity>());
  for (int s = 0; s < settings.nStarts; ++s) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(red.free.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = spread * rng.normal();
    starts.push_back(x);
  }

  optim::Options opts;
  opts.maxIter = settings.maxIter;
  opts.relTol = 1e-15;
  opts.stepTol = 1e-13;
  opts.gradTol = 1e-13 * std::max(1.0, pb.origin_distance());

  double best = pb.origin_distance();
  Eigen::VectorXd bestA = Eigen::VectorXd::Zero(k);
  bool anyConverged = false;
  for (const auto& x0 : starts) {
    const auto r = optim::minimize_newton(objective, x0, opts);
    anyConverged = anyConverged || r.converged;
    if (r.value < best) {
      best = r.value;
      bestA = red.expand(r.x);
    }
  }
  if (!anyConverged) throw ConvergenceError("project: no start converged");
  // Gains below the objective tolerance are rounding residue around the origin.
  if (pb.origin_distance() - best <= gap_tolerance(pb, settings)) return zero_projection(pb);
  return finish(pb, bestA, best, anyConverged);
}

ProjectionResult project(const ConeProblem& pb, const ConeSettings& settings) {
  ProjectionResult free = project_restricted(pb, settings);
  const int k = pb.k();
  const double eps = gap_tolerance(pb, settings);
  // Every pinned objective lies in [free, Z'WZ], so a tiny lambda forces nu = 0.
  if (free.lambda <= eps) {
    free.nu = 0;
    return free;
  }
  if (k == 1) {
    free.nu = 1;
    return free;
  }
  int nu = 0;
  for (int i = 0; i < k; ++i) {
    std::vector<bool> mask(static_cast<std::size_t>(k), false);
    mask[static_cast<std::size_t>(i)] = true;
    Eigen::VectorXd seed = free.aHat;
    seed(i) = 0.0;
    const std::vector<Eigen::VectorXd> extra{seed};
    const auto pinnedFit = project_restricted(pb, settings, mask, extra);
    nu += (pinnedFit.objective - free.objective > eps);
  }
  free.nu = nu;
  return free;
}

GaussianLrt gaussian_lrt(const ConeProblem& pb, const ConeSettings& settings) {
  const auto r = project(pb, settings);
  return {r.lambda, r.nu};
}

double sheet_angle_cosine() {
  const Eigen::Vector3d upper(1.0, 1.0, 1.0), lower(1.0, 1.0, -1.0);
  return upper.dot(lower) / (upper.norm() * lower.norm());
}

double sheet_angle_degrees() { return std::acos(sheet_angle_cosine()) * 180.0 / std::numbers::pi; }

}  // namespace vclink

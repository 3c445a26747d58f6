#include "vclink/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vclink::optim {

namespace {

struct ChangeTracker {
  int streak = 0;
  bool small(double before, double after, double relTol) {
    const double scale = std::max({std::abs(before), std::abs(after), 1e-300});
    streak = (std::abs(before - after) <= relTol * scale) ? streak + 1 : 0;
    return streak >= 3;
  }
};

}  // namespace

Result minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const Options& opts) {
  Result r;
  r.x = std::move(x0);
  const Eigen::Index n = r.x.size();
  if (!f(r.x, r.value, &r.grad)) {
    r.value = std::numeric_limits<double>::infinity();
    return r;
  }
  if (n == 0) {
    r.converged = true;
    return r;
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  ChangeTracker change;
  Eigen::VectorXd xNew(n), gNew(n);
  for (r.iterations = 0; r.iterations < opts.maxIter; ++r.iterations) {
    if (r.grad.lpNorm<Eigen::Infinity>() <= opts.gradTol) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd p = -H * r.grad;
    double slope = r.grad.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      scaled = false;
      p = -r.grad;
      slope = -r.grad.squaredNorm();
    }
    double t = 1.0;
    double fNew = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xNew = r.x + t * p;
      if (f(xNew, fNew, &gNew) && std::isfinite(fNew) && fNew <= r.value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!H.isIdentity()) {
        H.setIdentity();
        scaled = false;
        continue;
      }
      // No descent possible along the gradient at machine precision.
      r.converged = r.grad.lpNorm<Eigen::Infinity>() <= std::sqrt(opts.gradTol);
      break;
    }
    const Eigen::VectorXd s = xNew - r.x;
    const Eigen::VectorXd y = gNew - r.grad;
    const double before = r.value;
    r.x = xNew;
    r.value = fNew;
    r.grad = gNew;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    if (change.small(before, r.value, opts.relTol) || s.lpNorm<Eigen::Infinity>() < opts.stepTol) {
      r.converged = true;
      ++r.iterations;
      break;
    }
  }
  return r;
}

Result minimize_newton(const TwiceDifferentiable& f, Eigen::VectorXd x0, const Options& opts) {
  Result r;
  r.x = std::move(x0);
  const Eigen::Index n = r.x.size();
  Eigen::MatrixXd hess;
  if (!f(r.x, r.value, &r.grad, &hess)) {
    r.value = std::numeric_limits<double>::infinity();
    return r;
  }
  if (n == 0) {
    r.converged = true;
    return r;
  }
  ChangeTracker change;
  Eigen::VectorXd xNew(n), gNew(n);
  Eigen::MatrixXd hNew;
  for (r.iterations = 0; r.iterations < opts.maxIter; ++r.iterations) {
    if (r.grad.lpNorm<Eigen::Infinity>() <= opts.gradTol) {
      r.converged = true;
      break;
    }
    // Shift the Hessian until it is positive definite.
    const double hscale = std::max(1e-12, hess.diagonal().cwiseAbs().maxCoeff());
    double shift = 0.0;
    Eigen::VectorXd p;
    for (int attempt = 0; attempt < 80; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(hess + shift * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        p = -llt.solve(r.grad);
        if (p.allFinite() && r.grad.dot(p) < 0.0) break;
      }
      p.resize(0);
      shift = shift == 0.0 ? 1e-10 * hscale : 4.0 * shift;
    }
    if (p.size() == 0) p = -r.grad;
    const double slope = r.grad.dot(p);
    double t = 1.0;
    double fNew = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xNew = r.x + t * p;
      if (f(xNew, fNew, &gNew, &hNew) && std::isfinite(fNew) && fNew <= r.value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      r.converged = r.grad.lpNorm<Eigen::Infinity>() <= std::sqrt(opts.gradTol);
      break;
    }
    const double stepNorm = (xNew - r.x).lpNorm<Eigen::Infinity>();
    const double before = r.value;
    r.x = xNew;
    r.value = fNew;
    r.grad = gNew;
    hess = hNew;
    if (change.small(before, r.value, opts.relTol) || stepNorm < opts.stepTol) {
      ++r.iterations;
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace vclink::optim

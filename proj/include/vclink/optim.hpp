#pragma once

// Small smooth minimizers used by the likelihood fits and the cone projection.

#include <Eigen/Dense>

#include <functional>

namespace vclink::optim {

struct Options {
  int maxIter = 2000;
  double relTol = 1e-9;    // relative objective change, must hold on 3 consecutive iterations
  double stepTol = 1e-8;   // infinity norm of an accepted step
  double gradTol = 1e-10;  // infinity norm of the gradient
};

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

// Returns false when x lies outside the objective's domain (the caller backtracks).
// `grad` is resized and filled when non-null.
using Objective = std::function<bool(const Eigen::VectorXd& x, double& value, Eigen::VectorXd* grad)>;

// Also supplies the Hessian when `hess` is non-null.
using TwiceDifferentiable = std::function<bool(const Eigen::VectorXd& x, double& value,
                                               Eigen::VectorXd* grad, Eigen::MatrixXd* hess)>;

// Quasi-Newton BFGS with Armijo backtracking. x0 must be in the domain.
Result minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const Options& opts = {});

// Newton's method with Levenberg-style diagonal shift when the Hessian is indefinite.
Result minimize_newton(const TwiceDifferentiable& f, Eigen::VectorXd x0, const Options& opts = {});

}  // namespace vclink::optim

#pragma once

// Small dense nonlinear least-squares toolkit: damped Gauss-Newton
// (Levenberg-Marquardt) with a forward-difference Jacobian, and a
// Nelder-Mead simplex fallback for starts where the quadratic model stalls.
// Steps are accepted only when they strictly lower the cost.

#include <Eigen/Dense>
#include <functional>

namespace tlsecho {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using CostFn = std::function<double(const Eigen::VectorXd&)>;

struct LeastSquaresOptions {
  int max_iterations = 300;
  double ftol = 1e-14;          // relative cost decrease declaring convergence
  double xtol = 1e-12;          // relative step size declaring convergence
  double fd_step = 1e-7;        // relative forward-difference step
  double initial_damping = 1e-4;
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // sum of squared residuals
  bool converged = false;
  int n_evals = 0;    // residual-vector evaluations
  int iterations = 0;
};

LeastSquaresResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd x0,
                                       const LeastSquaresOptions& opts = {});

struct NelderMeadOptions {
  int max_iterations = 2000;
  double initial_step = 0.05;  // simplex edge relative to max(1, |x_i|)
  double tol = 1e-12;          // relative cost spread across the simplex
};

LeastSquaresResult nelder_mead(const CostFn& fn, Eigen::VectorXd x0,
                               const NelderMeadOptions& opts = {});

}  // namespace tlsecho

#include "tlsecho/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace tlsecho {

LeastSquaresResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd x0,
                                       const LeastSquaresOptions& opts) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  LeastSquaresResult out;
  VectorXd x = std::move(x0);
  const Eigen::Index np = x.size();

  VectorXd r = fn(x);
  out.n_evals = 1;
  double cost = r.squaredNorm();
  double lambda = opts.initial_damping;

  MatrixXd jac(r.size(), np);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    out.iterations = iter + 1;

    // Forward-difference Jacobian at x.
    for (Eigen::Index j = 0; j < np; ++j) {
      const double h = opts.fd_step * std::max(1.0, std::abs(x[j]));
      VectorXd xh = x;
      xh[j] += h;
      jac.col(j) = (fn(xh) - r) / h;
      ++out.n_evals;
    }
    const MatrixXd jtj = jac.transpose() * jac;
    const VectorXd jtr = jac.transpose() * r;

    // MINPACK-style orthogonality test: the cosine between the residual and
    // every Jacobian column is scale-free, so it works at any cost level.
    {
      const double rnorm = std::sqrt(cost);
      double gcos = 0.0;
      for (Eigen::Index j = 0; j < np; ++j) {
        const double cn = jac.col(j).norm();
        if (cn > 0.0 && rnorm > 0.0) gcos = std::max(gcos, std::abs(jtr[j]) / (cn * rnorm));
      }
      if (gcos < 1e-9 || rnorm == 0.0) {
        out.converged = true;
        break;
      }
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      MatrixXd damped = jtj;
      for (Eigen::Index j = 0; j < np; ++j) {
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      }
      const VectorXd step = damped.ldlt().solve(-jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const VectorXd x_trial = x + step;
      const VectorXd r_trial = fn(x_trial);
      ++out.n_evals;
      const double cost_trial = r_trial.squaredNorm();
      if (cost_trial < cost) {
        const double rel_drop = (cost - cost_trial) / std::max(cost, 1e-300);
        const double rel_step = step.norm() / std::max(1.0, x.norm());
        x = x_trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel_drop < opts.ftol || rel_step < opts.xtol) {
          out.converged = true;
        }
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e14) break;
    }
    if (!accepted) {
      // No downhill step at any damping: a numerical stationary point.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }

  out.x = std::move(x);
  out.cost = cost;
  return out;
}

LeastSquaresResult nelder_mead(const CostFn& fn, Eigen::VectorXd x0,
                               const NelderMeadOptions& opts) {
  using Eigen::VectorXd;
  const Eigen::Index n = x0.size();
  LeastSquaresResult out;

  std::vector<VectorXd> pts(n + 1, x0);
  std::vector<double> costs(n + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    pts[j + 1][j] += opts.initial_step * std::max(1.0, std::abs(x0[j]));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    costs[i] = fn(pts[i]);
    ++out.n_evals;
  }

  std::vector<std::size_t> order(pts.size());
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    out.iterations = iter + 1;
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return costs[a] < costs[b]; });
    const std::size_t best = order.front(), worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];

    if (std::abs(costs[worst] - costs[best]) <=
        opts.tol * std::max(1e-300, std::abs(costs[best]))) {
      out.converged = true;
      break;
    }

    VectorXd centroid = VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    const VectorXd reflected = centroid + (centroid - pts[worst]);
    const double c_refl = fn(reflected);
    ++out.n_evals;
    if (c_refl < costs[best]) {
      const VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double c_exp = fn(expanded);
      ++out.n_evals;
      if (c_exp < c_refl) {
        pts[worst] = expanded;
        costs[worst] = c_exp;
      } else {
        pts[worst] = reflected;
        costs[worst] = c_refl;
      }
    } else if (c_refl < costs[second_worst]) {
      pts[worst] = reflected;
      costs[worst] = c_refl;
    } else {
      const VectorXd contracted = centroid + 0.5 * (pts[worst] - centroid);
      const double c_con = fn(contracted);
      ++out.n_evals;
      if (c_con < costs[worst]) {
        pts[worst] = contracted;
        costs[worst] = c_con;
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          costs[i] = fn(pts[i]);
          ++out.n_evals;
        }
      }
    }
  }

  const std::size_t best =
      std::distance(costs.begin(), std::min_element(costs.begin(), costs.end()));
  out.x = pts[best];
  out.cost = costs[best];
  return out;
}

}  // namespace tlsecho

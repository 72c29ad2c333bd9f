#include "tlsecho/least_squares.hpp"

#include <cmath>

#include "doctest.h"

using namespace tlsecho;

TEST_CASE("levenberg-marquardt solves a nonlinear model exactly") {
  // y = a * exp(b x) at 20 points.
  const double a_true = 2.5, b_true = -1.3;
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(20);
    for (int k = 0; k < 20; ++k) {
      const double x = 0.1 * k;
      r[k] = p[0] * std::exp(p[1] * x) - a_true * std::exp(b_true * x);
    }
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, -0.2;
  const auto sol = levenberg_marquardt(resid, x0);
  CHECK(sol.converged);
  CHECK(sol.x[0] == doctest::Approx(a_true).epsilon(1e-8));
  CHECK(sol.x[1] == doctest::Approx(b_true).epsilon(1e-8));
  CHECK(sol.cost < 1e-18);
}

TEST_CASE("accepted steps never increase the cost") {
  // The solver only accepts downhill steps; the returned cost can therefore
  // never exceed the cost of any starting point.
  auto resid = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(3);
    r[0] = 10.0 * (p[1] - p[0] * p[0]);
    r[1] = 1.0 - p[0];
    r[2] = 0.3 * p[1];
    return r;
  };
  for (double s : {-2.0, -0.5, 0.7, 3.0}) {
    Eigen::VectorXd x0(2);
    x0 << s, -s;
    const double initial = resid(x0).squaredNorm();
    const auto sol = levenberg_marquardt(resid, x0);
    CHECK(sol.cost <= initial);
  }
}

TEST_CASE("nelder-mead reaches the valley floor") {
  const CostFn rosenbrock = [](const Eigen::VectorXd& p) {
    const double a = 1.0 - p[0];
    const double b = p[1] - p[0] * p[0];
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  NelderMeadOptions opts;
  opts.max_iterations = 5000;
  const auto sol = nelder_mead(rosenbrock, x0, opts);
  CHECK(sol.cost < 1e-10);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-4));
}

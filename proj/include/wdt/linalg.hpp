#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace wdt {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  /// Relative residual after each iteration (index 0 is the start).
  std::vector<double> history;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator given
/// as apply(in, out). x holds the initial guess and receives the solution.
template <typename Apply>
CgResult conjugate_gradient(Apply&& apply, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                            double rel_tol, int max_iter, double abs_tol = 0.0) {
  CgResult res;
  const double bnorm = b.norm();
  if (bnorm <= abs_tol) {
    x.setZero();
    res.converged = true;
    res.history.push_back(0.0);
    return res;
  }
  Eigen::VectorXd ap(b.size());
  apply(x, ap);
  Eigen::VectorXd r = b - ap;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  res.history.push_back(std::sqrt(rr) / bnorm);
  const double stop = std::max(rel_tol, abs_tol / bnorm);
  if (res.history.back() <= stop) {
    res.converged = true;
    res.relative_residual = res.history.back();
    return res;
  }
  for (int it = 1; it <= max_iter; ++it) {
    apply(p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    res.iterations = it;
    res.history.push_back(std::sqrt(rr_new) / bnorm);
    if (res.history.back() <= stop) {
      res.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  res.relative_residual = res.history.back();
  return res;
}

}  // namespace wdt

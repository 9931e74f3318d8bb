#pragma once

#include "wdt/fields.hpp"
#include "wdt/geometry.hpp"
#include "wdt/transform.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace wdt::test {

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Pair random_pair(const GridPtr& g, std::uint64_t seed) {
  return Pair::unpack(g, random_vector(3 * static_cast<Eigen::Index>(g->n_interior()), seed));
}

inline ScalarField random_scalar(const GridPtr& g, std::uint64_t seed) {
  return random_pair(g, seed).phi;
}

inline FanPtr shared_fan(const Domain& dom, int n_points, int n_dirs) {
  return std::make_shared<const Fan>(make_fan(dom, n_points, n_dirs));
}

inline TraceConfig trace_for(const Grid& g) {
  TraceConfig tc;
  tc.step = 0.5 * g.spacing();
  return tc;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Empirical order from errors at spacings h and h/2.
inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace wdt::test

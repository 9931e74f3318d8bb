#include "doctest.h"
#include "support.hpp"

#include "wdt/errors.hpp"
#include "wdt/fields.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace wdt;
using wdt::test::order;
using wdt::test::random_pair;
using wdt::test::random_scalar;

namespace {

double sup_error(const CovectorField& f, const std::function<Vec2(const Vec2&)>& exact) {
  double e = 0.0;
  for (std::size_t idx : f.grid->interior_nodes())
    e = std::max(e, (Vec2(f.f1[idx], f.f2[idx]) - exact(f.grid->node(idx))).norm());
  return e;
}

// Laplacian of (1 - |x|^2/r^2)^3.
double bump3_laplacian(const Vec2& x, double r) {
  const double u = 1.0 - x.squaredNorm() / (r * r);
  if (u <= 0.0) return 0.0;
  const double r2 = r * r;
  return 24.0 * u * x.squaredNorm() / (r2 * r2) - 12.0 * u * u / r2;
}

}  // namespace

TEST_SUITE("fields") {

TEST_CASE("grid mask is radially consistent") {
  const Domain dom;
  const GridPtr g = make_grid(dom, 32);
  CHECK(g->spacing() * g->cells() == doctest::Approx(2.0 * dom.radius_m1));
  for (std::size_t idx = 0; idx < g->size(); ++idx) {
    const bool inside = g->node(idx).norm() < dom.radius_m - 0.5 * g->spacing();
    CHECK((g->kind(idx) == NodeKind::Interior) == inside);
  }
  CHECK_THROWS_AS(make_grid(dom, 1), std::invalid_argument);
}

TEST_CASE("bilinear interpolation is exact for affine fields") {
  const GridPtr g = make_grid(Domain{}, 16);
  const ScalarField s = ScalarField::sample(g, [](const Vec2& x) { return 1.0 + 2.0 * x.x() - x.y(); }, false);
  for (const Vec2& x : sample_disk({0.0, 0.0}, 1.2, 50))
    CHECK(s.interpolate(x) == doctest::Approx(1.0 + 2.0 * x.x() - x.y()).epsilon(1e-12));
}

TEST_CASE("exterior values are zero and pairs round-trip") {
  const GridPtr g = make_grid(Domain{}, 12);
  const Pair p = random_pair(g, 1);
  for (std::size_t idx = 0; idx < g->size(); ++idx)
    if (g->kind(idx) != NodeKind::Interior) CHECK(p.f.f1[idx] == 0.0);
  CHECK(Pair::unpack(g, p.pack()).pack() == p.pack());
  CHECK_THROWS_AS(Pair::unpack(g, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("divergence examples") {
  const GridPtr g = make_grid(Domain{}, 32);
  auto interior_max = [&](const ScalarField& s, double target) {
    double m = 0.0;
    for (std::size_t idx : g->interior_nodes()) m = std::max(m, std::abs(s.values[idx] - target));
    return m;
  };
  const CovectorField harmonic = CovectorField::sample(g, [](const Vec2& x) { return Vec2(x.y(), x.x()); }, false);
  CHECK(interior_max(divergence(harmonic), 0.0) <= 1e-10);
  const CovectorField radial = CovectorField::sample(g, [](const Vec2& x) { return x; }, false);
  CHECK(interior_max(divergence(radial), 2.0) <= 1e-10);
  const CovectorField shear = CovectorField::sample(g, [](const Vec2& x) { return Vec2(std::sin(x.y()), 0.0); }, false);
  CHECK(interior_max(divergence(shear), 0.0) <= 1e-10);
}

TEST_CASE("gradient examples") {
  const GridPtr g = make_grid(Domain{}, 32);
  const CovectorField zero = gradient(ScalarField::sample(g, [](const Vec2&) { return 3.0; }, false));
  CHECK(sup_error(zero, [](const Vec2&) { return Vec2(0.0, 0.0); }) <= 1e-12);
  const CovectorField lin = gradient(ScalarField::sample(g, [](const Vec2& x) { return x.x(); }, false));
  CHECK(sup_error(lin, [](const Vec2&) { return Vec2(1.0, 0.0); }) <= 1e-12);
}

TEST_CASE("gradient of the bump converges at second order") {
  const auto psi = ScalarFunction::bump({0.0, 0.0}, 1.0, 2);
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    const GridPtr g = make_grid(Domain{}, n);
    const double e = sup_error(gradient(ScalarField::sample(g, psi.value, false)), psi.gradient);
    if (prev > 0.0) CHECK(order(prev, e) >= 1.8);
    prev = e;
  }
}

TEST_CASE("dirichlet gradient is minus the transpose of the divergence") {
  const GridPtr g = make_grid(Domain{}, 20);
  const Pair p = random_pair(g, 2);
  const ScalarField q = random_scalar(g, 3);
  const double lhs = inner(dirichlet_gradient(q), p.f);
  const double rhs = -inner(q, dirichlet_divergence(p.f));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * norm(q) * norm(p.f) / g->spacing());
}

TEST_CASE("summation by parts away from the boundary") {
  const auto phi = ScalarFunction::bump({0.05, 0.0}, 0.7, 2);
  for (int n : {32, 64}) {
    const GridPtr g = make_grid(Domain{}, n);
    const ScalarField s = ScalarField::sample(g, phi.value);
    const CovectorField f = CovectorField::sample(g, [](const Vec2& x) { return Vec2(std::cos(x.y()), x.x() * x.y()); });
    const double defect = std::abs(inner(gradient(s), f) + inner(s, divergence(f)));
    CHECK(defect <= g->spacing() * g->spacing() * norm(s) * norm(f));
  }
}

TEST_CASE("poisson reproduces the bump at second order") {
  const double r = 0.9;
  const auto psi = ScalarFunction::bump({0.0, 0.0}, r, 3);
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    const GridPtr g = make_grid(Domain{}, n);
    const ScalarField rhs = ScalarField::sample(g, [&](const Vec2& x) { return bump3_laplacian(x, r); });
    const ScalarField sol = poisson_dirichlet(rhs);
    const ScalarField exact = ScalarField::sample(g, psi.value);
    const double e = norm(sol - exact) / norm(exact);
    if (prev > 0.0) CHECK(order(prev, e) >= 1.8);
    prev = e;
  }
  CHECK(prev <= 1e-3);
}

TEST_CASE("poisson with zero data") {
  const GridPtr g = make_grid(Domain{}, 16);
  const ScalarField s = poisson_dirichlet(ScalarField(g));
  for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("poisson point source matches a dense solve") {
  const GridPtr g = make_grid(Domain{}, 8);
  const auto& nodes = g->interior_nodes();
  const Eigen::Index n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  const double ih2 = 1.0 / (g->spacing() * g->spacing());
  for (Eigen::Index k = 0; k < n; ++k) {
    const int i = g->col(nodes[k]), j = g->row(nodes[k]);
    lap(k, k) = -4.0 * ih2;
    for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
      if (g->interior(i + di, j + dj)) lap(k, g->dof(g->index(i + di, j + dj))) = ih2;
  }
  const Eigen::Index src = n / 2;
  ScalarField rhs(g);
  rhs.values[nodes[src]] = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[src] = 1.0;
  const Eigen::VectorXd oracle = lap.fullPivLu().solve(b);
  const ScalarField sol = poisson_dirichlet(rhs);
  CHECK(sol.values[nodes[src]] < 0.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    CHECK(sol.values[nodes[k]] == doctest::Approx(oracle[k]).epsilon(1e-8));
    CHECK(sol.values[nodes[k]] <= 0.0);
  }
}

TEST_CASE("decomposition of a discrete potential field") {
  const GridPtr g = make_grid(Domain{}, 32);
  const ScalarField psi = ScalarField::sample(g, ScalarFunction::bump({0.1, 0.1}, 0.7, 2).value);
  const Decomposition d = solenoidal_decompose(dirichlet_gradient(psi));
  CHECK(norm(d.solenoidal) <= 1e-8 * norm(dirichlet_gradient(psi)));
  CHECK(norm(d.potential - psi) <= 1e-8 * norm(psi));
}

TEST_CASE("decomposition of a curl field keeps it") {
  double prev = 0.0;
  for (int n : {32, 64}) {
    const GridPtr g = make_grid(Domain{}, n);
    const auto eta = ScalarFunction::bump({0.0, 0.1}, 0.8, 3);
    const CovectorField f = CovectorField::sample(g, [&](const Vec2& x) { return rotate90(eta.gradient(x)); });
    const Decomposition d = solenoidal_decompose(f);
    const double e = norm(d.solenoidal - f) / norm(f);
    CHECK(e <= 1e-2);
    if (prev > 0.0) CHECK(order(prev, e) >= 1.5);
    prev = e;
  }
}

TEST_CASE("decomposition is an orthogonal projection") {
  const GridPtr g = make_grid(Domain{}, 64);
  const CovectorField f = random_pair(g, 7).f;
  const Decomposition d = solenoidal_decompose(f);
  const CovectorField dphi = dirichlet_gradient(d.potential);
  // Orthogonality against random H^1_0 potentials.
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const CovectorField dpsi = dirichlet_gradient(random_scalar(g, seed));
    CHECK(std::abs(inner(d.solenoidal, dpsi)) <= 1e-6 * norm(d.solenoidal) * norm(dpsi));
  }
  // Idempotence.
  const Decomposition again = solenoidal_decompose(d.solenoidal);
  CHECK(norm(again.potential) <= 1e-6 * norm(d.solenoidal));
  // Pythagoras.
  const double lhs = inner(f, f);
  const double rhs = inner(d.solenoidal, d.solenoidal) + inner(dphi, dphi);
  CHECK(std::abs(lhs - rhs) <= 1e-6 * lhs);
  // Discrete divergence of the solenoidal part vanishes.
  CHECK(norm(dirichlet_divergence(d.solenoidal)) <= 1e-8 * norm(dirichlet_divergence(f)));
}

TEST_CASE("decomposition of an already solenoidal field converges") {
  const GridPtr g = make_grid(Domain{}, 24);
  const CovectorField fs = solenoidal_decompose(random_pair(g, 8).f).solenoidal;
  const Decomposition d = solenoidal_decompose(fs);
  CHECK(norm(d.solenoidal - fs) <= 1e-10 * norm(fs));
}

TEST_CASE("poisson reports non-convergence") {
  const GridPtr g = make_grid(Domain{}, 32);
  PoissonConfig cfg;
  cfg.max_iter = 2;
  CHECK_THROWS_AS(poisson_dirichlet(random_scalar(g, 4), cfg), NoConvergence);
}

TEST_CASE("mask radius parametrizes the decomposition domain") {
  const Domain dom;
  const GridPtr inner_grid = make_grid(dom, 24);
  const GridPtr outer_grid = make_grid(dom, 24, dom.radius_m1);
  CHECK(outer_grid->n_interior() > inner_grid->n_interior());
  const Decomposition d = solenoidal_decompose(random_pair(outer_grid, 9).f);
  CHECK(norm(dirichlet_divergence(d.solenoidal)) <= 1e-8 * norm(d.solenoidal) / outer_grid->spacing());
}

}

#include "doctest.h"
#include "support.hpp"

#include "wdt/errors.hpp"
#include "wdt/reconstruct.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace wdt;
using wdt::test::random_pair;
using wdt::test::shared_fan;
using wdt::test::trace_for;

namespace {

const Domain kDom;

SpectralReport spectrum(const Weight& w, int n, int points, int dirs) {
  const GridPtr g = make_grid(kDom, n);
  const RaySystem sys(CurveGenerator::straight_line(), w, shared_fan(kDom, points, dirs), kDom, trace_for(*g));
  return spectral_analysis(assemble_dense(RayOperator(sys, g)));
}

}  // namespace

TEST_SUITE("reconstruct") {

TEST_CASE("solenoidal pair basis") {
  const GridPtr g = make_grid(kDom, 10);
  const Eigen::MatrixXd b = solenoidal_pair_basis(*g);
  const Eigen::Index m = static_cast<Eigen::Index>(g->n_interior());
  CHECK(b.rows() == 3 * m);
  CHECK((b.transpose() * b - Eigen::MatrixXd::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    const Pair p = Pair::unpack(g, b.col(c));
    CHECK(norm(dirichlet_divergence(p.f)) <= 1e-9 / g->spacing());
  }
  // Dimension: the phi block plus the complement of range(D).
  CHECK(b.cols() > m);
  CHECK(b.cols() < 3 * m);
}

TEST_CASE("spectral report invariants") {
  const SpectralReport r = spectrum(Weight::attenuated(1.0), 8, 24, 12);
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
    CHECK(r.singular_values[i] >= 0.0);
    if (i > 0) CHECK(r.singular_values[i] <= r.singular_values[i - 1]);
  }
  int below = 0;
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i)
    if (r.singular_values[i] <= r.tau_rank * r.sigma_max) ++below;
  CHECK(r.null_dim == below);
  CHECK(r.null_basis.cols() == r.null_dim);
  CHECK(r.sigma_min_solenoidal >= r.sigma_min_raw);
  CHECK(r.sigma_max == r.singular_values[0]);
}

TEST_CASE("constant weight has the scalar block as kernel") {
  const GridPtr g = make_grid(kDom, 12);
  const SpectralReport r = spectrum(Weight::constant(1.0), 12, 32, 12);
  CHECK(r.null_dim >= static_cast<int>(g->n_interior()));
  CHECK_THROWS_AS(stability_constant(r), Degenerate);
  const Eigen::MatrixXd family = scalar_family(*g);
  for (Eigen::Index c = 0; c < r.null_basis.cols(); ++c)
    CHECK(subspace_overlap(r.null_basis.col(c), family) >= 0.99);
}

TEST_CASE("attenuated weight has a finite stability constant") {
  const SpectralReport r = spectrum(Weight::attenuated(1.0), 10, 48, 24);
  const double c = stability_constant(r);
  CHECK(std::isfinite(c));
  CHECK(c == doctest::Approx(1.0 / r.sigma_min_solenoidal));
  CHECK(r.solenoidal_null_dim == 0);
}

TEST_CASE("projection onto solenoidal pairs") {
  const GridPtr g = make_grid(kDom, 24);
  const Pair p = random_pair(g, 3);
  const Pair once = project_solenoidal(p);
  const Pair twice = project_solenoidal(once);
  CHECK(norm(twice.f - once.f) <= 1e-10 * norm(once.f));
  CHECK(norm(once.phi - p.phi) == 0.0);
}

TEST_CASE("solenoidal representative of a discrete potential") {
  const GridPtr g = make_grid(kDom, 16);
  // chi is fixed only up to the kernel of the discrete gradient.
  const auto psi = ScalarFunction::bump({0.0, 0.0}, 0.8, 3);
  const ScalarField spsi = ScalarField::sample(g, psi.value);
  const Pair p(dirichlet_gradient(spsi), ScalarField(g));
  const Pair rep = solenoidal_representative(p);
  CHECK(norm(rep.f) <= 1e-8 * norm(p.f));
  CHECK(norm(dirichlet_gradient(rep.phi) - p.f) <= 1e-8 * norm(p.f));
}

TEST_CASE("kernel families and overlap") {
  const GridPtr g = make_grid(kDom, 8);
  const Eigen::MatrixXd pot = potential_family(*g);
  const Eigen::MatrixXd sca = scalar_family(*g);
  const Eigen::Index m = static_cast<Eigen::Index>(g->n_interior());
  CHECK(pot.cols() == m);
  CHECK(sca.cols() == m);
  CHECK(subspace_overlap(pot.col(2) + 0.5 * pot.col(3), pot) == doctest::Approx(1.0));
  CHECK(subspace_overlap(sca.col(0), pot) <= 1e-12);
  const CovectorRule h = [](const Vec2& x) { return Vec2(0.5 + 0.25 * x.y(), -0.3); };
  const Eigen::MatrixXd con = covector_kernel_family(*g, h);
  const Eigen::MatrixXd sol = solenoidal_kernel_family(*g, h);
  CHECK(con.cols() == m);
  CHECK(sol.cols() == m);
  for (Eigen::Index c = 0; c < sol.cols(); ++c) {
    const Pair p = Pair::unpack(g, sol.col(c));
    CHECK(norm(dirichlet_divergence(p.f)) <= 1e-8 * (1.0 + norm(p.f)) / g->spacing());
  }
  CHECK_THROWS_AS(subspace_overlap(Eigen::VectorXd::Zero(3 * m), pot), std::invalid_argument);
}

TEST_CASE("reconstruction recovers a consistent solenoidal pair") {
  const GridPtr g = make_grid(kDom, 16);
  const RaySystem sys(CurveGenerator::straight_line(), Weight::attenuated(1.0), shared_fan(kDom, 96, 48), kDom, trace_for(*g));
  const RayOperator op(sys, g);
  const auto a = ScalarFunction::random_smooth(1, {0.0, 0.0}, 0.9);
  const auto b = ScalarFunction::random_smooth(2, {0.0, 0.0}, 0.9);
  const auto c = ScalarFunction::random_smooth(3, {0.0, 0.0}, 0.9);
  const Pair truth(CovectorField::sample(g, [&](const Vec2& x) { return Vec2(a(x), b(x)); }),
                   ScalarField::sample(g, c.value));
  ReconstructionConfig cfg;
  cfg.tol = 1e-8;
  cfg.max_iter = 2000;
  const ReconstructionResult r = reconstruct(pair_forward(solenoidal_representative(truth), op), op, cfg, &truth);
  CHECK(r.residual <= cfg.tol);
  REQUIRE(r.error_f);
  CHECK(*r.error_f <= 1e-3);
  CHECK(*r.error_phi <= 1e-3);
  for (std::size_t k = 1; k < r.data_residuals.size(); ++k)
    CHECK(r.data_residuals[k] <= r.data_residuals[k - 1] * (1.0 + 1e-12));
  CHECK(norm(project_solenoidal(r.recovered).f - r.recovered.f) <= 1e-10 * norm(r.recovered.f));
}

TEST_CASE("potential data lands in the scalar part") {
  const GridPtr g = make_grid(kDom, 24);
  const RaySystem sys(CurveGenerator::straight_line(), Weight::attenuated(1.0), shared_fan(kDom, 128, 96), kDom, trace_for(*g));
  const RayOperator op(sys, g);
  const auto psi = ScalarFunction::bump({0.1, -0.1}, 0.8, 3);
  const Pair p(CovectorField::sample(g, psi.gradient), ScalarField(g));
  ReconstructionConfig cfg;
  cfg.tol = 1e-5;
  cfg.max_iter = 1000;
  const ReconstructionResult r = reconstruct(pair_forward(p, op), op, cfg);
  const ScalarField spsi = ScalarField::sample(g, psi.value);
  CHECK(norm(r.recovered.f) <= 5e-2 * norm(p.f));
  CHECK(norm(r.recovered.phi - spsi) <= 5e-2 * norm(spsi));
}

TEST_CASE("zero data gives a zero pair") {
  const GridPtr g = make_grid(kDom, 12);
  const auto fan = shared_fan(kDom, 32, 12);
  const RaySystem sys(CurveGenerator::straight_line(), Weight::attenuated(1.0), fan, kDom, trace_for(*g));
  const ReconstructionResult r = reconstruct(Sinogram(fan, std::vector<double>(fan->size(), 0.0)), RayOperator(sys, g));
  CHECK(r.recovered.pack().norm() == 0.0);
  CHECK(r.iterations == 0);
}

TEST_CASE("reconstruction reports non-convergence and bad input") {
  const GridPtr g = make_grid(kDom, 12);
  const auto fan = shared_fan(kDom, 32, 12);
  const RaySystem sys(CurveGenerator::straight_line(), Weight::attenuated(1.0), fan, kDom, trace_for(*g));
  const RayOperator op(sys, g);
  ReconstructionConfig cfg;
  cfg.tol = 1e-14;
  cfg.max_iter = 2;
  CHECK_THROWS_AS(reconstruct(pair_forward(random_pair(g, 1), op), op, cfg), NoConvergence);
  CHECK_THROWS_AS(reconstruct(Sinogram(fan, std::vector<double>(3, 0.0)), op), std::invalid_argument);
}

TEST_CASE("perturbation study basics") {
  const GridPtr g = make_grid(kDom, 10);
  const auto fan = shared_fan(kDom, 24, 10);
  const auto q = ScalarFunction::gaussian(1.0, {0.2, -0.1}, 0.5);
  PerturbationFamily fam{"attenuation",
                         [q](double d) {
                           return System{CurveGenerator::straight_line(),
                                         Weight::attenuated([q, d](const Vec2& x, const Vec2& xi) {
                                           return (1.0 + d * q(x)) * xi.norm();
                                         })};
                         },
                         q.value};
  PerturbationConfig cfg;
  cfg.power_iterations = 100;
  const PerturbationReport r = perturbation_study(fam, {1e-2, 1e-3}, g, fan, trace_for(*g), cfg);
  REQUIRE(r.rows.size() == 2);
  const double ratio = r.rows[0].ratio / r.rows[1].ratio;
  CHECK(ratio >= 0.5);
  CHECK(ratio <= 2.0);
  CHECK(r.direction_norms[0] == doctest::Approx(1.0).epsilon(1e-2));

  // A family whose perturbation does nothing.
  PerturbationFamily same{"identity", [](double) { return System{CurveGenerator::straight_line(), Weight::attenuated(1.0)}; }, q.value};
  const PerturbationReport z = perturbation_study(same, {1e-2}, g, fan, trace_for(*g), cfg);
  CHECK(z.rows[0].operator_difference <= 1e-12);
  CHECK(z.rows[0].endpoint_deviation == 0.0);

  CHECK_THROWS_AS(perturbation_study(fam, {1e-3, 1e-2}, g, fan), std::invalid_argument);
  CHECK_THROWS_AS(perturbation_study(fam, {0.0}, g, fan), std::invalid_argument);
}

TEST_CASE("derivative sup norms of a cubic") {
  const auto norms = derivative_sup_norms([](const Vec2& x) { return x.x() * x.x() * x.x() / 6.0; }, kDom);
  const double r = kDom.radius_m1;
  CHECK(norms[0] == doctest::Approx(r * r * r / 6.0).epsilon(2e-2));
  CHECK(norms[1] == doctest::Approx(r * r / 2.0).epsilon(2e-2));
  CHECK(norms[2] == doctest::Approx(r).epsilon(2e-2));
  CHECK(norms[3] == doctest::Approx(1.0).epsilon(1e-3));
}

}

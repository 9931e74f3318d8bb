#include "commands.hpp"

#include "wdt/errors.hpp"
#include "wdt/reconstruct.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <random>

namespace wdt::cli {

namespace {

struct Check {
  const char* name;
  std::function<bool()> run;
};

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace

int run_selftest(bool verbose) {
  const Domain dom;
  const GridPtr grid = make_grid(dom, 12);
  const auto fan = std::make_shared<const Fan>(make_fan(dom, 32, 12));
  TraceConfig tc;
  tc.step = 0.5 * grid->spacing();
  const CurveGenerator line = CurveGenerator::straight_line();

  const std::vector<Check> checks = {
      {"straight trace crosses the diameter",
       [&] {
         const Curve c = trace_curve(line, dom, {-1.25, 0.0}, {1.0, 0.0}, tc);
         return std::abs(c.exit_time - 2.5) < 1e-9 && std::abs(c.states.back().x.x() - 1.25) < 1e-9;
       }},
      {"tangent entry gives a two-state curve",
       [&] {
         const Curve c = trace_curve(line, dom, {1.25, 0.0}, {0.0, 1.0}, tc);
         return c.size() == 2 && c.exit_time == 0.0;
       }},
      {"fan 4x2 has 8 positive entries",
       [&] {
         const Fan f = make_fan(dom, 4, 2);
         bool ok = f.size() == 8;
         for (const auto& e : f.entries) ok = ok && e.mu > 0.0;
         return ok;
       }},
      {"zero attenuation gives unit weight",
       [&] {
         const Curve c = trace_curve(line, dom, fan->entries[5].x, fan->entries[5].theta, tc);
         for (double v : weight_along(Weight::attenuated(0.0), c, dom))
           if (v != 1.0) return false;
         return true;
       }},
      {"constant weight has zero log-derivative and alpha",
       [&] {
         const Curve c = trace_curve(line, dom, fan->entries[7].x, fan->entries[7].theta, tc);
         const Weight w = Weight::constant(2.0);
         for (double v : flow_log_derivative(w, c, dom))
           if (std::abs(v) > 1e-12) return false;
         for (double v : alpha_of(w, c, dom))
           if (std::abs(v) > 1e-12) return false;
         return true;
       }},
      {"gradient of x1 is (1, 0)",
       [&] {
         const CovectorField g =
             gradient(ScalarField::sample(grid, [](const Vec2& x) { return x.x(); }, false));
         for (std::size_t idx : grid->interior_nodes())
           if (std::abs(g.f1[idx] - 1.0) > 1e-12 || std::abs(g.f2[idx]) > 1e-12) return false;
         return true;
       }},
      {"divergence of (x1, x2) is 2",
       [&] {
         const ScalarField d =
             divergence(CovectorField::sample(grid, [](const Vec2& x) { return x; }, false));
         for (std::size_t idx : grid->interior_nodes())
           if (std::abs(d.values[idx] - 2.0) > 1e-10) return false;
         return true;
       }},
      {"poisson with zero data is zero",
       [&] {
         const ScalarField s = poisson_dirichlet(ScalarField(grid));
         for (double v : s.values)
           if (v != 0.0) return false;
         return true;
       }},
      {"zero field gives a zero sinogram",
       [&] {
         const RaySystem sys(line, Weight::constant(1.0), fan, dom, tc);
         for (double v : forward(CovectorField(grid), sys).values)
           if (v != 0.0) return false;
         return true;
       }},
      {"phi is invisible without alpha",
       [&] {
         const RaySystem sys(line, Weight::constant(1.0), fan, dom, tc);
         Pair p(grid);
         p.phi = ScalarField::sample(grid, [](const Vec2& x) { return 1.0 + x.x(); });
         for (double v : pair_forward(p, sys).values)
           if (v != 0.0) return false;
         return true;
       }},
      {"adjoint of a zero sinogram is zero",
       [&] {
         const RaySystem sys(line, Weight::attenuated(1.0), fan, dom, tc);
         const RayOperator op(sys, grid);
         const Pair p = adjoint(Sinogram(fan, std::vector<double>(fan->size(), 0.0)), op);
         return p.pack().norm() == 0.0;
       }},
      {"normal operator is symmetric and nonnegative",
       [&] {
         const RaySystem sys(line, Weight::attenuated(1.0), fan, dom, tc);
         const RayOperator op(sys, grid);
         const Eigen::VectorXd p = random_vector(op.cols(), 1), q = random_vector(op.cols(), 2);
         const double a = op.normal(p).dot(q), b = p.dot(op.normal(q));
         return std::abs(a - b) <= 1e-10 * std::abs(a) + 1e-14 && p.dot(op.normal(p)) >= 0.0;
       }},
      {"dense and sparse applications agree",
       [&] {
         const RaySystem sys(line, Weight::attenuated(1.0), fan, dom, tc);
         const RayOperator op(sys, grid);
         const DenseOperator d = assemble_dense(op);
         const Eigen::VectorXd p = random_vector(op.cols(), 3);
         return (d.matrix * p - op.apply(p)).norm() <= 1e-12 * op.apply(p).norm();
       }},
      {"symbol scales by 4 when w doubles",
       [&] {
         const Weight w = Weight::attenuated(1.0);
         const SymbolReport a = principal_symbol({0.1, 0.2}, {1.0, 0.5}, w, line, dom, tc);
         const SymbolReport b =
             principal_symbol({0.1, 0.2}, {1.0, 0.5}, w.scaled(2.0), line, dom, tc);
         return (b.form - 4.0 * a.form).norm() <= 1e-12 * a.form.norm();
       }},
      {"constant weight symbol is degenerate in phi",
       [&] {
         const SymbolReport s =
             principal_symbol({0.1, 0.2}, {1.0, 0.5}, Weight::constant(1.0), line, dom, tc);
         return std::abs(s.restricted_min_eigenvalue) <= 1e-14;
       }},
      {"constant weight fails the elliptic check",
       [&] {
         EllipticCheckConfig ec;
         ec.n_x = 8;
         ec.n_theta = 8;
         return !elliptic_margin(Weight::constant(1.0), line, dom, ec, tc).pass;
       }},
      {"constant weight has a null space",
       [&] {
         const RaySystem sys(line, Weight::constant(1.0), fan, dom, tc);
         const SpectralReport r = spectral_analysis(assemble_dense(RayOperator(sys, grid)));
         try {
           stability_constant(r);
           return false;
         } catch (const Degenerate&) {
           return r.null_dim > 0;
         }
       }},
      {"identical systems have identical normal operators",
       [&] {
         const RayOperator a(RaySystem(line, Weight::attenuated(1.0), fan, dom, tc), grid);
         const RayOperator b(RaySystem(line, Weight::attenuated(1.0), fan, dom, tc), grid);
         const Eigen::VectorXd p = random_vector(a.cols(), 4);
         return (a.normal(p) - b.normal(p)).norm() <= 1e-12 * a.normal(p).norm();
       }},
  };

  int failures = 0;
  for (const Check& c : checks) {
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      if (verbose) std::cout << "  error: " << e.what() << '\n';
    }
    if (!ok) ++failures;
    if (verbose || !ok) std::cout << (ok ? "PASS " : "FAIL ") << c.name << '\n';
  }
  return failures;
}

}  // namespace wdt::cli

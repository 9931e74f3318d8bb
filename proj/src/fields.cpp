#include "wdt/fields.hpp"

#include "wdt/errors.hpp"
#include "wdt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wdt {

Grid::Grid(const Domain& dom, int n, double mask_radius)
    : dom_(dom), n_(n), h_(0.0), mask_radius_(mask_radius > 0.0 ? mask_radius : dom.radius_m) {
  dom.validate();
  if (n < 2) throw std::invalid_argument("grid needs at least 2 cells per side");
  if (mask_radius_ > dom.radius_m1) throw std::invalid_argument("mask radius exceeds M1");
  h_ = 2.0 * dom.radius_m1 / n;
  origin_ = dom.center - Vec2(dom.radius_m1, dom.radius_m1);
  kind_.resize(size());
  dof_.assign(size(), -1);
  for (std::size_t idx = 0; idx < size(); ++idx) {
    const double r = (node(idx) - dom.center).norm();
    if (r < mask_radius_ - 0.5 * h_) {
      kind_[idx] = NodeKind::Interior;
      dof_[idx] = static_cast<int>(interior_.size());
      interior_.push_back(idx);
    } else if (r < mask_radius_ + 0.5 * h_) {
      kind_[idx] = NodeKind::Band;
    } else {
      kind_[idx] = NodeKind::Exterior;
    }
  }
}

Grid::Stencil Grid::bilinear(const Vec2& x) const {
  const double u = std::clamp((x.x() - origin_.x()) / h_, 0.0, static_cast<double>(n_));
  const double v = std::clamp((x.y() - origin_.y()) / h_, 0.0, static_cast<double>(n_));
  const int i = std::min(static_cast<int>(u), n_ - 1);
  const int j = std::min(static_cast<int>(v), n_ - 1);
  const double fx = u - i;
  const double fy = v - j;
  return {{index(i, j), index(i + 1, j), index(i, j + 1), index(i + 1, j + 1)},
          {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy}};
}

GridPtr make_grid(const Domain& dom, int n, double mask_radius) {
  return std::make_shared<const Grid>(dom, n, mask_radius);
}

ScalarField::ScalarField(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}

double ScalarField::interpolate(const Vec2& x) const {
  const auto st = grid->bilinear(x);
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += st.weights[k] * values[st.nodes[k]];
  return s;
}

ScalarField ScalarField::sample(GridPtr g, const std::function<double(const Vec2&)>& fn,
                                bool interior_only) {
  ScalarField s(std::move(g));
  for (std::size_t idx = 0; idx < s.grid->size(); ++idx)
    if (!interior_only || s.grid->kind(idx) == NodeKind::Interior) s.values[idx] = fn(s.grid->node(idx));
  return s;
}

CovectorField::CovectorField(GridPtr g)
    : grid(std::move(g)), f1(grid->size(), 0.0), f2(grid->size(), 0.0) {}

Vec2 CovectorField::interpolate(const Vec2& x) const {
  const auto st = grid->bilinear(x);
  Vec2 s = Vec2::Zero();
  for (int k = 0; k < 4; ++k) {
    s.x() += st.weights[k] * f1[st.nodes[k]];
    s.y() += st.weights[k] * f2[st.nodes[k]];
  }
  return s;
}

CovectorField CovectorField::sample(GridPtr g, const std::function<Vec2(const Vec2&)>& fn,
                                    bool interior_only) {
  CovectorField f(std::move(g));
  for (std::size_t idx = 0; idx < f.grid->size(); ++idx) {
    if (interior_only && f.grid->kind(idx) != NodeKind::Interior) continue;
    const Vec2 v = fn(f.grid->node(idx));
    f.f1[idx] = v.x();
    f.f2[idx] = v.y();
  }
  return f;
}

Pair::Pair(CovectorField f_, ScalarField phi_) : f(std::move(f_)), phi(std::move(phi_)) {
  if (f.grid != phi.grid) throw std::invalid_argument("pair components must share a grid");
}

Eigen::VectorXd Pair::pack() const {
  const auto& nodes = grid()->interior_nodes();
  const Eigen::Index n = static_cast<Eigen::Index>(nodes.size());
  Eigen::VectorXd v(3 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    v[k] = f.f1[nodes[k]];
    v[n + k] = f.f2[nodes[k]];
    v[2 * n + k] = phi.values[nodes[k]];
  }
  return v;
}

Pair Pair::unpack(GridPtr g, const Eigen::VectorXd& dofs) {
  const auto& nodes = g->interior_nodes();
  const Eigen::Index n = static_cast<Eigen::Index>(nodes.size());
  if (dofs.size() != 3 * n) throw std::invalid_argument("pair dof vector has the wrong size");
  Pair p(g);
  for (Eigen::Index k = 0; k < n; ++k) {
    p.f.f1[nodes[k]] = dofs[k];
    p.f.f2[nodes[k]] = dofs[n + k];
    p.phi.values[nodes[k]] = dofs[2 * n + k];
  }
  return p;
}

void restrict_to_interior(ScalarField& s) {
  for (std::size_t idx = 0; idx < s.grid->size(); ++idx)
    if (s.grid->kind(idx) != NodeKind::Interior) s.values[idx] = 0.0;
}

void restrict_to_interior(CovectorField& f) {
  for (std::size_t idx = 0; idx < f.grid->size(); ++idx)
    if (f.grid->kind(idx) != NodeKind::Interior) f.f1[idx] = f.f2[idx] = 0.0;
}

double inner(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s * a.grid->cell_area();
}

double inner(const CovectorField& a, const CovectorField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.f1.size(); ++i) s += a.f1[i] * b.f1[i] + a.f2[i] * b.f2[i];
  return s * a.grid->cell_area();
}

double inner(const Pair& a, const Pair& b) { return inner(a.f, b.f) + inner(a.phi, b.phi); }
double norm(const ScalarField& a) { return std::sqrt(inner(a, a)); }
double norm(const CovectorField& a) { return std::sqrt(inner(a, a)); }
double norm(const Pair& a) { return std::sqrt(inner(a, a)); }

namespace {

template <typename Op>
CovectorField combine(const CovectorField& a, const CovectorField& b, Op op) {
  CovectorField out(a.grid);
  for (std::size_t i = 0; i < a.f1.size(); ++i) {
    out.f1[i] = op(a.f1[i], b.f1[i]);
    out.f2[i] = op(a.f2[i], b.f2[i]);
  }
  return out;
}

template <typename Op>
ScalarField combine(const ScalarField& a, const ScalarField& b, Op op) {
  ScalarField out(a.grid);
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = op(a.values[i], b.values[i]);
  return out;
}

}  // namespace

CovectorField operator+(const CovectorField& a, const CovectorField& b) {
  return combine(a, b, [](double x, double y) { return x + y; });
}
CovectorField operator-(const CovectorField& a, const CovectorField& b) {
  return combine(a, b, [](double x, double y) { return x - y; });
}
CovectorField operator*(double s, const CovectorField& a) {
  return combine(a, a, [s](double x, double) { return s * x; });
}
ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return combine(a, b, [](double x, double y) { return x + y; });
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return combine(a, b, [](double x, double y) { return x - y; });
}
ScalarField operator*(double s, const ScalarField& a) {
  return combine(a, a, [s](double x, double) { return s * x; });
}

namespace {

// Derivative of nodal values g along axis (di, dj) at interior node (i, j),
// using only interior nodes.
double one_sided_derivative(const Grid& grid, const std::vector<double>& g, int i, int j, int di,
                            int dj) {
  const double h = grid.spacing();
  auto at = [&](int k) { return g[grid.index(i + k * di, j + k * dj)]; };
  auto ok = [&](int k) { return grid.interior(i + k * di, j + k * dj); };
  if (ok(1) && ok(-1)) return (at(1) - at(-1)) / (2 * h);
  if (ok(1) && ok(2)) return (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
  if (ok(-1) && ok(-2)) return (3 * at(0) - 4 * at(-1) + at(-2)) / (2 * h);
  if (ok(1)) return (at(1) - at(0)) / h;
  if (ok(-1)) return (at(0) - at(-1)) / h;
  return 0.0;
}

double zero_extended_derivative(const Grid& grid, const std::vector<double>& g, int i, int j,
                                int di, int dj) {
  auto at = [&](int k) {
    return grid.interior(i + k * di, j + k * dj) ? g[grid.index(i + k * di, j + k * dj)] : 0.0;
  };
  return (at(1) - at(-1)) / (2 * grid.spacing());
}

}  // namespace

ScalarField divergence(const CovectorField& f) {
  const Grid& g = *f.grid;
  ScalarField out(f.grid);
  for (std::size_t idx : g.interior_nodes()) {
    const int i = g.col(idx), j = g.row(idx);
    out.values[idx] =
        one_sided_derivative(g, f.f1, i, j, 1, 0) + one_sided_derivative(g, f.f2, i, j, 0, 1);
  }
  return out;
}

CovectorField gradient(const ScalarField& phi) {
  const Grid& g = *phi.grid;
  CovectorField out(phi.grid);
  for (std::size_t idx : g.interior_nodes()) {
    const int i = g.col(idx), j = g.row(idx);
    out.f1[idx] = one_sided_derivative(g, phi.values, i, j, 1, 0);
    out.f2[idx] = one_sided_derivative(g, phi.values, i, j, 0, 1);
  }
  return out;
}

CovectorField dirichlet_gradient(const ScalarField& phi) {
  const Grid& g = *phi.grid;
  CovectorField out(phi.grid);
  for (std::size_t idx : g.interior_nodes()) {
    const int i = g.col(idx), j = g.row(idx);
    out.f1[idx] = zero_extended_derivative(g, phi.values, i, j, 1, 0);
    out.f2[idx] = zero_extended_derivative(g, phi.values, i, j, 0, 1);
  }
  return out;
}

ScalarField dirichlet_divergence(const CovectorField& f) {
  const Grid& g = *f.grid;
  ScalarField out(f.grid);
  for (std::size_t idx : g.interior_nodes()) {
    const int i = g.col(idx), j = g.row(idx);
    out.values[idx] = zero_extended_derivative(g, f.f1, i, j, 1, 0) +
                      zero_extended_derivative(g, f.f2, i, j, 0, 1);
  }
  return out;
}

ScalarField poisson_dirichlet(const ScalarField& rhs, const PoissonConfig& cfg,
                              PoissonStats* stats) {
  const GridPtr& gp = rhs.grid;
  const Grid& g = *gp;
  const auto& nodes = g.interior_nodes();
  const Eigen::Index n = static_cast<Eigen::Index>(nodes.size());
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());

  // Negative Laplacian, symmetric positive definite on interior dofs.
  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    if (cfg.stencil == LaplaceStencil::FivePoint) {
      auto val = [&](int i, int j) { return g.interior(i, j) ? x[g.dof(g.index(i, j))] : 0.0; };
      for (Eigen::Index k = 0; k < n; ++k) {
        const int i = g.col(nodes[k]), j = g.row(nodes[k]);
        y[k] = (4.0 * x[k] - val(i + 1, j) - val(i - 1, j) - val(i, j + 1) - val(i, j - 1)) * inv_h2;
      }
    } else {
      ScalarField s(gp);
      for (Eigen::Index k = 0; k < n; ++k) s.values[nodes[k]] = x[k];
      const ScalarField lap = dirichlet_divergence(dirichlet_gradient(s));
      for (Eigen::Index k = 0; k < n; ++k) y[k] = -lap.values[nodes[k]];
    }
  };

  Eigen::VectorXd b(n);
  for (Eigen::Index k = 0; k < n; ++k) b[k] = -rhs.values[nodes[k]];
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const CgResult res = conjugate_gradient(apply, b, x, cfg.rel_tol, cfg.max_iter, cfg.abs_tol);
  if (stats) *stats = {res.iterations, res.relative_residual};
  if (!res.converged)
    throw NoConvergence("Poisson solve did not reach the requested residual");
  ScalarField phi(gp);
  for (Eigen::Index k = 0; k < n; ++k) phi.values[nodes[k]] = x[k];
  return phi;
}

Decomposition solenoidal_decompose(const CovectorField& f, double rel_tol) {
  CovectorField fm = f;
  restrict_to_interior(fm);
  PoissonConfig cfg;
  cfg.stencil = LaplaceStencil::GradDiv;
  cfg.rel_tol = rel_tol;
  cfg.abs_tol = rel_tol * norm(fm) / (f.grid->spacing() * f.grid->spacing());
  ScalarField phi = poisson_dirichlet(dirichlet_divergence(fm), cfg);
  CovectorField fs = fm - dirichlet_gradient(phi);
  return {std::move(fs), std::move(phi)};
}

}  // namespace wdt

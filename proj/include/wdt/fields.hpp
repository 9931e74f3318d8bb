#pragma once

#include "wdt/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace wdt {

enum class NodeKind : std::uint8_t { Interior, Band, Exterior };

/// Uniform node grid over the bounding square of M1. Nodes strictly inside
/// the mask disk (by more than half a spacing) are the interior degrees of
/// freedom; the band around the mask circle carries Dirichlet zeros.
class Grid {
 public:
  /// n cells per side; mask_radius <= 0 selects radius_M.
  Grid(const Domain& dom, int n, double mask_radius = 0.0);

  const Domain& domain() const { return dom_; }
  int cells() const { return n_; }
  int side() const { return n_ + 1; }
  std::size_t size() const { return static_cast<std::size_t>(side()) * side(); }
  double spacing() const { return h_; }
  double cell_area() const { return h_ * h_; }
  double mask_radius() const { return mask_radius_; }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * side() + i; }
  int col(std::size_t idx) const { return static_cast<int>(idx % side()); }
  int row(std::size_t idx) const { return static_cast<int>(idx / side()); }
  Vec2 node(int i, int j) const { return origin_ + h_ * Vec2(i, j); }
  Vec2 node(std::size_t idx) const { return node(col(idx), row(idx)); }
  NodeKind kind(std::size_t idx) const { return kind_[idx]; }
  bool interior(int i, int j) const {
    return i >= 0 && j >= 0 && i < side() && j < side() && kind_[index(i, j)] == NodeKind::Interior;
  }

  /// Interior nodes in row-major order; position in this list is the dof id.
  const std::vector<std::size_t>& interior_nodes() const { return interior_; }
  std::size_t n_interior() const { return interior_.size(); }
  /// Dof id of a node, or -1 if it is not interior.
  int dof(std::size_t idx) const { return dof_[idx]; }

  struct Stencil {
    std::array<std::size_t, 4> nodes;
    std::array<double, 4> weights;
  };
  /// Bilinear interpolation stencil; points are clamped to the grid square.
  Stencil bilinear(const Vec2& x) const;

 private:
  Domain dom_;
  int n_;
  double h_;
  double mask_radius_;
  Vec2 origin_;
  std::vector<NodeKind> kind_;
  std::vector<std::size_t> interior_;
  std::vector<int> dof_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(const Domain& dom, int n, double mask_radius = 0.0);

struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  explicit ScalarField(GridPtr g);
  double interpolate(const Vec2& x) const;
  /// Samples fn at every node (support = all) or at interior nodes only.
  static ScalarField sample(GridPtr g, const std::function<double(const Vec2&)>& fn,
                            bool interior_only = true);
};

struct CovectorField {
  GridPtr grid;
  std::vector<double> f1;
  std::vector<double> f2;

  explicit CovectorField(GridPtr g);
  Vec2 interpolate(const Vec2& x) const;
  static CovectorField sample(GridPtr g, const std::function<Vec2(const Vec2&)>& fn,
                              bool interior_only = true);
};

/// The pair [f, phi]. Packs to a dof vector ordered f1-block, f2-block,
/// phi-block over interior nodes.
struct Pair {
  CovectorField f;
  ScalarField phi;

  explicit Pair(GridPtr g) : f(g), phi(g) {}
  Pair(CovectorField f_, ScalarField phi_);

  const GridPtr& grid() const { return f.grid; }
  Eigen::VectorXd pack() const;
  static Pair unpack(GridPtr g, const Eigen::VectorXd& dofs);
};

/// Zeroes all values outside the interior nodes.
void restrict_to_interior(ScalarField& s);
void restrict_to_interior(CovectorField& f);

// L2 inner products and norms with the cell area as node weight.
double inner(const ScalarField& a, const ScalarField& b);
double inner(const CovectorField& a, const CovectorField& b);
double inner(const Pair& a, const Pair& b);
double norm(const ScalarField& a);
double norm(const CovectorField& a);
double norm(const Pair& a);

CovectorField operator+(const CovectorField& a, const CovectorField& b);
CovectorField operator-(const CovectorField& a, const CovectorField& b);
CovectorField operator*(double s, const CovectorField& a);
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);

/// delta f = d1 f1 + d2 f2 at interior nodes, centered where both neighbours
/// are interior and one-sided (second order when possible) at the band.
ScalarField divergence(const CovectorField& f);
/// d phi at interior nodes with the same stencil rule as divergence.
CovectorField gradient(const ScalarField& phi);

/// Centered gradient of phi extended by zero outside the interior (phi in
/// discrete H^1_0). Exactly minus the transpose of dirichlet_divergence.
CovectorField dirichlet_gradient(const ScalarField& phi);
/// Centered divergence of f extended by zero outside the interior.
ScalarField dirichlet_divergence(const CovectorField& f);

enum class LaplaceStencil {
  /// Classical 5-point Laplacian.
  FivePoint,
  /// dirichlet_divergence composed with dirichlet_gradient; the stencil that
  /// makes the solenoidal split an exact orthogonal projection.
  GradDiv,
};

struct PoissonConfig {
  double rel_tol = 1e-10;
  /// Residual floor in absolute terms; 0 disables it.
  double abs_tol = 0.0;
  int max_iter = 20000;
  LaplaceStencil stencil = LaplaceStencil::FivePoint;
};

struct PoissonStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves Laplace(phi) = rhs at interior nodes with phi = 0 on the band and
/// outside, by conjugate gradients. Throws NoConvergence.
ScalarField poisson_dirichlet(const ScalarField& rhs, const PoissonConfig& cfg = {},
                              PoissonStats* stats = nullptr);

struct Decomposition {
  CovectorField solenoidal;
  ScalarField potential;
};

/// f = f^s + d phi with delta f^s = 0 and phi = 0 on the boundary of the mask
/// disk, using the GradDiv stencil.
Decomposition solenoidal_decompose(const CovectorField& f, double rel_tol = 1e-12);

}  // namespace wdt

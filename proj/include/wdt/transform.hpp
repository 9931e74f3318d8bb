#pragma once

#include "wdt/fields.hpp"
#include "wdt/geometry.hpp"
#include "wdt/weights.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace wdt {

using FanPtr = std::shared_ptr<const Fan>;

/// Transform values indexed by fan entry.
struct Sinogram {
  FanPtr fan;
  std::vector<double> values;
  /// Free-form record of the generator, weight and grid that produced it.
  std::string provenance;

  Sinogram() = default;
  Sinogram(FanPtr f, std::vector<double> v, std::string prov = {})
      : fan(std::move(f)), values(std::move(v)), provenance(std::move(prov)) {}
};

/// <a, b>_mu = sum_e mu_e a_e b_e
double inner_mu(const Sinogram& a, const Sinogram& b);
double norm_mu(const Sinogram& a);

/// A fan curve together with per-state weight, alpha and trapezoid weights.
struct TracedRay {
  Curve curve;
  std::vector<double> weight;
  std::vector<double> alpha;
  std::vector<double> quadrature;
  /// Curves shorter than two steps contribute nothing.
  bool active = false;
};

/// Every fan curve traced once for a (generator, weight) combination.
class RaySystem {
 public:
  RaySystem(const CurveGenerator& gen, const Weight& w, FanPtr fan, const Domain& dom,
            const TraceConfig& cfg = {}, int threads = 1);

  const Fan& fan() const { return *fan_; }
  const FanPtr& fan_ptr() const { return fan_; }
  const Domain& domain() const { return dom_; }
  std::size_t size() const { return rays_.size(); }
  const TracedRay& ray(std::size_t i) const { return rays_[i]; }
  const std::string& provenance() const { return provenance_; }
  int threads() const { return threads_; }

 private:
  FanPtr fan_;
  Domain dom_;
  std::vector<TracedRay> rays_;
  std::string provenance_;
  int threads_;
};

using CovectorSampler = std::function<Vec2(const Vec2&)>;

/// I_w f per fan curve: trapezoid rule for w f_j gamma'^j over the trace states.
Sinogram forward(const CovectorSampler& f, const RaySystem& sys);
/// Grid field version; f is interpolated bilinearly.
Sinogram forward(const CovectorField& f, const RaySystem& sys);
/// Convenience: traces the fan and applies forward.
Sinogram forward(const CovectorField& f, const Weight& w, const CurveGenerator& gen,
                 const Fan& fan, const TraceConfig& cfg = {});

/// I[f, phi] = int (w f_j gamma'^j + alpha phi) dt, evaluated by interpolation
/// along each curve.
Sinogram pair_forward(const Pair& p, const RaySystem& sys);

/// Sparse matrix of pair_forward on a grid (rows are fan entries, columns the
/// packed pair dofs). Applications are matrix-free with respect to the dense
/// oracle and deterministic for any thread count.
class RayOperator {
 public:
  RayOperator(const RaySystem& sys, GridPtr grid);

  const GridPtr& grid() const { return grid_; }
  const FanPtr& fan() const { return fan_; }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(row_ptr_.size() - 1); }
  Eigen::Index cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }
  const Eigen::VectorXd& measure() const { return mu_; }
  const std::string& provenance() const { return provenance_; }

  /// A x
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  /// A^T y
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const;
  /// I* s = A^T M s / cell_area, so that <I p, s>_mu = <p, I* s>_grid.
  Eigen::VectorXd adjoint(const Eigen::VectorXd& s) const;
  /// N x = I* I x
  Eigen::VectorXd normal(const Eigen::VectorXd& x) const;

  /// Sparse row access for dense assembly.
  template <typename Fn>
  void for_each_entry(Fn&& fn) const {
    for (Eigen::Index r = 0; r < rows(); ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) fn(r, cols_idx_[k], values_[k]);
  }

 private:
  GridPtr grid_;
  FanPtr fan_;
  Eigen::Index cols_;
  Eigen::VectorXd mu_;
  std::vector<std::size_t> row_ptr_;
  std::vector<Eigen::Index> cols_idx_;
  std::vector<double> values_;
  std::vector<std::size_t> col_ptr_;
  std::vector<Eigen::Index> t_rows_;
  std::vector<double> t_values_;
  std::string provenance_;
  int threads_;
};

Sinogram pair_forward(const Pair& p, const RayOperator& op);
Pair adjoint(const Sinogram& s, const RayOperator& op);
Pair normal(const Pair& p, const RayOperator& op);

/// Explicit matrix A with the fan measure; the normal matrix is
/// A^T diag(mu) A / cell_area.
struct DenseOperator {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd mu;
  GridPtr grid;

  Eigen::MatrixXd normal_matrix() const;
  /// M^{1/2} A / sqrt(cell_area): the transform in orthonormal coordinates.
  Eigen::MatrixXd scaled_matrix() const;
};

/// Accumulates the sparse stencil into a dense matrix. Throws TooLarge when
/// the pair dof count exceeds dense_limit.
DenseOperator assemble_dense(const RayOperator& op, std::size_t dense_limit = 4000);

/// Independent assembly: one pair_forward (interpolation path) per unit pair.
DenseOperator assemble_dense_by_probing(const RaySystem& sys, GridPtr grid,
                                        std::size_t dense_limit = 4000);

struct SymbolReport {
  /// sum over theta in {theta+, theta-} of v v^T with
  /// v = (lambda w theta^1, lambda w theta^2, alpha).
  Eigen::Matrix3d form = Eigen::Matrix3d::Zero();
  /// The form restricted to span{[xi_perp, 0], [0, 1]}.
  Eigen::Matrix2d restricted = Eigen::Matrix2d::Zero();
  double restricted_min_eigenvalue = 0.0;
};

/// Principal symbol of N at (x, xi) for a measure preserving family.
/// Throws NotMeasurePreserving otherwise.
SymbolReport principal_symbol(const Vec2& x, const Vec2& xi, const Weight& w,
                              const CurveGenerator& gen, const Domain& dom,
                              const TraceConfig& cfg = {});

}  // namespace wdt

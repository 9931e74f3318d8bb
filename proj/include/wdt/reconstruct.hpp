#pragma once

#include "wdt/fields.hpp"
#include "wdt/geometry.hpp"
#include "wdt/transform.hpp"
#include "wdt/weights.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wdt {

struct SpectralConfig {
  /// Relative threshold for the numerical null space.
  double tau_rank = 1e-8;
  /// Number of smallest right singular vectors kept for overlap studies.
  int keep_smallest = 8;
};

struct SpectralReport {
  /// Singular values of M^{1/2} A / sqrt(cell_area) over raw pairs, descending.
  Eigen::VectorXd singular_values;
  /// The same restricted to the solenoidal-pair subspace, descending.
  Eigen::VectorXd solenoidal_singular_values;
  int null_dim = 0;
  int solenoidal_null_dim = 0;
  /// Raw pair null-space basis (packed dofs, one per column).
  Eigen::MatrixXd null_basis;
  /// Right singular vectors of the smallest solenoidal singular values in
  /// packed pair dofs, smallest first.
  Eigen::MatrixXd solenoidal_smallest;
  /// Right singular vectors of the smallest raw singular values, smallest first.
  Eigen::MatrixXd raw_smallest;
  double sigma_max = 0.0;
  double sigma_min_raw = 0.0;
  double sigma_min_solenoidal = 0.0;
  double tau_rank = 1e-8;
};

/// Orthonormal basis (packed pair dofs) of {[f, phi] : dirichlet_divergence f = 0}.
Eigen::MatrixXd solenoidal_pair_basis(const Grid& grid);

/// Full SVD study of the dense operator over raw pairs and solenoidal pairs.
SpectralReport spectral_analysis(const DenseOperator& op, const SpectralConfig& cfg = {});

/// 1 / sigma_min on solenoidal pairs (an L2 surrogate of the stability
/// constant). Throws Degenerate if sigma_min <= tau_rank * sigma_max.
double stability_constant(const SpectralReport& report);

/// Orthogonal projection onto solenoidal pairs: [f, phi] -> [f^s, phi].
Pair project_solenoidal(const Pair& p);
/// Gauge-equivalent solenoidal pair: with f = f^s + d chi,
/// [f, phi] -> [f^s, phi + chi], which has the same transform.
Pair solenoidal_representative(const Pair& p);

/// Columns [d psi, 0] for every interior unit psi.
Eigen::MatrixXd potential_family(const Grid& grid);
/// Columns [0, phi] for every interior unit phi.
Eigen::MatrixXd scalar_family(const Grid& grid);
/// Columns [psi h + d psi, 0] for every interior unit psi, with h sampled at
/// the nodes.
Eigen::MatrixXd covector_kernel_family(const Grid& grid, const CovectorRule& h);
/// The constructed family mapped through solenoidal_representative.
Eigen::MatrixXd solenoidal_kernel_family(const Grid& grid, const CovectorRule& h);

/// ||P v|| / ||v|| with P the orthogonal projector onto the column span of
/// the family.
double subspace_overlap(const Eigen::VectorXd& v, const Eigen::MatrixXd& family);

struct ReconstructionConfig {
  /// Stop when ||I*(s - I p)|| <= tol * ||I* s||.
  double tol = 1e-8;
  int max_iter = 500;
  double projection_tol = 1e-12;
};

struct ReconstructionResult {
  Pair recovered;
  int iterations = 0;
  /// Final relative normal-equation residual.
  double residual = 0.0;
  /// ||s - I p||_mu / ||s||_mu per iteration (nonincreasing).
  std::vector<double> data_residuals;
  std::optional<double> error_f;
  std::optional<double> error_phi;
};

/// Least squares on solenoidal pairs by conjugate gradients on the normal
/// equations, re-projecting every iterate. Throws NoConvergence.
ReconstructionResult reconstruct(const Sinogram& s, const RayOperator& op,
                                 const ReconstructionConfig& cfg = {},
                                 const Pair* truth = nullptr);

/// Relative errors of a recovered pair against the gauge-equivalent
/// solenoidal pair of the truth.
std::pair<double, double> relative_errors(const Pair& recovered, const Pair& truth);

struct System {
  CurveGenerator generator;
  Weight weight;
};

/// delta -> perturbed system; delta = 0 must return the base system.
struct PerturbationFamily {
  std::string name;
  std::function<System(double)> make;
  /// Fixed perturbation direction q, reported through its C^0..C^3 norms.
  std::function<double(const Vec2&)> direction;
};

struct PerturbationRow {
  double delta = 0.0;
  double operator_difference = 0.0;
  double ratio = 0.0;
  double endpoint_deviation = 0.0;
  double endpoint_ratio = 0.0;
};

struct PerturbationReport {
  std::string name;
  std::vector<PerturbationRow> rows;
  /// sup norms over M1 of the derivatives of order 0..3 of the direction.
  std::array<double, 4> direction_norms{};
};

struct PerturbationConfig {
  int power_iterations = 200;
  double power_tol = 1e-9;
  int curve_samples = 32;
  std::uint64_t seed = 7;
  int threads = 1;
};

/// Estimates ||N - N~||_2 by power iteration on the difference and the sup
/// deviation of sampled curves for each delta (positive, decreasing).
PerturbationReport perturbation_study(const PerturbationFamily& family,
                                      const std::vector<double>& deltas, GridPtr grid,
                                      FanPtr fan, const TraceConfig& trace = {},
                                      const PerturbationConfig& cfg = {});

/// max over M1 samples of all partial derivatives of order k, k = 0..3, by
/// central differences.
std::array<double, 4> derivative_sup_norms(const std::function<double(const Vec2&)>& q,
                                           const Domain& dom, int n = 64, double step = 1e-2);

}  // namespace wdt

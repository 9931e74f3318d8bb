#include "wdt/reconstruct.hpp"

#include "wdt/errors.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace wdt {

namespace {

struct Svd {
  Eigen::VectorXd values;  // padded with zeros to the column count
  Eigen::MatrixXd v;
};

Svd full_svd(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  Svd out;
  out.values = Eigen::VectorXd::Zero(m.cols());
  out.values.head(svd.singularValues().size()) = svd.singularValues();
  out.v = svd.matrixV();
  return out;
}

Eigen::MatrixXd smallest_columns(const Eigen::MatrixXd& v, int keep) {
  const Eigen::Index k = std::min<Eigen::Index>(keep, v.cols());
  Eigen::MatrixXd out(v.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) out.col(c) = v.col(v.cols() - 1 - c);
  return out;
}

ScalarField unit_scalar(const GridPtr& g, std::size_t dof) {
  ScalarField s(g);
  s.values[g->interior_nodes()[dof]] = 1.0;
  return s;
}

Eigen::VectorXd pack_f(const CovectorField& f) {
  return Pair(f, ScalarField(f.grid)).pack();
}

}  // namespace

Eigen::MatrixXd solenoidal_pair_basis(const Grid& grid) {
  const GridPtr g = std::make_shared<const Grid>(grid);
  const Eigen::Index n = static_cast<Eigen::Index>(g->n_interior());
  // Columns of the discrete gradient span the orthogonal complement of the
  // divergence-free fields.
  Eigen::MatrixXd grad(2 * n, n);
  for (Eigen::Index d = 0; d < n; ++d)
    grad.col(d) = pack_f(dirichlet_gradient(unit_scalar(g, static_cast<std::size_t>(d)))).head(2 * n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(grad);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(2 * n, 2 * n);
  const Eigen::Index k = 2 * n - rank;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(3 * n, k + n);
  basis.topLeftCorner(2 * n, k) = q.rightCols(k);
  basis.bottomRightCorner(n, n).setIdentity();
  return basis;
}

SpectralReport spectral_analysis(const DenseOperator& op, const SpectralConfig& cfg) {
  if (!(cfg.tau_rank > 0.0)) throw std::invalid_argument("tau_rank must be positive");
  const Eigen::MatrixXd b = op.scaled_matrix();
  SpectralReport rep;
  rep.tau_rank = cfg.tau_rank;

  const Svd raw = full_svd(b);
  rep.singular_values = raw.values;
  rep.sigma_max = raw.values.size() ? raw.values[0] : 0.0;
  rep.sigma_min_raw = raw.values.size() ? raw.values[raw.values.size() - 1] : 0.0;
  const double cut = cfg.tau_rank * rep.sigma_max;
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < raw.values.size(); ++i)
    if (raw.values[i] <= cut) null_cols.push_back(i);
  rep.null_dim = static_cast<int>(null_cols.size());
  rep.null_basis.resize(b.cols(), rep.null_dim);
  for (std::size_t c = 0; c < null_cols.size(); ++c) rep.null_basis.col(c) = raw.v.col(null_cols[c]);
  rep.raw_smallest = smallest_columns(raw.v, cfg.keep_smallest);

  const Eigen::MatrixXd basis = solenoidal_pair_basis(*op.grid);
  const Svd sol = full_svd(b * basis);
  rep.solenoidal_singular_values = sol.values;
  rep.sigma_min_solenoidal = sol.values.size() ? sol.values[sol.values.size() - 1] : 0.0;
  rep.solenoidal_null_dim =
      static_cast<int>(std::count_if(sol.values.begin(), sol.values.end(),
                                     [cut](double s) { return s <= cut; }));
  rep.solenoidal_smallest = basis * smallest_columns(sol.v, cfg.keep_smallest);
  return rep;
}

double stability_constant(const SpectralReport& report) {
  if (report.sigma_min_solenoidal <= report.tau_rank * report.sigma_max)
    throw Degenerate("transform is numerically singular on solenoidal pairs");
  return 1.0 / report.sigma_min_solenoidal;
}

Pair project_solenoidal(const Pair& p) {
  ScalarField phi = p.phi;
  restrict_to_interior(phi);
  return {solenoidal_decompose(p.f).solenoidal, std::move(phi)};
}

Pair solenoidal_representative(const Pair& p) {
  Decomposition d = solenoidal_decompose(p.f);
  ScalarField phi = p.phi;
  restrict_to_interior(phi);
  return {std::move(d.solenoidal), phi + d.potential};
}

Eigen::MatrixXd potential_family(const Grid& grid) {
  const GridPtr g = std::make_shared<const Grid>(grid);
  const Eigen::Index n = static_cast<Eigen::Index>(g->n_interior());
  Eigen::MatrixXd fam(3 * n, n);
  for (Eigen::Index d = 0; d < n; ++d)
    fam.col(d) = pack_f(dirichlet_gradient(unit_scalar(g, static_cast<std::size_t>(d))));
  return fam;
}

Eigen::MatrixXd scalar_family(const Grid& grid) {
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_interior());
  Eigen::MatrixXd fam = Eigen::MatrixXd::Zero(3 * n, n);
  fam.bottomRows(n).setIdentity();
  return fam;
}

Eigen::MatrixXd covector_kernel_family(const Grid& grid, const CovectorRule& h) {
  Eigen::MatrixXd fam = potential_family(grid);
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_interior());
  for (Eigen::Index d = 0; d < n; ++d) {
    const Vec2 hv = h(grid.node(grid.interior_nodes()[d]));
    fam(d, d) += hv.x();
    fam(n + d, d) += hv.y();
  }
  return fam;
}

Eigen::MatrixXd solenoidal_kernel_family(const Grid& grid, const CovectorRule& h) {
  const GridPtr g = std::make_shared<const Grid>(grid);
  const Eigen::MatrixXd fam = covector_kernel_family(grid, h);
  Eigen::MatrixXd out(fam.rows(), fam.cols());
  for (Eigen::Index c = 0; c < fam.cols(); ++c)
    out.col(c) = solenoidal_representative(Pair::unpack(g, fam.col(c))).pack();
  return out;
}

double subspace_overlap(const Eigen::VectorXd& v, const Eigen::MatrixXd& family) {
  const double vn = v.norm();
  if (vn == 0.0) throw std::invalid_argument("overlap of a zero vector");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(family);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(family.rows(), rank);
  return (q.transpose() * v).norm() / vn;
}

ReconstructionResult reconstruct(const Sinogram& s, const RayOperator& op,
                                 const ReconstructionConfig& cfg, const Pair* truth) {
  if (s.values.size() != static_cast<std::size_t>(op.rows()))
    throw std::invalid_argument("sinogram does not match the operator's fan");
  const GridPtr& g = op.grid();
  const double area = g->cell_area();
  const Eigen::VectorXd& mu = op.measure();
  auto project = [&](const Eigen::VectorXd& x) {
    const Pair p = project_solenoidal(Pair::unpack(g, x));
    return p.pack();
  };
  auto mu_norm = [&](const Eigen::VectorXd& r) { return std::sqrt(r.dot(mu.cwiseProduct(r))); };

  const Eigen::Map<const Eigen::VectorXd> data(s.values.data(), op.rows());
  ReconstructionResult res{Pair(g), 0, 0.0, {}, std::nullopt, std::nullopt};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(op.cols());
  Eigen::VectorXd r = data;
  Eigen::VectorXd z = project(op.adjoint(r));
  Eigen::VectorXd p = z;
  double gamma = area * z.squaredNorm();
  const double gamma0 = gamma;
  const double data_norm = mu_norm(r);
  res.data_residuals.push_back(data_norm > 0.0 ? 1.0 : 0.0);

  bool converged = gamma0 == 0.0;
  for (int it = 1; it <= cfg.max_iter && !converged; ++it) {
    const Eigen::VectorXd q = op.apply(p);
    const double qq = q.dot(mu.cwiseProduct(q));
    if (!(qq > 0.0)) break;
    const double alpha = gamma / qq;
    x = project(x + alpha * p);
    r -= alpha * q;
    z = project(op.adjoint(r));
    const double gamma_new = area * z.squaredNorm();
    res.iterations = it;
    res.residual = std::sqrt(gamma_new / gamma0);
    res.data_residuals.push_back(mu_norm(r) / data_norm);
    if (res.residual <= cfg.tol) {
      converged = true;
      break;
    }
    p = z + (gamma_new / gamma) * p;
    gamma = gamma_new;
  }
  if (!converged)
    throw NoConvergence("reconstruction did not reach tolerance in " +
                        std::to_string(cfg.max_iter) + " iterations");
  res.recovered = Pair::unpack(g, x);
  if (truth) {
    const auto [ef, ep] = relative_errors(res.recovered, *truth);
    res.error_f = ef;
    res.error_phi = ep;
  }
  return res;
}

std::pair<double, double> relative_errors(const Pair& recovered, const Pair& truth) {
  const Pair t = solenoidal_representative(truth);
  auto rel = [](double diff, double ref) { return ref > 0.0 ? diff / ref : diff; };
  return {rel(norm(recovered.f - t.f), norm(t.f)), rel(norm(recovered.phi - t.phi), norm(t.phi))};
}

namespace {

double endpoint_deviation(const CurveGenerator& a, const CurveGenerator& b, const Fan& fan,
                          const Domain& dom, const TraceConfig& trace, int samples) {
  const double h = trace.step_for(dom);
  // Golden-ratio walk over the entries spreads the sample over points and
  // directions alike.
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double frac = std::fmod(k * golden, 1.0);
    const auto e = std::min(fan.size() - 1, static_cast<std::size_t>(frac * fan.size()));
    const FanEntry& entry = fan.entries[e];
    const Curve base = trace_curve(a, dom, entry.x, entry.theta, trace);
    const int steps = std::max(1, static_cast<int>(std::ceil(base.exit_time / h)));
    const double dt = base.exit_time / steps;
    Vec2 xa = entry.x, va = a.speed(entry.x, entry.theta) * entry.theta;
    Vec2 xb = entry.x, vb = b.speed(entry.x, entry.theta) * entry.theta;
    for (int k = 0; k < steps; ++k) {
      rk4_step(a, xa, va, dt);
      rk4_step(b, xb, vb, dt);
      worst = std::max(worst, (xa - xb).norm());
    }
  }
  return worst;
}

}  // namespace

PerturbationReport perturbation_study(const PerturbationFamily& family,
                                      const std::vector<double>& deltas, GridPtr grid,
                                      FanPtr fan, const TraceConfig& trace,
                                      const PerturbationConfig& cfg) {
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw std::invalid_argument("perturbation sizes must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1]))
      throw std::invalid_argument("perturbation sizes must be decreasing");
  }
  const Domain& dom = grid->domain();
  const System base = family.make(0.0);
  const RaySystem base_sys(base.generator, base.weight, fan, dom, trace, cfg.threads);
  const RayOperator base_op(base_sys, grid);

  PerturbationReport rep;
  rep.name = family.name;
  if (family.direction) rep.direction_norms = derivative_sup_norms(family.direction, dom);

  for (double delta : deltas) {
    const System pert = family.make(delta);
    const RaySystem sys(pert.generator, pert.weight, fan, dom, trace, cfg.threads);
    const RayOperator op(sys, grid);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd x(base_op.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    x.normalize();
    double est = 0.0;
    for (int it = 0; it < cfg.power_iterations; ++it) {
      const Eigen::VectorXd y = base_op.normal(x) - op.normal(x);
      const double ny = y.norm();
      if (ny == 0.0) {
        est = 0.0;
        break;
      }
      const bool done = std::abs(ny - est) <= cfg.power_tol * ny;
      est = ny;
      x = y / ny;
      if (done) break;
    }

    PerturbationRow row;
    row.delta = delta;
    row.operator_difference = est;
    row.ratio = est / delta;
    row.endpoint_deviation =
        endpoint_deviation(base.generator, pert.generator, *fan, dom, trace, cfg.curve_samples);
    row.endpoint_ratio = row.endpoint_deviation / delta;
    rep.rows.push_back(row);
  }
  return rep;
}

std::array<double, 4> derivative_sup_norms(const std::function<double(const Vec2&)>& q,
                                           const Domain& dom, int n, double step) {
  // Central difference weights on offsets -2..2 for derivative orders 0..3.
  const double c[4][5] = {{0, 0, 1, 0, 0},
                          {0, -0.5, 0, 0.5, 0},
                          {0, 1, -2, 1, 0},
                          {-0.5, 1, 0, -1, 0.5}};
  std::array<double, 4> out{};
  const double r = dom.radius_m1;
  for (int iy = 0; iy <= n; ++iy) {
    for (int ix = 0; ix <= n; ++ix) {
      const Vec2 x = dom.center + Vec2(-r + 2.0 * r * ix / n, -r + 2.0 * r * iy / n);
      if ((x - dom.center).norm() > r) continue;
      double vals[5][5];
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) vals[i][j] = q(x + step * Vec2(i - 2, j - 2));
      for (int k = 0; k <= 3; ++k) {
        for (int a = 0; a <= k; ++a) {
          const int b = k - a;
          double d = 0.0;
          for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) d += c[a][i] * c[b][j] * vals[i][j];
          out[k] = std::max(out[k], std::abs(d) / std::pow(step, k));
        }
      }
    }
  }
  return out;
}

}  // namespace wdt

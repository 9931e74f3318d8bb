#include "wdt/transform.hpp"

#include "wdt/errors.hpp"
#include "wdt/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wdt {

double inner_mu(const Sinogram& a, const Sinogram& b) {
  if (a.values.size() != b.values.size() || a.values.size() != a.fan->size())
    throw std::invalid_argument("sinograms live on different fans");
  double s = 0.0;
  for (std::size_t e = 0; e < a.values.size(); ++e) s += a.fan->entries[e].mu * a.values[e] * b.values[e];
  return s;
}

double norm_mu(const Sinogram& a) { return std::sqrt(inner_mu(a, a)); }

RaySystem::RaySystem(const CurveGenerator& gen, const Weight& w, FanPtr fan, const Domain& dom,
                     const TraceConfig& cfg, int threads)
    : fan_(std::move(fan)), dom_(dom), threads_(std::max(threads, 1)) {
  rays_.resize(fan_->size());
  const double h = cfg.step_for(dom);
  parallel_for(fan_->size(), threads_, [&](std::size_t e) {
    const FanEntry& entry = fan_->entries[e];
    TracedRay& ray = rays_[e];
    ray.curve = trace_curve(gen, dom, entry.x, entry.theta, cfg);
    const auto& st = ray.curve.states;
    ray.quadrature.assign(st.size(), 0.0);
    ray.active = ray.curve.exit_time >= 2.0 * h;
    if (!ray.active) {
      ray.weight.assign(st.size(), 0.0);
      ray.alpha.assign(st.size(), 0.0);
      return;
    }
    for (std::size_t k = 1; k < st.size(); ++k) {
      const double dt = st[k].t - st[k - 1].t;
      ray.quadrature[k - 1] += 0.5 * dt;
      ray.quadrature[k] += 0.5 * dt;
    }
    ray.weight = weight_along(w, ray.curve, dom);
    ray.alpha = alpha_of(w, ray.curve, dom);
  });
  provenance_ = "generator=" + to_string(gen.kind()) + ";weight=" + to_string(w.kind());
}

Sinogram forward(const CovectorSampler& f, const RaySystem& sys) {
  std::vector<double> values(sys.size(), 0.0);
  parallel_for(sys.size(), sys.threads(), [&](std::size_t e) {
    const TracedRay& ray = sys.ray(e);
    if (!ray.active) return;
    double acc = 0.0;
    for (std::size_t k = 0; k < ray.curve.size(); ++k) {
      const CurveState& s = ray.curve.states[k];
      acc += ray.quadrature[k] * ray.weight[k] * f(s.x).dot(s.v);
    }
    values[e] = acc;
  });
  return {sys.fan_ptr(), std::move(values), sys.provenance()};
}

Sinogram forward(const CovectorField& f, const RaySystem& sys) {
  Sinogram s = forward([&f](const Vec2& x) { return f.interpolate(x); }, sys);
  s.provenance += ";grid=" + std::to_string(f.grid->cells());
  return s;
}

Sinogram forward(const CovectorField& f, const Weight& w, const CurveGenerator& gen,
                 const Fan& fan, const TraceConfig& cfg) {
  const RaySystem sys(gen, w, std::make_shared<const Fan>(fan), f.grid->domain(), cfg);
  return forward(f, sys);
}

Sinogram pair_forward(const Pair& p, const RaySystem& sys) {
  std::vector<double> values(sys.size(), 0.0);
  parallel_for(sys.size(), sys.threads(), [&](std::size_t e) {
    const TracedRay& ray = sys.ray(e);
    if (!ray.active) return;
    double acc = 0.0;
    for (std::size_t k = 0; k < ray.curve.size(); ++k) {
      const CurveState& s = ray.curve.states[k];
      acc += ray.quadrature[k] *
             (ray.weight[k] * p.f.interpolate(s.x).dot(s.v) + ray.alpha[k] * p.phi.interpolate(s.x));
    }
    values[e] = acc;
  });
  return {sys.fan_ptr(), std::move(values),
          sys.provenance() + ";grid=" + std::to_string(p.grid()->cells())};
}

RayOperator::RayOperator(const RaySystem& sys, GridPtr grid)
    : grid_(std::move(grid)), fan_(sys.fan_ptr()), provenance_(sys.provenance()),
      threads_(sys.threads()) {
  const Grid& g = *grid_;
  const Eigen::Index n = static_cast<Eigen::Index>(g.n_interior());
  cols_ = 3 * n;
  const std::size_t n_rows = sys.size();
  mu_.resize(static_cast<Eigen::Index>(n_rows));
  for (std::size_t e = 0; e < n_rows; ++e) mu_[e] = sys.fan().entries[e].mu;
  provenance_ += ";grid=" + std::to_string(g.cells());

  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows(n_rows);
  parallel_for(n_rows, threads_, [&](std::size_t e) {
    const TracedRay& ray = sys.ray(e);
    if (!ray.active) return;
    auto& row = rows[e];
    for (std::size_t k = 0; k < ray.curve.size(); ++k) {
      const CurveState& s = ray.curve.states[k];
      const double q = ray.quadrature[k];
      if (q == 0.0) continue;
      const auto st = g.bilinear(s.x);
      for (int c = 0; c < 4; ++c) {
        const int d = g.dof(st.nodes[c]);
        if (d < 0 || st.weights[c] == 0.0) continue;
        const double b = q * st.weights[c];
        row.emplace_back(d, b * ray.weight[k] * s.v.x());
        row.emplace_back(n + d, b * ray.weight[k] * s.v.y());
        row.emplace_back(2 * n + d, b * ray.alpha[k]);
      }
    }
    std::stable_sort(row.begin(), row.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<Eigen::Index, double>> merged;
    for (const auto& entry : row) {
      if (!merged.empty() && merged.back().first == entry.first) merged.back().second += entry.second;
      else merged.push_back(entry);
    }
    row.swap(merged);
  });

  row_ptr_.assign(n_rows + 1, 0);
  for (std::size_t e = 0; e < n_rows; ++e) row_ptr_[e + 1] = row_ptr_[e] + rows[e].size();
  cols_idx_.resize(row_ptr_.back());
  values_.resize(row_ptr_.back());
  for (std::size_t e = 0; e < n_rows; ++e) {
    std::size_t k = row_ptr_[e];
    for (const auto& [c, v] : rows[e]) {
      cols_idx_[k] = c;
      values_[k] = v;
      ++k;
    }
  }

  // Transposed copy with rows in increasing order inside each column.
  col_ptr_.assign(static_cast<std::size_t>(cols_) + 1, 0);
  for (Eigen::Index c : cols_idx_) ++col_ptr_[c + 1];
  for (Eigen::Index c = 0; c < cols_; ++c) col_ptr_[c + 1] += col_ptr_[c];
  t_rows_.resize(values_.size());
  t_values_.resize(values_.size());
  std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
  for (std::size_t e = 0; e < n_rows; ++e) {
    for (std::size_t k = row_ptr_[e]; k < row_ptr_[e + 1]; ++k) {
      const std::size_t slot = fill[cols_idx_[k]]++;
      t_rows_[slot] = static_cast<Eigen::Index>(e);
      t_values_[slot] = values_[k];
    }
  }
}

Eigen::VectorXd RayOperator::apply(const Eigen::VectorXd& x) const {
  if (x.size() != cols_) throw std::invalid_argument("RayOperator::apply size mismatch");
  Eigen::VectorXd y(rows());
  parallel_for(static_cast<std::size_t>(rows()), threads_, [&](std::size_t r) {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[cols_idx_[k]];
    y[static_cast<Eigen::Index>(r)] = acc;
  });
  return y;
}

Eigen::VectorXd RayOperator::apply_transpose(const Eigen::VectorXd& y) const {
  if (y.size() != rows()) throw std::invalid_argument("RayOperator::apply_transpose size mismatch");
  Eigen::VectorXd x(cols_);
  parallel_for(static_cast<std::size_t>(cols_), threads_, [&](std::size_t c) {
    double acc = 0.0;
    for (std::size_t k = col_ptr_[c]; k < col_ptr_[c + 1]; ++k) acc += t_values_[k] * y[t_rows_[k]];
    x[static_cast<Eigen::Index>(c)] = acc;
  });
  return x;
}

Eigen::VectorXd RayOperator::adjoint(const Eigen::VectorXd& s) const {
  return apply_transpose(mu_.cwiseProduct(s)) / grid_->cell_area();
}

Eigen::VectorXd RayOperator::normal(const Eigen::VectorXd& x) const { return adjoint(apply(x)); }

Sinogram pair_forward(const Pair& p, const RayOperator& op) {
  const Eigen::VectorXd y = op.apply(p.pack());
  return {op.fan(), std::vector<double>(y.data(), y.data() + y.size()), op.provenance()};
}

Pair adjoint(const Sinogram& s, const RayOperator& op) {
  if (s.values.size() != static_cast<std::size_t>(op.rows()))
    throw std::invalid_argument("sinogram does not match the operator's fan");
  const Eigen::Map<const Eigen::VectorXd> y(s.values.data(), op.rows());
  return Pair::unpack(op.grid(), op.adjoint(y));
}

Pair normal(const Pair& p, const RayOperator& op) {
  return Pair::unpack(op.grid(), op.normal(p.pack()));
}

Eigen::MatrixXd DenseOperator::normal_matrix() const {
  return matrix.transpose() * mu.asDiagonal() * matrix / grid->cell_area();
}

Eigen::MatrixXd DenseOperator::scaled_matrix() const {
  return mu.cwiseSqrt().asDiagonal() * matrix / std::sqrt(grid->cell_area());
}

DenseOperator assemble_dense(const RayOperator& op, std::size_t dense_limit) {
  if (static_cast<std::size_t>(op.cols()) > dense_limit)
    throw TooLarge("pair dof count exceeds the dense limit");
  DenseOperator d;
  d.grid = op.grid();
  d.mu = op.measure();
  d.matrix = Eigen::MatrixXd::Zero(op.rows(), op.cols());
  op.for_each_entry([&](Eigen::Index r, Eigen::Index c, double v) { d.matrix(r, c) += v; });
  return d;
}

DenseOperator assemble_dense_by_probing(const RaySystem& sys, GridPtr grid,
                                        std::size_t dense_limit) {
  const Eigen::Index cols = 3 * static_cast<Eigen::Index>(grid->n_interior());
  if (static_cast<std::size_t>(cols) > dense_limit)
    throw TooLarge("pair dof count exceeds the dense limit");
  DenseOperator d;
  d.grid = grid;
  d.mu.resize(static_cast<Eigen::Index>(sys.size()));
  for (std::size_t e = 0; e < sys.size(); ++e) d.mu[e] = sys.fan().entries[e].mu;
  d.matrix.resize(static_cast<Eigen::Index>(sys.size()), cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(cols);
    unit[c] = 1.0;
    const Sinogram s = pair_forward(Pair::unpack(grid, unit), sys);
    for (std::size_t e = 0; e < s.values.size(); ++e) d.matrix(e, c) = s.values[e];
  }
  return d;
}

SymbolReport principal_symbol(const Vec2& x, const Vec2& xi, const Weight& w,
                              const CurveGenerator& gen, const Domain& dom,
                              const TraceConfig& cfg) {
  if (!gen.measure_preserving())
    throw NotMeasurePreserving("principal symbol assumes J = 1 (measure preserving flow)");
  if (!(xi.norm() > 0.0)) throw std::invalid_argument("principal symbol needs a nonzero covector");
  const Vec2 perp = rotate90(xi.normalized());
  SymbolReport rep;
  for (const Vec2& theta : {perp, Vec2(-perp)}) {
    const double lam = gen.speed(x, theta);
    const Vec2 vel = lam * theta;
    const double wv = weight_at(w, gen, dom, x, vel, cfg);
    const double a = alpha_at(w, gen, dom, x, vel, cfg);
    const Eigen::Vector3d v(lam * wv * theta.x(), lam * wv * theta.y(), a);
    rep.form += v * v.transpose();
  }
  Eigen::Matrix<double, 3, 2> basis = Eigen::Matrix<double, 3, 2>::Zero();
  basis(0, 0) = perp.x();
  basis(1, 0) = perp.y();
  basis(2, 1) = 1.0;
  rep.restricted = basis.transpose() * rep.form * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(rep.restricted, Eigen::EigenvaluesOnly);
  rep.restricted_min_eigenvalue = eig.eigenvalues()[0];
  return rep;
}

}  // namespace wdt

#include "wdt/weights.hpp"

#include "wdt/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace wdt {

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Constant: return "constant";
    case WeightKind::Attenuated: return "attenuated";
    case WeightKind::FromCovector: return "from_covector";
    case WeightKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

Weight Weight::constant(double c) {
  Weight w;
  w.kind_ = WeightKind::Constant;
  w.value_ = c;
  return w;
}

Weight Weight::attenuated(DirectionalRule sigma) {
  Weight w;
  w.kind_ = WeightKind::Attenuated;
  w.rule_ = std::move(sigma);
  return w;
}

Weight Weight::attenuated(double sigma) {
  return attenuated([sigma](const Vec2&, const Vec2&) { return sigma; });
}

Weight Weight::from_covector(CovectorRule h, double w0) {
  if (!(w0 > 0.0)) throw std::invalid_argument("from_covector needs a positive boundary value");
  Weight w;
  w.kind_ = WeightKind::FromCovector;
  w.h_ = std::move(h);
  w.value_ = w0;
  return w;
}

Weight Weight::tabulated(DirectionalRule rule, DirectionalRule log_derivative) {
  Weight w;
  w.kind_ = WeightKind::Tabulated;
  w.rule_ = std::move(rule);
  w.log_derivative_ = std::move(log_derivative);
  return w;
}

Weight Weight::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("weight scale must be positive");
  Weight w = *this;
  w.scale_ *= c;
  return w;
}

Weight Weight::with_alpha(DirectionalRule alpha) const {
  Weight w = *this;
  w.alpha_ = std::move(alpha);
  return w;
}

double Weight::pointwise(const Vec2& x, const Vec2& xi) const {
  switch (kind_) {
    case WeightKind::Constant: return value_;
    case WeightKind::Tabulated: return rule_(x, xi.normalized());
    default: throw std::logic_error("cumulative weights have no pointwise value");
  }
}

std::optional<double> Weight::analytic_log_derivative(const Vec2& x, const Vec2& xi) const {
  switch (kind_) {
    case WeightKind::Constant: return 0.0;
    case WeightKind::Attenuated: return -rule_(x, xi);
    case WeightKind::Tabulated:
      if (log_derivative_) return log_derivative_(x, xi);
      return std::nullopt;
    case WeightKind::FromCovector: return std::nullopt;
  }
  return std::nullopt;
}

double Weight::log_rate(const Vec2& x, const Vec2& xi) const {
  if (kind_ == WeightKind::Attenuated) return -rule_(x, xi);
  if (kind_ == WeightKind::FromCovector) return h_(x).dot(xi);
  throw std::logic_error("log_rate is defined for cumulative weights only");
}

std::vector<double> weight_along(const Weight& w, const Curve& curve, const Domain& dom) {
  const auto& st = curve.states;
  std::vector<double> out(st.size());
  if (!w.cumulative()) {
    for (std::size_t k = 0; k < st.size(); ++k) out[k] = w.scale() * w.pointwise(st[k].x, st[k].v);
    return out;
  }
  if (st.empty() || std::abs(dom.boundary_offset(st.front().x)) > 1e-9 * dom.radius_m1)
    throw CurveNotMaximal("cumulative weight needs a curve starting on the boundary of M1");
  double log_w = std::log(w.scale());
  if (w.kind() == WeightKind::FromCovector) log_w += std::log(w.covector_boundary_value());
  double prev_rate = w.log_rate(st[0].x, st[0].v);
  out[0] = std::exp(log_w);
  for (std::size_t k = 1; k < st.size(); ++k) {
    const double rate = w.log_rate(st[k].x, st[k].v);
    log_w += 0.5 * (st[k].t - st[k - 1].t) * (prev_rate + rate);
    prev_rate = rate;
    out[k] = std::exp(log_w);
  }
  return out;
}

std::vector<double> flow_log_derivative(const Weight& w, const Curve& curve, const Domain& dom) {
  const auto& st = curve.states;
  if (w.kind() == WeightKind::Attenuated || w.kind() == WeightKind::Constant ||
      (w.kind() == WeightKind::Tabulated && w.analytic_log_derivative(st[0].x, st[0].v))) {
    std::vector<double> out(st.size());
    for (std::size_t k = 0; k < st.size(); ++k) out[k] = *w.analytic_log_derivative(st[k].x, st[k].v);
    if (w.kind() != WeightKind::Attenuated) {
      for (double v : weight_along(w, curve, dom))
        if (std::abs(v) < 1e-14) throw ZeroWeight("weight vanishes on the curve");
    }
    return out;
  }
  return finite_difference_log_derivative(weight_along(w, curve, dom), curve);
}

std::vector<double> finite_difference_log_derivative(const std::vector<double>& w,
                                                     const Curve& curve) {
  const auto& st = curve.states;
  const std::size_t n = st.size();
  std::vector<double> logw(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(w[k]) < 1e-14) throw ZeroWeight("weight vanishes on the curve");
    logw[k] = std::log(std::abs(w[k]));
  }
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  double h_max = 0.0;
  for (std::size_t k = 1; k < n; ++k) h_max = std::max(h_max, st[k].t - st[k - 1].t);
  if (h_max <= 0.0) return out;

  // Neighbours closer than this in time are skipped; the bisected exit step
  // can be arbitrarily short.
  const double min_gap = 1e-3 * h_max;
  auto left = [&](std::size_t k) -> std::ptrdiff_t {
    for (std::ptrdiff_t a = static_cast<std::ptrdiff_t>(k) - 1; a >= 0; --a)
      if (st[k].t - st[a].t >= min_gap) return a;
    return -1;
  };
  auto right = [&](std::size_t k) -> std::ptrdiff_t {
    for (std::size_t b = k + 1; b < n; ++b)
      if (st[b].t - st[k].t >= min_gap) return static_cast<std::ptrdiff_t>(b);
    return -1;
  };
  // Derivative at t0 of the quadratic through three (t, L) samples.
  auto three_point = [&](std::size_t i0, std::size_t i1, std::size_t i2, std::size_t at) {
    const double t0 = st[i0].t, t1 = st[i1].t, t2 = st[i2].t, t = st[at].t;
    const double d0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
    const double d1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
    const double d2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
    return d0 * logw[i0] + d1 * logw[i1] + d2 * logw[i2];
  };
  for (std::size_t k = 0; k < n; ++k) {
    const std::ptrdiff_t a = left(k), b = right(k);
    if (a >= 0 && b >= 0) {
      out[k] = three_point(a, k, b, k);
    } else if (b >= 0) {
      const std::ptrdiff_t c = right(b);
      out[k] = c >= 0 ? three_point(k, b, c, k) : (logw[b] - logw[k]) / (st[b].t - st[k].t);
    } else if (a >= 0) {
      const std::ptrdiff_t c = left(a);
      out[k] = c >= 0 ? three_point(c, a, k, k) : (logw[k] - logw[a]) / (st[k].t - st[a].t);
    }
  }
  return out;
}

std::vector<double> alpha_of(const Weight& w, const Curve& curve, const Domain& dom) {
  const auto& st = curve.states;
  std::vector<double> out(st.size());
  if (w.alpha_rule()) {
    for (std::size_t k = 0; k < st.size(); ++k) out[k] = w.alpha_rule()(st[k].x, st[k].v);
    return out;
  }
  const std::vector<double> values = weight_along(w, curve, dom);
  const std::vector<double> dlog = flow_log_derivative(w, curve, dom);
  for (std::size_t k = 0; k < st.size(); ++k) out[k] = -values[k] * dlog[k];
  return out;
}

double weight_at(const Weight& w, const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                 const Vec2& xi, const TraceConfig& cfg) {
  if (!w.cumulative()) return w.scale() * w.pointwise(x, xi);
  double log_w = std::log(w.scale());
  if (w.kind() == WeightKind::FromCovector) log_w += std::log(w.covector_boundary_value());
  if (dom.boundary_offset(x) > -cfg.boundary_tol && dom.outer_normal(x).dot(xi) <= 0.0)
    return std::exp(log_w);
  // gamma(t) for t in [tau_-, 0] is the reversed curve y(s) = gamma(-s).
  const Curve back = trace_from_state(gen.time_reversed(), dom, x, -xi, cfg);
  const auto& st = back.states;
  double integral = 0.0;
  for (std::size_t k = 1; k < st.size(); ++k) {
    integral += 0.5 * (st[k].t - st[k - 1].t) *
                (w.log_rate(st[k - 1].x, -st[k - 1].v) + w.log_rate(st[k].x, -st[k].v));
  }
  return std::exp(log_w + integral);
}

double flow_log_derivative_at(const Weight& w, const CurveGenerator& gen, const Domain& dom,
                              const Vec2& x, const Vec2& xi, const TraceConfig& cfg) {
  if (auto d = w.analytic_log_derivative(x, xi)) return *d;
  const double h = cfg.step_for(dom);
  Vec2 xf = x, vf = xi;
  rk4_step(gen, xf, vf, h);
  Vec2 xb = x, vb = -xi;
  rk4_step(gen.time_reversed(), xb, vb, h);
  vb = -vb;  // forward-time velocity at t = -h
  if (w.kind() == WeightKind::FromCovector) {
    const double r_minus = w.log_rate(xb, vb), r0 = w.log_rate(x, xi), r_plus = w.log_rate(xf, vf);
    return (0.5 * h * (r_minus + r0) + 0.5 * h * (r0 + r_plus)) / (2.0 * h);
  }
  const double wp = w.pointwise(xf, vf), wm = w.pointwise(xb, vb);
  if (std::abs(wp) < 1e-14 || std::abs(wm) < 1e-14) throw ZeroWeight("weight vanishes near sample");
  return (std::log(std::abs(wp)) - std::log(std::abs(wm))) / (2.0 * h);
}

double alpha_at(const Weight& w, const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                const Vec2& xi, const TraceConfig& cfg) {
  if (w.alpha_rule()) return w.alpha_rule()(x, xi);
  return -weight_at(w, gen, dom, x, xi, cfg) * flow_log_derivative_at(w, gen, dom, x, xi, cfg);
}

EllipticReport elliptic_margin(const Weight& w, const CurveGenerator& gen, const Domain& dom,
                               const EllipticCheckConfig& cfg, const TraceConfig& trace) {
  if (cfg.n_x < 8 || cfg.n_theta < 8)
    throw std::invalid_argument("elliptic check needs at least 8 samples per axis");
  EllipticReport rep;
  if (cfg.subset_u && cfg.subset_u->half_width < std::numbers::pi) {
    rep.pass = false;
    rep.min_margin = 0.0;
    rep.message =
        "a proper direction cone cannot satisfy the elliptic condition in two dimensions: "
        "some covector is normal to at most one admissible direction";
    return rep;
  }
  // Log-derivative of w, or -alpha / w when a general alpha is supplied.
  auto log_derivative = [&](const Vec2& x, const Vec2& xi) {
    if (w.alpha_rule()) {
      const double wv = weight_at(w, gen, dom, x, xi, trace);
      if (std::abs(wv) < 1e-14) throw ZeroWeight("weight vanishes at a sample");
      return -w.alpha_rule()(x, xi) / wv;
    }
    return flow_log_derivative_at(w, gen, dom, x, xi, trace);
  };
  rep.min_margin = std::numeric_limits<double>::infinity();
  try {
    for (const Vec2& x : sample_disk(dom.center, dom.radius_m, cfg.n_x)) {
      for (int j = 0; j < cfg.n_theta; ++j) {
        const double a = 2.0 * std::numbers::pi * j / cfg.n_theta;
        const Vec2 theta(std::cos(a), std::sin(a));
        if (!w.cumulative()) {
          if (std::abs(w.pointwise(x, theta)) < 1e-14 || std::abs(w.pointwise(x, -theta)) < 1e-14)
            throw ZeroWeight("weight vanishes at a sample");
        }
        const double lam_p = gen.speed(x, theta);
        const double lam_m = gen.speed(x, -theta);
        const double m = std::abs(log_derivative(x, lam_p * theta) +
                                  (lam_p / lam_m) * log_derivative(x, -lam_m * theta));
        if (m < rep.min_margin) {
          rep.min_margin = m;
          rep.argmin_x = x;
          rep.argmin_theta = theta;
        }
      }
    }
  } catch (const ZeroWeight& e) {
    rep.pass = false;
    rep.min_margin = 0.0;
    rep.message = std::string("ZeroWeight: ") + e.what();
    return rep;
  }
  rep.pass = rep.min_margin > cfg.threshold;
  rep.message = rep.pass ? "G log w is not odd on the sampled directions"
                         : "G log w is odd (to threshold) at some sample; elliptic condition fails";
  return rep;
}

}  // namespace wdt

#include "wdt/geometry.hpp"

#include "wdt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace wdt {

void Domain::validate() const {
  if (!(radius_m > 0.0) || !(radius_m < radius_m1) || !center.allFinite())
    throw std::invalid_argument("domain requires 0 < radius_M < radius_M1");
}

ScalarFunction ScalarFunction::constant(double c) {
  return {[c](const Vec2&) { return c; }, [](const Vec2&) { return Vec2::Zero().eval(); }};
}

ScalarFunction ScalarFunction::gaussian(double amplitude, const Vec2& x0, double width) {
  const double inv = 1.0 / (width * width);
  return {[=](const Vec2& x) { return amplitude * std::exp(-(x - x0).squaredNorm() * inv); },
          [=](const Vec2& x) {
            const double g = amplitude * std::exp(-(x - x0).squaredNorm() * inv);
            return Vec2(-2.0 * inv * g * (x - x0));
          }};
}

ScalarFunction ScalarFunction::affine(double c0, double eps, ScalarFunction q) {
  auto value = q.value;
  auto gradient = q.gradient;
  return {[=](const Vec2& x) { return c0 + eps * value(x); },
          [=](const Vec2& x) { return Vec2(eps * gradient(x)); }};
}

ScalarFunction ScalarFunction::bump(const Vec2& x0, double r, int power) {
  if (!(r > 0.0) || power < 1) throw std::invalid_argument("bump needs r > 0 and power >= 1");
  const double inv = 1.0 / (r * r);
  return {[=](const Vec2& x) {
            const double u = 1.0 - (x - x0).squaredNorm() * inv;
            return u > 0.0 ? std::pow(u, power) : 0.0;
          },
          [=](const Vec2& x) {
            const double u = 1.0 - (x - x0).squaredNorm() * inv;
            if (!(u > 0.0)) return Vec2(Vec2::Zero());
            return Vec2(-2.0 * power * std::pow(u, power - 1) * inv * (x - x0));
          }};
}

ScalarFunction ScalarFunction::random_smooth(std::uint64_t seed, const Vec2& x0, double r,
                                             int modes) {
  if (modes < 1) throw std::invalid_argument("random_smooth needs at least one mode");
  struct Mode {
    Vec2 k;
    double a, phase;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<Mode> series;
  for (int ky = 0; ky < modes; ++ky) {
    for (int kx = 0; kx < modes; ++kx) {
      const double a = normal(rng) / (1.0 + kx * kx + ky * ky);
      series.push_back({Vec2(kx, ky) * (std::numbers::pi / r), a, uniform(rng)});
    }
  }
  const ScalarFunction b = bump(x0, r);
  auto sum = [series, x0](const Vec2& x, Vec2* grad) {
    double v = 0.0;
    if (grad) grad->setZero();
    for (const Mode& m : series) {
      const double arg = m.k.dot(x - x0) + m.phase;
      v += m.a * std::cos(arg);
      if (grad) *grad -= m.a * std::sin(arg) * m.k;
    }
    return v;
  };
  return {[=](const Vec2& x) { return b.value(x) * sum(x, nullptr); },
          [=](const Vec2& x) {
            Vec2 g;
            const double s = sum(x, &g);
            return Vec2(b.gradient(x) * s + b.value(x) * g);
          }};
}

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::StraightLine: return "straight";
    case GeneratorKind::ConformalGeodesic: return "conformal";
    case GeneratorKind::Magnetic: return "magnetic";
    case GeneratorKind::Custom: return "custom";
  }
  return "unknown";
}

CurveGenerator CurveGenerator::straight_line() {
  CurveGenerator gen;
  gen.kind_ = GeneratorKind::StraightLine;
  gen.g_ = [](const Vec2&, const Vec2&) { return Vec2::Zero().eval(); };
  gen.lambda_ = [](const Vec2&, const Vec2&) { return 1.0; };
  return gen;
}

CurveGenerator CurveGenerator::conformal(ScalarFunction c) {
  CurveGenerator gen;
  gen.kind_ = GeneratorKind::ConformalGeodesic;
  auto value = c.value;
  auto gradient = c.gradient;
  // Christoffel symbols of exp(2 rho) delta with rho = log c.
  gen.g_ = [value, gradient](const Vec2& x, const Vec2& xi) {
    const Vec2 grad_rho = gradient(x) / value(x);
    return Vec2(-2.0 * grad_rho.dot(xi) * xi + xi.squaredNorm() * grad_rho);
  };
  gen.lambda_ = [value](const Vec2& x, const Vec2&) { return 1.0 / value(x); };
  return gen;
}

CurveGenerator CurveGenerator::magnetic(ScalarFunction b) {
  CurveGenerator gen;
  gen.kind_ = GeneratorKind::Magnetic;
  auto value = b.value;
  gen.g_ = [value](const Vec2& x, const Vec2& xi) { return Vec2(value(x) * rotate90(xi)); };
  gen.lambda_ = [](const Vec2&, const Vec2&) { return 1.0; };
  return gen;
}

CurveGenerator CurveGenerator::custom(AccelerationRule g, SpeedRule lambda,
                                      bool measure_preserving) {
  CurveGenerator gen;
  gen.kind_ = GeneratorKind::Custom;
  gen.g_ = std::move(g);
  gen.lambda_ = std::move(lambda);
  gen.measure_preserving_ = measure_preserving;
  return gen;
}

Vec2 CurveGenerator::acceleration(const Vec2& x, const Vec2& xi) const {
  const Vec2 a = reversed_ ? g_(x, -xi) : g_(x, xi);
  if (!a.allFinite()) throw StepFailure("generator returned a non-finite acceleration");
  return a;
}

double CurveGenerator::speed(const Vec2& x, const Vec2& theta) const {
  const double n = theta.norm();
  if (!(n > 0.0)) throw std::invalid_argument("speed requires a nonzero direction");
  const double lam = lambda_(x, theta / n);
  if (!(lam > 0.0) || !std::isfinite(lam)) throw StepFailure("speed rule must be positive");
  return lam / n;
}

CurveGenerator CurveGenerator::time_reversed() const {
  CurveGenerator gen = *this;
  gen.reversed_ = !reversed_;
  return gen;
}

CurveGenerator CurveGenerator::with_speed(SpeedRule lambda) const {
  CurveGenerator gen = *this;
  gen.lambda_ = std::move(lambda);
  return gen;
}

void rk4_step(const CurveGenerator& gen, Vec2& x, Vec2& v, double h) {
  const Vec2 kx1 = v;
  const Vec2 kv1 = gen.acceleration(x, v);
  const Vec2 kx2 = v + 0.5 * h * kv1;
  const Vec2 kv2 = gen.acceleration(x + 0.5 * h * kx1, kx2);
  const Vec2 kx3 = v + 0.5 * h * kv2;
  const Vec2 kv3 = gen.acceleration(x + 0.5 * h * kx2, kx3);
  const Vec2 kx4 = v + h * kv3;
  const Vec2 kv4 = gen.acceleration(x + h * kx3, kx4);
  x += (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
  v += (h / 6.0) * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
  if (!x.allFinite() || !v.allFinite()) throw StepFailure("RK4 step produced a non-finite state");
}

CurveState integrate_fixed(const CurveGenerator& gen, const Vec2& x, const Vec2& v, double T,
                           int n_steps) {
  CurveState s{0.0, x, v};
  const double h = T / n_steps;
  for (int k = 0; k < n_steps; ++k) rk4_step(gen, s.x, s.v, h);
  s.t = T;
  return s;
}

namespace {

CurveState advance(const CurveGenerator& gen, const CurveState& s, double h) {
  CurveState out = s;
  rk4_step(gen, out.x, out.v, h);
  out.t = s.t + h;
  return out;
}

void push_state(Curve& c, const CurveState& s) {
  const double seg = c.states.empty() ? 0.0 : (s.x - c.states.back().x).norm();
  c.cumulative_length.push_back(c.cumulative_length.empty() ? 0.0
                                                            : c.cumulative_length.back() + seg);
  c.states.push_back(s);
}

}  // namespace

Curve trace_from_state(const CurveGenerator& gen, const Domain& dom, const Vec2& x0,
                       const Vec2& v0, const TraceConfig& cfg, bool allow_trapped) {
  if (!x0.allFinite() || !v0.allFinite() || !(v0.norm() > 0.0))
    throw std::invalid_argument("trace requires a finite start and nonzero velocity");
  const double tol = cfg.boundary_tol;
  if (dom.boundary_offset(x0) > std::max(tol, 1e-9 * dom.radius_m1))
    throw std::invalid_argument("trace start lies outside M1");
  const double h = cfg.step_for(dom);

  Curve curve;
  curve.entry_x = x0;
  curve.entry_theta = v0.normalized();
  CurveState cur{0.0, x0, v0};
  push_state(curve, cur);

  auto offset = [&](const CurveState& s) { return dom.boundary_offset(s.x); };

  // Tangent or outgoing start on the boundary: zero-length curve.
  if (offset(cur) > -tol && dom.outer_normal(x0).dot(v0) >= 0.0) {
    push_state(curve, cur);
    return curve;
  }

  bool first = true;
  for (;;) {
    CurveState next = advance(gen, cur, h);
    if (offset(next) > 0.0) {
      double lo = 0.0;
      double hi = h;
      if (offset(cur) > -tol) {
        if (!first) break;  // the previous step already landed on the boundary
        bool inside = false;
        for (int k = 0; k < 60 && !inside; ++k) {
          lo = hi * 0.5;
          if (offset(advance(gen, cur, lo)) < -tol) inside = true;
          else hi = lo;
        }
        if (!inside) {
          push_state(curve, cur);
          curve.exit_time = 0.0;
          return curve;
        }
        hi = h;
      }
      CurveState exit = next;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        CurveState trial = advance(gen, cur, mid);
        const double o = offset(trial);
        if (o > 0.0) {
          hi = mid;
          exit = trial;
        } else {
          lo = mid;
          if (o > -tol) {
            exit = trial;
            break;
          }
        }
        if (std::abs(o) <= tol || hi - lo <= 1e-15 * h) break;
      }
      push_state(curve, exit);
      break;
    }
    cur = next;
    push_state(curve, cur);
    first = false;
    if (curve.length() > cfg.max_length) {
      if (allow_trapped) {
        curve.exited = false;
        break;
      }
      throw NonTermination("curve did not leave M1 within max_length");
    }
  }
  curve.exit_time = curve.states.back().t;
  return curve;
}

Curve trace_curve(const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                  const Vec2& theta, const TraceConfig& cfg) {
  if (std::abs(theta.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("trace_curve expects a unit direction");
  Curve c = trace_from_state(gen, dom, x, gen.speed(x, theta) * theta, cfg);
  c.entry_theta = theta;
  return c;
}

Curve trace_backward(const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                     const Vec2& theta, const TraceConfig& cfg) {
  return trace_from_state(gen.time_reversed(), dom, x, -gen.speed(x, theta) * theta, cfg);
}

namespace {

// Cubic Hermite interpolation of the position at time t.
Vec2 position_at(const Curve& c, double t) {
  const auto& s = c.states;
  if (t <= s.front().t) return s.front().x;
  if (t >= s.back().t) return s.back().x;
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const CurveState& st) { return v < st.t; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double dt = b.t - a.t;
  if (dt <= 0.0) return a.x;
  const double u = (t - a.t) / dt;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  return h00 * a.x + h10 * dt * a.v + h01 * b.x + h11 * dt * b.v;
}

}  // namespace

double reversal_discrepancy(const CurveGenerator& gen, const Domain& dom, const Curve& curve,
                            const TraceConfig& cfg) {
  const CurveState& last = curve.states.back();
  const Curve back = trace_from_state(gen.time_reversed(), dom, last.x, -last.v, cfg);
  const double tau = curve.exit_time;
  double worst = 0.0;
  for (const auto& s : curve.states)
    worst = std::max(worst, (s.x - position_at(back, tau - s.t)).norm());
  for (const auto& s : back.states)
    worst = std::max(worst, (s.x - position_at(curve, tau - s.t)).norm());
  return worst;
}

double Fan::total_measure() const {
  double sum = 0.0;
  for (const auto& e : entries) sum += e.mu;
  return sum;
}

Fan make_fan(const Domain& dom, int n_points, int n_dirs) {
  if (n_points < 4 || n_dirs < 2)
    throw std::invalid_argument("make_fan requires n_points >= 4 and n_dirs >= 2");
  using std::numbers::pi;
  Fan fan;
  fan.n_points = n_points;
  fan.n_dirs = n_dirs;
  fan.entries.reserve(static_cast<std::size_t>(n_points) * n_dirs);
  const double ds_x = 2.0 * pi * dom.radius_m1 / n_points;
  const double ds_theta = pi / n_dirs;
  for (int i = 0; i < n_points; ++i) {
    const double phi = 2.0 * pi * i / n_points;
    const Vec2 nu(std::cos(phi), std::sin(phi));
    const Vec2 x = dom.center + dom.radius_m1 * nu;
    for (int k = 0; k < n_dirs; ++k) {
      const double beta = -0.5 * pi + (k + 0.5) * ds_theta;
      const Vec2 theta = std::cos(beta) * (-nu) + std::sin(beta) * rotate90(-nu);
      fan.entries.push_back({x, theta, std::cos(beta) * ds_x * ds_theta});
    }
  }
  return fan;
}

std::vector<Vec2> sample_disk(const Vec2& center, double r, int n) {
  std::vector<Vec2> pts;
  pts.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double rho = r * std::sqrt((i + 0.5) / n);
    const double a = golden * i;
    pts.emplace_back(center + rho * Vec2(std::cos(a), std::sin(a)));
  }
  return pts;
}

SimplicityReport simplicity_report(const CurveGenerator& gen, const Domain& dom, int n_samples,
                                   const TraceConfig& cfg, int n_dirs, double angle_eps) {
  if (n_samples < 1 || n_dirs < 1) throw std::invalid_argument("simplicity_report needs samples");
  SimplicityReport rep;
  rep.min_scaled_det = std::numeric_limits<double>::infinity();
  auto dir = [](double a) { return Vec2(std::cos(a), std::sin(a)); };
  auto launch = [&](const Vec2& x, double a) {
    const Vec2 th = dir(a);
    return trace_from_state(gen, dom, x, gen.speed(x, th) * th, cfg, true);
  };
  for (const Vec2& x : sample_disk(dom.center, dom.radius_m, n_samples)) {
    for (int j = 0; j < n_dirs; ++j) {
      const double a = 2.0 * std::numbers::pi * (j + 0.25) / n_dirs;
      const Curve mid = launch(x, a);
      const Curve plus = launch(x, a + angle_eps);
      const Curve minus = launch(x, a - angle_eps);
      if (!mid.exited || !plus.exited || !minus.exited) ++rep.trapped;
      const std::size_t n = std::min({mid.size(), plus.size(), minus.size()});
      double prev = 0.0;
      for (std::size_t k = 1; k + 1 < n; ++k) {
        const CurveState& s = mid.states[k];
        const Vec2 da = (plus.states[k].x - minus.states[k].x) / (2.0 * angle_eps);
        const double scaled = cross(s.v, da) / s.t;
        if (k > 1 && (scaled > 0.0) != (prev > 0.0)) ++rep.sign_changes;
        prev = scaled;
        ++rep.samples;
        if (std::abs(scaled) < rep.min_scaled_det) {
          rep.min_scaled_det = std::abs(scaled);
          rep.worst_x = x;
          rep.worst_t = s.t;
          rep.worst_theta = dir(a);
        }
      }
    }
  }
  if (rep.samples == 0) rep.min_scaled_det = 0.0;
  rep.simple = rep.trapped == 0 && rep.sign_changes == 0 && rep.min_scaled_det > 1e-6;
  return rep;
}

}  // namespace wdt

#pragma once

#include "wdt/geometry.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wdt {

/// Rule evaluated at a point and a velocity (or unit direction, see Weight).
using DirectionalRule = std::function<double(const Vec2& x, const Vec2& xi)>;
using CovectorRule = std::function<Vec2(const Vec2& x)>;

enum class WeightKind { Constant, Attenuated, FromCovector, Tabulated };

std::string to_string(WeightKind kind);

/// A weight w(x, xi) on the flow. Attenuated and FromCovector weights are
/// defined per curve by integrating from the inflow point, so they are only
/// evaluated along traced curves or by tracing back to the boundary.
class Weight {
 public:
  static Weight constant(double c);
  /// w = exp(-int_{tau_-}^0 sigma(gamma, gamma')), sigma called with the velocity.
  static Weight attenuated(DirectionalRule sigma);
  static Weight attenuated(double sigma);
  /// log w = log w0 + int h_j gamma'^j dt from the inflow point, which solves
  /// G log w = h_j xi^j.
  static Weight from_covector(CovectorRule h, double w0 = 1.0);
  /// w(x, theta) given directly on unit directions. An optional analytic
  /// G log w (called with the velocity) replaces finite differences.
  static Weight tabulated(DirectionalRule w, DirectionalRule log_derivative = {});

  /// Multiplies w by c > 0; G log w is unchanged.
  Weight scaled(double c) const;
  /// Uses a user alpha(x, xi) instead of alpha = -G w in the pair transform.
  Weight with_alpha(DirectionalRule alpha) const;

  WeightKind kind() const { return kind_; }
  double scale() const { return scale_; }
  bool cumulative() const {
    return kind_ == WeightKind::Attenuated || kind_ == WeightKind::FromCovector;
  }
  const DirectionalRule& sigma() const { return rule_; }
  const CovectorRule& covector() const { return h_; }
  const DirectionalRule& alpha_rule() const { return alpha_; }
  /// w0 of a FromCovector weight.
  double covector_boundary_value() const { return value_; }

  /// Unscaled value for the pointwise kinds (Constant, Tabulated).
  double pointwise(const Vec2& x, const Vec2& xi) const;
  /// Analytic G log w when available (Attenuated, Constant, Tabulated with a
  /// log-derivative rule).
  std::optional<double> analytic_log_derivative(const Vec2& x, const Vec2& xi) const;
  /// Integrand of log w along a curve: -sigma or h . xi.
  double log_rate(const Vec2& x, const Vec2& xi) const;

 private:
  WeightKind kind_ = WeightKind::Constant;
  double value_ = 1.0;
  double scale_ = 1.0;
  DirectionalRule rule_;
  DirectionalRule log_derivative_;
  CovectorRule h_;
  DirectionalRule alpha_;
};

/// Weight values at every state of a maximal curve. Throws CurveNotMaximal if
/// a cumulative weight is evaluated on a curve that does not start on the
/// boundary of M1.
std::vector<double> weight_along(const Weight& w, const Curve& curve, const Domain& dom);

/// G log w at every state. Attenuated weights use -sigma analytically; other
/// kinds use central differences of log w in the curve parameter (one-sided at
/// the ends). Throws ZeroWeight if |w| < 1e-14 anywhere.
std::vector<double> flow_log_derivative(const Weight& w, const Curve& curve, const Domain& dom);

/// Central differences (nonuniform, one-sided at the ends) of log|w| in the
/// curve parameter. Throws ZeroWeight.
std::vector<double> finite_difference_log_derivative(const std::vector<double>& w,
                                                     const Curve& curve);

/// alpha = -G w = -w G log w per state, or the weight's alpha rule.
std::vector<double> alpha_of(const Weight& w, const Curve& curve, const Domain& dom);

/// w(x, xi) at an arbitrary point of M1, tracing back to the inflow boundary
/// when the weight is cumulative.
double weight_at(const Weight& w, const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                 const Vec2& xi, const TraceConfig& cfg);

/// G log w at (x, xi): analytic when available, otherwise central difference
/// over a short two-sided trace of one step in each direction.
double flow_log_derivative_at(const Weight& w, const CurveGenerator& gen, const Domain& dom,
                              const Vec2& x, const Vec2& xi, const TraceConfig& cfg);

/// alpha(x, xi): the alpha rule when present, else -w G log w.
double alpha_at(const Weight& w, const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                const Vec2& xi, const TraceConfig& cfg);

/// Optional restriction of the admissible directions to a cone.
struct DirectionCone {
  double center_angle = 0.0;
  double half_width = 0.0;
};

struct EllipticCheckConfig {
  int n_x = 64;
  int n_theta = 32;
  double threshold = 1e-6;
  std::optional<DirectionCone> subset_u;
};

struct EllipticReport {
  double min_margin = 0.0;
  Vec2 argmin_x = Vec2::Zero();
  Vec2 argmin_theta = Vec2::Zero();
  bool pass = false;
  std::string message;
};

/// Minimum over sampled (x, theta) of
///   |G log w(x, lambda(x,theta) theta)
///    + lambda(x,theta)/lambda(x,-theta) G log w(x, -lambda(x,-theta) theta)|,
/// which vanishes exactly where G log w fails to be non-odd. Passes iff the
/// minimum exceeds cfg.threshold.
EllipticReport elliptic_margin(const Weight& w, const CurveGenerator& gen, const Domain& dom,
                               const EllipticCheckConfig& cfg, const TraceConfig& trace = {});

}  // namespace wdt

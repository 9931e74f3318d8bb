#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace wdt {

using Vec2 = Eigen::Vector2d;

/// Counter-clockwise rotation by 90 degrees.
inline Vec2 rotate90(const Vec2& v) { return {-v.y(), v.x()}; }

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// The reconstruction disk M nested strictly inside the tracing disk M1.
struct Domain {
  double radius_m = 1.0;
  double radius_m1 = 1.25;
  Vec2 center = Vec2::Zero();

  /// Throws std::invalid_argument unless 0 < radius_m < radius_m1.
  void validate() const;

  double diameter() const { return 2.0 * radius_m1; }
  /// Signed distance to the outer circle, positive outside M1.
  double boundary_offset(const Vec2& x) const { return (x - center).norm() - radius_m1; }
  /// Exterior unit normal of the circle through x around the center.
  Vec2 outer_normal(const Vec2& x) const { return (x - center).normalized(); }
  bool in_m(const Vec2& x) const { return (x - center).norm() < radius_m; }
};

/// A smooth scalar coefficient with its gradient (conformal factor, magnetic
/// strength, attenuation, perturbation directions).
struct ScalarFunction {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;

  double operator()(const Vec2& x) const { return value(x); }

  static ScalarFunction constant(double c);
  /// a * exp(-|x - x0|^2 / width^2)
  static ScalarFunction gaussian(double amplitude, const Vec2& x0, double width);
  /// c0 + eps * q
  static ScalarFunction affine(double c0, double eps, ScalarFunction q);
  /// (1 - |x - x0|^2 / r^2)^power inside the disk of radius r, zero outside.
  static ScalarFunction bump(const Vec2& x0, double r, int power = 2);
  /// bump(x0, r) times a random low-pass cosine series
  ///   sum_{0 <= kx, ky < modes} a_k cos(pi (kx x + ky y) / r + phase_k),
  /// a_k ~ N(0, 1) / (1 + kx^2 + ky^2), phase_k ~ U[0, 2 pi), drawn from a
  /// mt19937_64 seeded with seed.
  static ScalarFunction random_smooth(std::uint64_t seed, const Vec2& x0, double r, int modes = 4);
};

enum class GeneratorKind { StraightLine, ConformalGeodesic, Magnetic, Custom };

std::string to_string(GeneratorKind kind);

/// Speed rule on unit directions, lambda(x, theta) > 0.
using SpeedRule = std::function<double(const Vec2& x, const Vec2& unit_dir)>;
/// Second-order generator G(x, xi) of the curve family.
using AccelerationRule = std::function<Vec2(const Vec2& x, const Vec2& xi)>;

/// The pair (G, lambda) defining the curve family: curves solve
/// x'' = G(x, x') with initial velocity lambda(x, theta) * theta.
class CurveGenerator {
 public:
  /// G = 0, lambda = 1.
  static CurveGenerator straight_line();
  /// Geodesics of the conformal metric c(x)^2 |dx|^2, with lambda = 1 / c so
  /// that curves have unit speed in that metric.
  static CurveGenerator conformal(ScalarFunction c);
  /// G(x, xi) = b(x) * J xi with J the rotation by 90 degrees; lambda = 1.
  static CurveGenerator magnetic(ScalarFunction b);
  /// User-supplied generator.
  static CurveGenerator custom(AccelerationRule g, SpeedRule lambda, bool measure_preserving);

  GeneratorKind kind() const { return kind_; }
  bool measure_preserving() const { return measure_preserving_; }
  bool reversed() const { return reversed_; }

  /// G(x, xi). Throws StepFailure if the result is not finite.
  Vec2 acceleration(const Vec2& x, const Vec2& xi) const;
  /// lambda(x, theta) extended by homogeneity of order -1 to non-unit theta.
  double speed(const Vec2& x, const Vec2& theta) const;

  /// The time-reversed family: y(s) = x(-s) solves y'' = G(y, -y').
  CurveGenerator time_reversed() const;
  /// Replaces the speed rule (kept on unit directions).
  CurveGenerator with_speed(SpeedRule lambda) const;

 private:
  GeneratorKind kind_ = GeneratorKind::StraightLine;
  AccelerationRule g_;
  SpeedRule lambda_;
  bool measure_preserving_ = true;
  bool reversed_ = false;
};

struct TraceConfig {
  /// RK4 step; 0 selects diameter(M1) / 256.
  double step = 0.0;
  double boundary_tol = 1e-12;
  /// Arc length cap; longer curves are treated as trapped.
  double max_length = 100.0;
  /// Hausdorff tolerance for the reversal consistency check.
  double reversal_tol = 1e-6;

  double step_for(const Domain& dom) const { return step > 0.0 ? step : dom.diameter() / 256.0; }
};

struct CurveState {
  double t = 0.0;
  Vec2 x = Vec2::Zero();
  Vec2 v = Vec2::Zero();
};

/// A trajectory traced forward in time until it leaves M1.
struct Curve {
  std::vector<CurveState> states;
  std::vector<double> cumulative_length;
  Vec2 entry_x = Vec2::Zero();
  Vec2 entry_theta = Vec2::Zero();
  double exit_time = 0.0;
  /// False when the trace stopped at max_length without leaving M1.
  bool exited = true;

  std::size_t size() const { return states.size(); }
  double length() const { return cumulative_length.empty() ? 0.0 : cumulative_length.back(); }
};

/// One classical RK4 step of (x' = v, v' = G(x, v)).
void rk4_step(const CurveGenerator& gen, Vec2& x, Vec2& v, double h);

/// Integrates a fixed number of RK4 steps up to time T, ignoring the domain.
CurveState integrate_fixed(const CurveGenerator& gen, const Vec2& x, const Vec2& v, double T,
                           int n_steps);

/// Traces gamma_{x,theta} with initial velocity lambda(x,theta) theta until it
/// leaves M1; the exit point is refined by bisection. Throws NonTermination if
/// the arc length exceeds cfg.max_length.
Curve trace_curve(const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                  const Vec2& theta, const TraceConfig& cfg);

/// Same as trace_curve but from an explicit initial velocity. With
/// allow_trapped the trace is returned truncated (exited == false) instead of
/// throwing.
Curve trace_from_state(const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                       const Vec2& v, const TraceConfig& cfg, bool allow_trapped = false);

/// Traces the backward extension of gamma_{x,theta} (t from 0 down to tau_-)
/// using the time-reversed system. States are stored with s = -t >= 0 and
/// velocities of the reversed curve.
Curve trace_backward(const CurveGenerator& gen, const Domain& dom, const Vec2& x,
                     const Vec2& theta, const TraceConfig& cfg);

/// Traces from the recorded exit of `curve` with reversed velocity under the
/// time-reversed system and returns the Hausdorff distance between the two
/// point sets.
double reversal_discrepancy(const CurveGenerator& gen, const Domain& dom, const Curve& curve,
                            const TraceConfig& cfg);

struct FanEntry {
  Vec2 x;
  Vec2 theta;
  double mu = 0.0;
};

/// Discretized inflow boundary of M1 with measure <theta, -nu> dS_x dS_theta.
struct Fan {
  std::vector<FanEntry> entries;
  int n_points = 0;
  int n_dirs = 0;

  std::size_t size() const { return entries.size(); }
  double total_measure() const;
};

/// n_points uniform boundary points, n_dirs directions per point uniform in
/// the open inflow half circle (midpoint rule).
Fan make_fan(const Domain& dom, int n_points, int n_dirs);

struct SimplicityReport {
  /// min over samples of |det D exp_{x,+}(t, angle)| / t
  double min_scaled_det = 0.0;
  Vec2 worst_x = Vec2::Zero();
  double worst_t = 0.0;
  Vec2 worst_theta = Vec2::Zero();
  std::size_t samples = 0;
  /// Curves that stayed in M1 beyond max_length.
  std::size_t trapped = 0;
  /// Sign changes of the Jacobian along a curve (conjugate points).
  std::size_t sign_changes = 0;
  bool simple = false;
};

/// Sweeps the Jacobian of (t, angle) -> exp_{x,+}(t, theta(angle)) by central
/// differences in the angle for base points sampled in M. Trapped curves and
/// conjugate points are counted and reported, not thrown.
SimplicityReport simplicity_report(const CurveGenerator& gen, const Domain& dom, int n_samples,
                                   const TraceConfig& cfg, int n_dirs = 16,
                                   double angle_eps = 1e-4);

/// Deterministic sunflower sample of n points inside the disk of radius r.
std::vector<Vec2> sample_disk(const Vec2& center, double r, int n);

}  // namespace wdt

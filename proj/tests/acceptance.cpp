#include "wdt/errors.hpp"
#include "wdt/reconstruct.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace wdt;

namespace {

const Domain kDom;

// Tolerances.
const double kOrderMin = 1.5;
const double kGaugeFinest = 1e-3;
const double kAttenuatedRelation = 1e-6;
const double kGram = 1e-10;
const double kOverlap = 0.99;
const double kStabilityFactor = 2.0;
const double kLinearityFactor = 2.0;
const double kReconError = 5e-2;
const int kReconMaxIter = 500;
const double kReconSeconds = 600.0;
const double kEnergy = 1e-8;
const double kRk4Factor = 12.0;
const double kStraightDet = 1e-6;
const double kSymbolThreshold = 1e-6;

const CovectorRule kH = [](const Vec2& x) {
  return Vec2(0.5 + 0.25 * x.y(), -0.3 + 0.25 * x.x() * x.y());
};

int failures = 0;

void verdict(int id, const char* label, bool pass, const std::string& detail) {
  std::printf("criterion %d %s: %s  (%s)\n", id, label, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FanPtr shared_fan(int points, int dirs) {
  return std::make_shared<const Fan>(make_fan(kDom, points, dirs));
}

TraceConfig trace_for(const Grid& g) {
  TraceConfig tc;
  tc.step = 0.5 * g.spacing();
  return tc;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Eigen::MatrixXd hstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd m(a.rows(), a.cols() + b.cols());
  m << a, b;
  return m;
}

// Relative sinogram norms on the refinement ladder and the worst pairwise order.
struct Ladder {
  std::vector<double> values;
  double min_order = std::numeric_limits<double>::infinity();
};

Ladder refine(const std::function<double(int)>& measure) {
  Ladder l;
  for (int n : {32, 64, 128}) {
    l.values.push_back(measure(n));
    if (l.values.size() > 1)
      l.min_order = std::min(l.min_order, std::log2(l.values[l.values.size() - 2] / l.values.back()));
  }
  return l;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto psi = ScalarFunction::bump(kDom.center, 0.9, 3);
  const auto fan = shared_fan(64, 24);
  const Ladder l = refine([&](int n) {
    const GridPtr g = make_grid(kDom, n);
    const RaySystem sys(CurveGenerator::straight_line(), Weight::constant(1.0), fan, kDom, trace_for(*g));
    const CovectorField dpsi = CovectorField::sample(g, psi.gradient);
    return norm_mu(forward(dpsi, sys)) / norm(dpsi);
  });
  const double t = seconds_since(t0);
  verdict(1, "gauge kernel", l.min_order >= kOrderMin && l.values.back() <= kGaugeFinest && t <= 60.0,
          fmt("ratios %.3e %.3e %.3e, min order %.2f >= %.1f, finest <= %.0e, %.1f s <= 60 s", l.values[0],
              l.values[1], l.values[2], l.min_order, kOrderMin, kGaugeFinest, t));
}

void criterion2() {
  const auto psi = ScalarFunction::bump(kDom.center, 0.9, 3);
  const auto fan = shared_fan(64, 24);
  const Weight w = Weight::from_covector(kH);
  const Ladder l = refine([&](int n) {
    const GridPtr g = make_grid(kDom, n);
    const RaySystem sys(CurveGenerator::straight_line(), w, fan, kDom, trace_for(*g));
    const Pair p(CovectorField::sample(g, [&](const Vec2& x) { return Vec2(psi(x) * kH(x) + psi.gradient(x)); }),
                 ScalarField(g));
    return norm_mu(pair_forward(p, sys));
  });
  const EllipticReport er = elliptic_margin(w, CurveGenerator::straight_line(), kDom, {}, {});
  verdict(2, "constructed kernel", l.min_order >= kOrderMin && !er.pass,
          fmt("norms %.3e %.3e %.3e, min order %.2f >= %.1f, elliptic margin %.2e verdict %s", l.values[0],
              l.values[1], l.values[2], l.min_order, kOrderMin, er.min_margin, er.pass ? "pass" : "fail"));
}

void criterion3() {
  const Weight w = Weight::attenuated(1.0);
  TraceConfig tc;
  tc.step = 0.02;
  double worst = 0.0;
  std::size_t states = 0;
  for (const CurveGenerator& gen : {CurveGenerator::straight_line(), CurveGenerator::magnetic(ScalarFunction::constant(0.5))}) {
    for (const FanEntry& e : make_fan(kDom, 32, 12).entries) {
      const Curve c = trace_curve(gen, kDom, e.x, e.theta, tc);
      if (c.size() < 3) continue;
      const auto d = finite_difference_log_derivative(weight_along(w, c, kDom), c);
      for (double v : d) worst = std::max(worst, std::abs(v + 1.0));
      states += c.size();
    }
  }
  verdict(3, "attenuated relation", worst <= kAttenuatedRelation,
          fmt("max |G log w + sigma| = %.2e <= %.0e over %zu states", worst, kAttenuatedRelation, states));
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const GridPtr g = make_grid(kDom, 16);
  const RaySystem sys(CurveGenerator::magnetic(ScalarFunction::constant(0.5)), Weight::attenuated(1.0),
                      shared_fan(64, 24), kDom, trace_for(*g));
  const RayOperator op(sys, g);
  const Eigen::Index n = op.cols();
  double gram = 0.0, sym = 0.0, psd = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Pair p = Pair::unpack(g, random_vector(n, 1000 + k));
    const Pair q = Pair::unpack(g, random_vector(n, 2000 + k));
    const double scale = norm(p) * norm(q);
    const Pair np = normal(p, op), nq = normal(q, op);
    gram = std::max(gram, std::abs(inner_mu(pair_forward(p, op), pair_forward(q, op)) - inner(np, q)) / scale);
    sym = std::max(sym, std::abs(inner(np, q) - inner(p, nq)) / scale);
    psd = std::max(psd, -inner(np, p) / (norm(p) * norm(p)));
  }
  const double t = seconds_since(t0);
  verdict(4, "adjoint and Gram", gram <= kGram && sym <= kGram && psd <= kGram,
          fmt("gram %.2e, symmetry %.2e, negativity %.2e, all <= %.0e, %.1f s", gram, sym, psd, kGram, t));
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fan = shared_fan(64, 24);
  auto spectrum = [&](const Weight& w, int n) {
    const GridPtr g = make_grid(kDom, n);
    const RaySystem sys(CurveGenerator::straight_line(), w, fan, kDom, trace_for(*g));
    return spectral_analysis(assemble_dense(RayOperator(sys, g)));
  };
  auto degenerate = [](const SpectralReport& r) {
    try {
      stability_constant(r);
      return false;
    } catch (const Degenerate&) {
      return true;
    }
  };
  const GridPtr g16 = make_grid(kDom, 16);

  const SpectralReport cst = spectrum(Weight::constant(1.0), 16);
  const Eigen::MatrixXd gauge = hstack(potential_family(*g16), scalar_family(*g16));
  double cst_overlap = 1.0;
  for (Eigen::Index c = 0; c < cst.null_basis.cols(); ++c)
    cst_overlap = std::min(cst_overlap, subspace_overlap(cst.null_basis.col(c), gauge));
  const bool cst_ok = degenerate(cst) && cst.null_dim > 0 && cst_overlap >= kOverlap;
  verdict(5, "(a) constant weight", cst_ok,
          fmt("degenerate %s, null dim %d, min null overlap %.4f >= %.2f", degenerate(cst) ? "yes" : "no", cst.null_dim,
              cst_overlap, kOverlap));

  const SpectralReport fc = spectrum(Weight::from_covector(kH), 16);
  const Eigen::MatrixXd family = solenoidal_kernel_family(*g16, kH);
  const double fc_overlap = subspace_overlap(fc.solenoidal_smallest.col(0), family);
  const bool fc_ok = degenerate(fc) && fc_overlap >= kOverlap;
  verdict(5, "(b) covector weight", fc_ok,
          fmt("degenerate %s (solenoidal sigma_min/sigma_max %.2e vs tau %.0e), smallest overlap %.4f >= %.2f",
              degenerate(fc) ? "yes" : "no", fc.sigma_min_solenoidal / fc.sigma_max, fc.tau_rank, fc_overlap,
              kOverlap));

  const SpectralReport a16 = spectrum(Weight::attenuated(1.0), 16);
  const SpectralReport a24 = spectrum(Weight::attenuated(1.0), 24);
  const double r16 = a16.sigma_min_solenoidal / a16.sigma_max;
  const double r24 = a24.sigma_min_solenoidal / a24.sigma_max;
  const double factor = std::max(r16 / r24, r24 / r16);
  const double t = seconds_since(t0);
  verdict(5, "(c) attenuated weight",
          !degenerate(a16) && !degenerate(a24) && factor <= kStabilityFactor && t <= 300.0,
          fmt("sigma_min/sigma_max %.3e at 16, %.3e at 24, factor %.2f <= %.0f, %.1f s <= 300 s", r16, r24, factor,
              kStabilityFactor, t));

  // Diagnostic: the same ratio with a denser fan.
  const auto dense = shared_fan(128, 96);
  double dr[2];
  for (int k = 0; k < 2; ++k) {
    const GridPtr g = make_grid(kDom, k == 0 ? 16 : 24);
    const RaySystem sys(CurveGenerator::straight_line(), Weight::attenuated(1.0), dense, kDom, trace_for(*g));
    const SpectralReport r = spectral_analysis(assemble_dense(RayOperator(sys, g)));
    dr[k] = r.sigma_min_solenoidal / r.sigma_max;
  }
  std::printf("  diagnostic: fan 128x96 gives sigma_min/sigma_max %.3e at 16, %.3e at 24, factor %.2f\n", dr[0],
              dr[1], std::max(dr[0] / dr[1], dr[1] / dr[0]));
}

double symbol_min(const Weight& w) {
  double m = std::numeric_limits<double>::infinity();
  for (const Vec2& x : sample_disk(kDom.center, kDom.radius_m, 20)) {
    for (int k = 0; k < 20; ++k) {
      const double a = (k + 0.5) * std::numbers::pi / 20;
      m = std::min(m, principal_symbol(x, {std::cos(a), std::sin(a)}, w, CurveGenerator::straight_line(), kDom)
                          .restricted_min_eigenvalue);
    }
  }
  return m;
}

void criterion6() {
  const Weight att = Weight::attenuated(1.0);
  const double m_att = symbol_min(att);
  const double m_cst = symbol_min(Weight::constant(1.0));
  const Weight zero_alpha = Weight::attenuated(1.0).with_alpha([](const Vec2&, const Vec2&) { return 0.0; });
  const double m_zero = symbol_min(zero_alpha);
  const double m_fc = symbol_min(Weight::from_covector(kH));

  bool agree = true;
  std::string detail;
  const std::pair<const char*, Weight> canon[] = {
      {"attenuated", att}, {"constant", Weight::constant(1.0)}, {"covector", Weight::from_covector(kH)}};
  const double mins[] = {m_att, m_cst, m_fc};
  for (int k = 0; k < 3; ++k) {
    const bool sym = mins[k] > kSymbolThreshold;
    const bool ell = elliptic_margin(canon[k].second, CurveGenerator::straight_line(), kDom, {}, {}).pass;
    agree = agree && sym == ell;
    detail += fmt("%s symbol %.2e margin %s; ", canon[k].first, mins[k], ell ? "pass" : "fail");
  }
  verdict(6, "symbol ellipticity", m_att > 0.0 && std::abs(m_zero) <= 1e-14 && agree,
          detail + fmt("alpha = 0 min %.1e", m_zero));
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const GridPtr g = make_grid(kDom, 16);
  const auto fan = shared_fan(64, 24);
  const auto q = ScalarFunction::gaussian(1.0, {0.2, -0.1}, 0.5);
  const PerturbationFamily families[] = {
      {"magnetic",
       [q](double d) {
         return System{CurveGenerator::magnetic(ScalarFunction::affine(0.0, d, q)), Weight::attenuated(1.0)};
       },
       q.value},
      {"attenuation",
       [q](double d) {
         return System{CurveGenerator::straight_line(),
                       Weight::attenuated([q, d](const Vec2& x, const Vec2& v) { return (1.0 + d * q(x)) * v.norm(); })};
       },
       q.value}};
  bool ok = true;
  std::string detail;
  for (const PerturbationFamily& f : families) {
    const PerturbationReport r = perturbation_study(f, {1e-2, 1e-3}, g, fan, trace_for(*g));
    const double a = r.rows[0].ratio, b = r.rows[1].ratio;
    const double fa = std::max(a / b, b / a);
    ok = ok && fa <= kLinearityFactor;
    detail += fmt("%s ratios %.4f %.4f", f.name.c_str(), a, b);
    if (r.rows[0].endpoint_deviation > 0.0) {
      const double ea = r.rows[0].endpoint_ratio, eb = r.rows[1].endpoint_ratio;
      ok = ok && std::max(ea / eb, eb / ea) <= kLinearityFactor;
      detail += fmt(" endpoint ratios %.4f %.4f", ea, eb);
    }
    detail += "; ";
  }
  verdict(7, "perturbation linearity", ok, detail + fmt("factor <= %.0f, %.1f s", kLinearityFactor, seconds_since(t0)));
}

void criterion8() {
  const GridPtr g = make_grid(kDom, 48);
  const auto a = ScalarFunction::random_smooth(11, kDom.center, 0.9);
  const auto b = ScalarFunction::random_smooth(12, kDom.center, 0.9);
  const auto c = ScalarFunction::random_smooth(13, kDom.center, 0.9);
  const Pair truth(CovectorField::sample(g, [&](const Vec2& x) { return Vec2(a(x), b(x)); }),
                   ScalarField::sample(g, c.value));
  ReconstructionConfig cfg;
  cfg.tol = 1e-6;
  cfg.max_iter = kReconMaxIter;

  const auto t0 = std::chrono::steady_clock::now();
  const RaySystem sys(CurveGenerator::straight_line(), Weight::attenuated(1.0), shared_fan(120, 48), kDom,
                      trace_for(*g), 1);
  const RayOperator op(sys, g);
  const Pair rep = solenoidal_representative(truth);
  const Sinogram data = pair_forward(rep, op);
  bool ok = false;
  std::string detail;
  try {
    const ReconstructionResult r = reconstruct(data, op, cfg, &truth);
    const double t = seconds_since(t0);
    ok = *r.error_f <= kReconError && *r.error_phi <= kReconError && r.iterations <= kReconMaxIter &&
         t <= kReconSeconds;
    detail = fmt("errors f %.2e phi %.2e <= %.0e, %d iterations <= %d, %.1f s <= %.0f s", *r.error_f, *r.error_phi,
                 kReconError, r.iterations, kReconMaxIter, t, kReconSeconds);
  } catch (const NoConvergence& e) {
    detail = e.what();
  }
  verdict(8, "reconstruction", ok, detail);

  // Diagnostic: data simulated from the raw pair.
  const Sinogram raw = pair_forward(truth, op);
  std::vector<double> diff(raw.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = raw.values[i] - data.values[i];
  const double defect = norm_mu(Sinogram(raw.fan, diff)) / norm_mu(raw);
  std::printf("  diagnostic: raw pair data differs from the solenoidal pair data by %.2e relative\n", defect);
  try {
    const ReconstructionResult r = reconstruct(raw, op, cfg, &truth);
    std::printf("  diagnostic: raw data errors f %.2e phi %.2e after %d iterations\n", *r.error_f, *r.error_phi,
                r.iterations);
  } catch (const NoConvergence& e) {
    std::printf("  diagnostic: raw data: %s\n", e.what());
  }
}

void criterion9() {
  const auto mag = CurveGenerator::magnetic(ScalarFunction::constant(1.0));
  double energy = 0.0;
  for (const FanEntry& e : make_fan(kDom, 16, 8).entries) {
    const Curve c = trace_from_state(mag, kDom, e.x, e.theta, {}, true);
    for (const CurveState& s : c.states) energy = std::max(energy, std::abs(0.5 * s.v.squaredNorm() - 0.5));
  }
  const auto gen = CurveGenerator::magnetic(
      ScalarFunction::affine(0.5, 0.3, ScalarFunction::gaussian(1.0, {0.2, -0.1}, 0.6)));
  const Vec2 x(-0.8, 0.1), v(1.0, 0.3);
  const Vec2 ref = integrate_fixed(gen, x, v, 1.5, 256).x;
  const double e1 = (integrate_fixed(gen, x, v, 1.5, 16).x - ref).norm();
  const double e2 = (integrate_fixed(gen, x, v, 1.5, 32).x - ref).norm();
  const SimplicityReport sr = simplicity_report(CurveGenerator::straight_line(), kDom, 40, {});
  const double det = std::abs(sr.min_scaled_det - 1.0);
  verdict(9, "geometry", energy <= kEnergy && e1 / e2 >= kRk4Factor && det <= kStraightDet && sr.simple,
          fmt("energy drift %.2e <= %.0e, RK4 factor %.1f >= %.0f, straight |det - 1| %.1e <= %.0e", energy, kEnergy,
              e1 / e2, kRk4Factor, det, kStraightDet));
}

}  // namespace

int main() {
  const std::pair<int, std::function<void()>> criteria[] = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      verdict(id, "error", false, e.what());
    }
  }
  std::printf("%d failing line(s)\n", failures);
  return failures == 0 ? 0 : 1;
}

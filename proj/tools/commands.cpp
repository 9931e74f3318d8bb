#include "commands.hpp"

#include "wdt/errors.hpp"
#include "wdt/io.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

namespace wdt::cli {

using nlohmann::json;

void RunContext::write(const std::string& name, const std::string& contents) {
  io::write_file(out_dir + "/" + name, contents);
  outputs.push_back(name);
}

namespace {

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

json values(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string csv(const CovectorField& f) {
  std::ostringstream os;
  io::write_field_csv(os, f);
  return os.str();
}

std::string csv(const ScalarField& s) {
  std::ostringstream os;
  io::write_field_csv(os, s);
  return os.str();
}

json simulate(RunContext& ctx) {
  const Pair p = build_field(ctx.cfg, ctx.ex);
  const RaySystem sys(ctx.ex.gen, ctx.ex.weight, ctx.ex.fan, ctx.ex.dom, ctx.ex.trace,
                      ctx.ex.threads);
  const Sinogram s = pair_forward(p, sys);
  std::ostringstream os;
  io::write_sinogram_csv(os, s);
  ctx.write("sinogram.csv", os.str());
  double max_abs = 0.0;
  for (double v : s.values) max_abs = std::max(max_abs, std::abs(v));
  json out = {{"entries", s.values.size()}, {"max_abs", max_abs}, {"norm_mu", norm_mu(s)},
              {"provenance", s.provenance}};
  if (ctx.cfg.str("field.kind") == "potential") {
    const double tol = ctx.cfg.num("solver.gauge_tol");
    out["gauge_check"] = {{"tolerance", tol}, {"max_abs", max_abs}, {"pass", max_abs <= tol}};
  }
  ctx.write("simulate.json", out.dump(2) + "\n");
  return out;
}

json decompose(RunContext& ctx) {
  const Pair p = build_field(ctx.cfg, ctx.ex);
  const Decomposition d = solenoidal_decompose(p.f);
  ctx.write("f_solenoidal.csv", csv(d.solenoidal));
  ctx.write("phi.csv", csv(d.potential));
  const double div = norm(dirichlet_divergence(d.solenoidal));
  json out = {{"norm_f", norm(p.f)},
              {"norm_solenoidal", norm(d.solenoidal)},
              {"norm_potential_gradient", norm(dirichlet_gradient(d.potential))},
              {"norm_phi", norm(d.potential)},
              {"divergence_residual", div}};
  ctx.write("decompose.json", out.dump(2) + "\n");
  return out;
}

EllipticReport elliptic(const RunContext& ctx) {
  EllipticCheckConfig ec;
  ec.n_x = ctx.cfg.integer("solver.elliptic_n_x");
  ec.n_theta = ctx.cfg.integer("solver.elliptic_n_theta");
  ec.threshold = ctx.cfg.num("solver.elliptic_threshold");
  return elliptic_margin(ctx.ex.weight, ctx.ex.gen, ctx.ex.dom, ec, ctx.ex.trace);
}

json check_elliptic(RunContext& ctx) {
  const EllipticReport r = elliptic(ctx);
  json out = {{"min_margin", r.min_margin},
              {"argmin_x", vec(r.argmin_x)},
              {"argmin_theta", vec(r.argmin_theta)},
              {"threshold", ctx.cfg.num("solver.elliptic_threshold")},
              {"verdict", r.pass ? "pass" : "fail"},
              {"message", r.message}};
  ctx.write("elliptic.json", out.dump(2) + "\n");
  return out;
}

json check_simple(RunContext& ctx) {
  const SimplicityReport r =
      simplicity_report(ctx.ex.gen, ctx.ex.dom, ctx.cfg.integer("solver.simple_samples"),
                        ctx.ex.trace, ctx.cfg.integer("solver.simple_dirs"));
  json out = {{"min_scaled_det", r.min_scaled_det},
              {"worst_x", vec(r.worst_x)},
              {"worst_t", r.worst_t},
              {"worst_theta", vec(r.worst_theta)},
              {"samples", r.samples},
              {"trapped", r.trapped},
              {"sign_changes", r.sign_changes},
              {"verdict", r.simple ? "simple" : "not_simple"}};
  ctx.write("simple.json", out.dump(2) + "\n");
  return out;
}

json symbol(RunContext& ctx) {
  const int n = ctx.cfg.integer("solver.symbol_n");
  if (n < 1) throw ConfigError("solver.symbol_n must be positive");
  double min_eig = std::numeric_limits<double>::infinity(), max_eig = 0.0;
  Vec2 arg_x = Vec2::Zero(), arg_xi = Vec2::Zero();
  for (const Vec2& x : sample_disk(ctx.ex.dom.center, ctx.ex.dom.radius_m, n)) {
    for (int k = 0; k < n; ++k) {
      const double a = (k + 0.5) * std::numbers::pi / n;
      const Vec2 xi(std::cos(a), std::sin(a));
      const SymbolReport s =
          principal_symbol(x, xi, ctx.ex.weight, ctx.ex.gen, ctx.ex.dom, ctx.ex.trace);
      max_eig = std::max(max_eig, s.restricted.trace());
      if (s.restricted_min_eigenvalue < min_eig) {
        min_eig = s.restricted_min_eigenvalue;
        arg_x = x;
        arg_xi = xi;
      }
    }
  }
  const double threshold = ctx.cfg.num("solver.elliptic_threshold");
  json out = {{"samples", n * n},
              {"min_restricted_eigenvalue", min_eig},
              {"max_restricted_trace", max_eig},
              {"argmin_x", vec(arg_x)},
              {"argmin_xi", vec(arg_xi)},
              {"threshold", threshold},
              {"verdict", min_eig > threshold ? "elliptic" : "degenerate"}};
  ctx.write("symbol.json", out.dump(2) + "\n");
  return out;
}

json nullspace(RunContext& ctx) {
  const RaySystem sys(ctx.ex.gen, ctx.ex.weight, ctx.ex.fan, ctx.ex.dom, ctx.ex.trace,
                      ctx.ex.threads);
  const RayOperator op(sys, ctx.ex.grid);
  const DenseOperator dense =
      assemble_dense(op, static_cast<std::size_t>(ctx.cfg.integer("solver.dense_limit")));
  SpectralConfig sc;
  sc.tau_rank = ctx.cfg.num("solver.tau_rank");
  const SpectralReport rep = spectral_analysis(dense, sc);
  json out = {{"pair_dofs", op.cols()},
              {"entries", op.rows()},
              {"tau_rank", rep.tau_rank},
              {"singular_values", values(rep.singular_values)},
              {"solenoidal_singular_values", values(rep.solenoidal_singular_values)},
              {"null_dim", rep.null_dim},
              {"solenoidal_null_dim", rep.solenoidal_null_dim},
              {"sigma_max", rep.sigma_max},
              {"sigma_min_raw", rep.sigma_min_raw},
              {"sigma_min_solenoidal", rep.sigma_min_solenoidal},
              {"norm_note", "C_discrete = 1/sigma_min on solenoidal pairs in the discrete L2 norm"}};
  try {
    out["C_discrete"] = stability_constant(rep);
    out["degenerate"] = false;
  } catch (const Degenerate&) {
    out["C_discrete"] = nullptr;
    out["degenerate"] = true;
  }
  ctx.write("nullspace.json", out.dump(2) + "\n");
  return out;
}

json reconstruct_cmd(RunContext& ctx) {
  const EllipticReport er = elliptic(ctx);
  if (!er.pass)
    std::cerr << "warning: elliptic condition fails (min margin " << er.min_margin
              << "); reconstructing anyway\n";
  const RaySystem sys(ctx.ex.gen, ctx.ex.weight, ctx.ex.fan, ctx.ex.dom, ctx.ex.trace,
                      ctx.ex.threads);
  const RayOperator op(sys, ctx.ex.grid);
  ReconstructionConfig rc;
  rc.tol = ctx.cfg.num("solver.tol");
  rc.max_iter = ctx.cfg.integer("solver.max_iter");

  const std::string data_file = ctx.cfg.str("field.sinogram_file");
  std::optional<Pair> truth;
  Sinogram s;
  if (!data_file.empty()) {
    std::istringstream is(io::read_file(data_file));
    try {
      s = io::read_sinogram_csv(is, ctx.ex.fan);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(data_file + ": " + e.what());
    }
  } else {
    const std::string source = ctx.cfg.str("field.data");
    if (source != "representative" && source != "raw")
      throw ConfigError("field.data must be representative or raw");
    truth = build_field(ctx.cfg, ctx.ex);
    s = pair_forward(source == "raw" ? *truth : solenoidal_representative(*truth), op);
  }
  const ReconstructionResult res = reconstruct(s, op, rc, truth ? &*truth : nullptr);
  ctx.write("recovered_f.csv", csv(res.recovered.f));
  ctx.write("recovered_phi.csv", csv(res.recovered.phi));
  json errors = json::object();
  if (res.error_f) errors = {{"f_solenoidal", *res.error_f}, {"phi", *res.error_phi}};
  json out = {{"iterations", res.iterations},
              {"residual", res.residual},
              {"tolerance", rc.tol},
              {"errors", errors},
              {"data", data_file.empty() ? ctx.cfg.str("field.data") : data_file},
              {"data_residuals", res.data_residuals},
              {"elliptic_margin", er.min_margin}};
  ctx.write("reconstruct.json", out.dump(2) + "\n");
  return out;
}

json perturb(RunContext& ctx) {
  const PerturbationFamily fam = build_perturbation(ctx.cfg, ctx.ex);
  PerturbationConfig pc;
  pc.power_iterations = ctx.cfg.integer("solver.power_iterations");
  pc.threads = ctx.ex.threads;
  pc.seed = ctx.cfg.u64("field.seed");
  std::vector<double> deltas = ctx.cfg.list("solver.deltas");
  PerturbationReport rep;
  try {
    rep = perturbation_study(fam, deltas, ctx.ex.grid, ctx.ex.fan, ctx.ex.trace, pc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver.deltas: ") + e.what());
  }
  json table = json::array();
  for (const PerturbationRow& r : rep.rows)
    table.push_back({{"delta", r.delta},
                     {"operator_difference", r.operator_difference},
                     {"ratio", r.ratio},
                     {"endpoint_deviation", r.endpoint_deviation},
                     {"endpoint_ratio", r.endpoint_ratio}});
  json out = {{"target", rep.name},
              {"perturbation_table", table},
              {"direction_sup_norms",
               {{"C0", rep.direction_norms[0]},
                {"C1", rep.direction_norms[1]},
                {"C2", rep.direction_norms[2]},
                {"C3", rep.direction_norms[3]}}}};
  ctx.write("perturb.json", out.dump(2) + "\n");
  return out;
}

const std::vector<std::pair<std::string, Command>>& table() {
  static const std::vector<std::pair<std::string, Command>> t = {
      {"simulate", simulate},         {"decompose", decompose}, {"check-elliptic", check_elliptic},
      {"check-simple", check_simple}, {"symbol", symbol},       {"nullspace", nullspace},
      {"reconstruct", reconstruct_cmd}, {"perturb", perturb},
  };
  return t;
}

}  // namespace

Command find_command(const std::string& name) {
  for (const auto& [n, c] : table())
    if (n == name) return c;
  return nullptr;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& entry : table()) v.push_back(entry.first);
    v.push_back("selftest");
    return v;
  }();
  return names;
}

}  // namespace wdt::cli

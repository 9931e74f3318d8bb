#include "experiment.hpp"

#include "wdt/io.hpp"

#include <sstream>

namespace wdt::cli {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

ScalarField load_scalar(const std::string& path, const GridPtr& grid) {
  std::istringstream is(io::read_file(path));
  try {
    return io::read_scalar_csv(is, grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

CovectorField load_covector(const std::string& path, const GridPtr& grid) {
  std::istringstream is(io::read_file(path));
  try {
    return io::read_covector_csv(is, grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Constant plus an optional gaussian.
ScalarFunction coefficient(double c0, double amplitude, const Vec2& x0, double width) {
  if (amplitude == 0.0) return ScalarFunction::constant(c0);
  return ScalarFunction::affine(c0, 1.0, ScalarFunction::gaussian(amplitude, x0, width));
}

ScalarFunction perturbation_direction(const Config& cfg) {
  const double width = cfg.num("solver.perturb_width");
  require(width > 0.0, "solver.perturb_width must be positive");
  return ScalarFunction::gaussian(1.0, {cfg.num("solver.perturb_x"), cfg.num("solver.perturb_y")},
                                  width);
}

CurveGenerator make_generator(const Config& cfg, const GridPtr& grid, double delta,
                              const ScalarFunction& direction) {
  const std::string kind = cfg.str("generator.kind");
  const double amp = cfg.num("generator.bump_amplitude");
  const Vec2 x0(cfg.num("generator.bump_x"), cfg.num("generator.bump_y"));
  const double width = cfg.num("generator.bump_width");
  require(width > 0.0, "generator.bump_width must be positive");
  ScalarFunction coef;
  if (kind == "straight") {
    if (delta == 0.0) return CurveGenerator::straight_line();
    return CurveGenerator::magnetic(ScalarFunction::affine(0.0, delta, direction));
  } else if (kind == "magnetic") {
    const std::string file = cfg.str("generator.b_file");
    if (!file.empty()) {
      const auto b = std::make_shared<ScalarField>(load_scalar(file, grid));
      coef = {[b](const Vec2& x) { return b->interpolate(x); }, nullptr};
    } else {
      coef = coefficient(cfg.num("generator.b"), amp, x0, width);
    }
  } else if (kind == "conformal") {
    coef = coefficient(cfg.num("generator.c"), amp, x0, width);
    for (const Vec2& x : sample_disk(grid->domain().center, grid->domain().radius_m1, 256))
      require(coef(x) > 0.0, "generator.c must stay positive on M1");
  } else {
    throw ConfigError("generator.kind must be straight, conformal or magnetic");
  }
  if (delta != 0.0) {
    auto base = coef;
    coef = {[base, delta, direction](const Vec2& x) { return base.value(x) + delta * direction(x); },
            base.gradient ? std::function<Vec2(const Vec2&)>([base, delta, direction](const Vec2& x) {
              return Vec2(base.gradient(x) + delta * direction.gradient(x));
            })
                          : nullptr};
  }
  return kind == "magnetic" ? CurveGenerator::magnetic(coef) : CurveGenerator::conformal(coef);
}

Weight make_weight(const Config& cfg, const GridPtr& grid, double delta,
                   const ScalarFunction& direction) {
  const std::string kind = cfg.str("weight.kind");
  const double scale = cfg.num("weight.scale");
  require(scale > 0.0, "weight.scale must be positive");
  Weight w;
  if (kind == "constant") {
    require(delta == 0.0, "weight perturbations need an attenuated weight");
    const double c = cfg.num("weight.value");
    require(c != 0.0, "weight.value must be nonzero");
    w = Weight::constant(c);
  } else if (kind == "attenuated") {
    std::function<double(const Vec2&)> sigma;
    const std::string file = cfg.str("weight.sigma_file");
    if (!file.empty()) {
      const auto s = std::make_shared<ScalarField>(load_scalar(file, grid));
      sigma = [s](const Vec2& x) { return s->interpolate(x); };
    } else {
      const double width = cfg.num("weight.sigma_width");
      require(width > 0.0, "weight.sigma_width must be positive");
      sigma = coefficient(cfg.num("weight.sigma"), cfg.num("weight.sigma_amplitude"),
                          {cfg.num("weight.sigma_x"), cfg.num("weight.sigma_y")}, width)
                  .value;
    }
    if (delta != 0.0) {
      auto base = sigma;
      sigma = [base, delta, direction](const Vec2& x) { return base(x) + delta * direction(x); };
    }
    // Attenuation per unit length: sigma(x, xi) = sigma(x) |xi|.
    w = Weight::attenuated([sigma](const Vec2& x, const Vec2& xi) { return sigma(x) * xi.norm(); });
  } else if (kind == "from_covector") {
    require(delta == 0.0, "weight perturbations need an attenuated weight");
    const double w0 = cfg.num("weight.value");
    require(w0 > 0.0, "weight.value (w0) must be positive for from_covector");
    const std::string file = cfg.str("weight.h_file");
    CovectorRule h;
    if (!file.empty()) {
      const auto f = std::make_shared<CovectorField>(load_covector(file, grid));
      h = [f](const Vec2& x) { return f->interpolate(x); };
    } else {
      const double h1 = cfg.num("weight.h1"), h2 = cfg.num("weight.h2");
      const double h12 = cfg.num("weight.h12"), h21 = cfg.num("weight.h21");
      h = [=](const Vec2& x) { return Vec2(h1 + h12 * x.y(), h2 + h21 * x.x() * x.y()); };
    }
    w = Weight::from_covector(h, w0);
  } else {
    throw ConfigError("weight.kind must be constant, attenuated or from_covector");
  }
  return scale == 1.0 ? w : w.scaled(scale);
}

}  // namespace

Experiment build_experiment(const Config& cfg) {
  Experiment ex;
  ex.dom.radius_m = cfg.num("domain.radius_m");
  ex.dom.radius_m1 = cfg.num("domain.radius_m1");
  ex.dom.center = Vec2(cfg.num("domain.center_x"), cfg.num("domain.center_y"));
  try {
    ex.dom.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int n = cfg.integer("grid.n");
  require(n >= 4, "grid.n must be at least 4");
  const double mask = cfg.num("grid.mask_radius");
  require(mask >= 0.0 && mask <= ex.dom.radius_m1, "grid.mask_radius must lie in [0, radius_m1]");
  ex.grid = make_grid(ex.dom, n, mask);

  const int np = cfg.integer("fan.n_points"), nd = cfg.integer("fan.n_dirs");
  require(np >= 4 && nd >= 2, "fan needs n_points >= 4 and n_dirs >= 2");
  ex.fan = std::make_shared<const Fan>(make_fan(ex.dom, np, nd));

  const double step = cfg.num("trace.step");
  require(step >= 0.0, "trace.step must be nonnegative");
  ex.trace.step = step > 0.0 ? step : 0.5 * ex.grid->spacing();
  ex.trace.boundary_tol = cfg.num("trace.boundary_tol");
  ex.trace.max_length = cfg.num("trace.max_length");
  require(ex.trace.boundary_tol > 0.0, "trace.boundary_tol must be positive");
  require(ex.trace.max_length > 0.0, "trace.max_length must be positive");

  ex.threads = cfg.integer("solver.threads");
  require(ex.threads >= 1, "solver.threads must be at least 1");
  require(cfg.num("solver.tol") > 0.0, "solver.tol must be positive");
  require(cfg.integer("solver.max_iter") >= 1, "solver.max_iter must be at least 1");
  require(cfg.num("solver.tau_rank") > 0.0, "solver.tau_rank must be positive");
  require(cfg.integer("solver.elliptic_n_x") >= 8 && cfg.integer("solver.elliptic_n_theta") >= 8,
          "elliptic sample counts must be at least 8");

  const ScalarFunction q = perturbation_direction(cfg);
  ex.gen = make_generator(cfg, ex.grid, 0.0, q);
  ex.weight = make_weight(cfg, ex.grid, 0.0, q);
  return ex;
}

Pair build_field(const Config& cfg, const Experiment& ex) {
  const std::string kind = cfg.str("field.kind");
  const double r = cfg.num("field.bump_radius");
  const int power = cfg.integer("field.bump_power");
  require(r > 0.0 && r <= ex.dom.radius_m, "field.bump_radius must lie in (0, radius_m]");
  require(power >= 1, "field.bump_power must be at least 1");
  Pair p(ex.grid);
  if (kind == "zero") return p;
  if (kind == "potential") {
    const ScalarFunction psi = ScalarFunction::bump(ex.dom.center, r, power);
    p.f = CovectorField::sample(ex.grid, psi.gradient);
    return p;
  }
  if (kind == "random") {
    const std::uint64_t seed = cfg.u64("field.seed");
    const int modes = cfg.integer("field.modes");
    require(modes >= 1, "field.modes must be at least 1");
    const auto a = ScalarFunction::random_smooth(seed, ex.dom.center, r, modes);
    const auto b = ScalarFunction::random_smooth(seed + 1, ex.dom.center, r, modes);
    const auto c = ScalarFunction::random_smooth(seed + 2, ex.dom.center, r, modes);
    p.f = CovectorField::sample(ex.grid, [&](const Vec2& x) { return Vec2(a(x), b(x)); });
    p.phi = ScalarField::sample(ex.grid, c.value);
    return p;
  }
  if (kind == "file") {
    const std::string f = cfg.str("field.f_file");
    require(!f.empty(), "field.kind = file needs field.f_file");
    p.f = load_covector(f, ex.grid);
    restrict_to_interior(p.f);
    const std::string phi = cfg.str("field.phi_file");
    if (!phi.empty()) {
      p.phi = load_scalar(phi, ex.grid);
      restrict_to_interior(p.phi);
    }
    return p;
  }
  throw ConfigError("field.kind must be random, potential, zero or file");
}

PerturbationFamily build_perturbation(const Config& cfg, const Experiment& ex) {
  const ScalarFunction q = perturbation_direction(cfg);
  const std::string target = cfg.str("solver.perturb_target");
  PerturbationFamily fam;
  fam.direction = q.value;
  const Config c = cfg;
  const GridPtr grid = ex.grid;
  if (target == "generator") {
    fam.name = "generator";
    const Weight w = ex.weight;
    fam.make = [c, grid, q, w](double d) { return System{make_generator(c, grid, d, q), w}; };
  } else if (target == "weight") {
    require(cfg.str("weight.kind") == "attenuated", "weight perturbations need weight.kind = attenuated");
    fam.name = "weight";
    const CurveGenerator g = ex.gen;
    fam.make = [c, grid, q, g](double d) { return System{g, make_weight(c, grid, d, q)}; };
  } else {
    throw ConfigError("solver.perturb_target must be generator or weight");
  }
  return fam;
}

}  // namespace wdt::cli

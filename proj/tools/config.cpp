#include "config.hpp"

#include <cstdio>
#include <sstream>

namespace wdt::cli {

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"domain.radius_m", "1", "radius of the support disk M"},
      {"domain.radius_m1", "1.25", "radius of the enclosing disk M1"},
      {"domain.center_x", "0", "disk center x"},
      {"domain.center_y", "0", "disk center y"},

      {"grid.n", "32", "cells per side of the node grid over the square around M1"},
      {"grid.mask_radius", "0", "radius of the dof mask (0 = radius_m)"},

      {"generator.kind", "straight", "straight | conformal | magnetic"},
      {"generator.b", "0", "constant magnetic strength"},
      {"generator.c", "1", "constant conformal factor"},
      {"generator.bump_amplitude", "0", "amplitude of a gaussian added to b or c"},
      {"generator.bump_x", "0", "gaussian center x"},
      {"generator.bump_y", "0", "gaussian center y"},
      {"generator.bump_width", "0.5", "gaussian width"},
      {"generator.b_file", "", "scalar field CSV for b on the config grid (magnetic)"},

      {"weight.kind", "constant", "constant | attenuated | from_covector"},
      {"weight.value", "1", "constant value, or w0 for from_covector"},
      {"weight.sigma", "1", "constant attenuation"},
      {"weight.sigma_amplitude", "0", "amplitude of a gaussian added to sigma"},
      {"weight.sigma_x", "0", "sigma gaussian center x"},
      {"weight.sigma_y", "0", "sigma gaussian center y"},
      {"weight.sigma_width", "0.5", "sigma gaussian width"},
      {"weight.sigma_file", "", "scalar field CSV for sigma on the config grid"},
      {"weight.h1", "0.5", "from_covector: h = (h1 + h12 y, h2 + h21 x y)"},
      {"weight.h2", "-0.3", "from_covector: see h1"},
      {"weight.h12", "0.25", "from_covector: see h1"},
      {"weight.h21", "0.25", "from_covector: see h1"},
      {"weight.h_file", "", "covector field CSV for h on the config grid"},
      {"weight.scale", "1", "positive factor applied to w"},

      {"fan.n_points", "64", "boundary points on the circle of radius radius_m1"},
      {"fan.n_dirs", "24", "inflow directions per boundary point"},

      {"trace.step", "0", "RK4 step (0 = half the grid spacing)"},
      {"trace.boundary_tol", "1e-12", "bisection tolerance for the exit point"},
      {"trace.max_length", "100", "arc length after which a curve counts as trapped"},

      {"field.kind", "random", "random | potential | zero | file"},
      {"field.seed", "1", "seed of the random smooth pair"},
      {"field.modes", "4", "cosine modes per axis of the random smooth pair"},
      {"field.bump_radius", "0.9", "support radius of bump-based fields"},
      {"field.bump_power", "3", "exponent of the bump (1 - |x|^2/r^2)^p"},
      {"field.f_file", "", "covector field CSV (kind = file)"},
      {"field.phi_file", "", "scalar field CSV (kind = file, optional)"},
      {"field.sinogram_file", "", "reconstruct from this sinogram CSV instead of simulating"},
      {"field.data", "representative",
       "reconstruct data source: representative (solenoidal pair of the field) | raw (the field)"},

      {"solver.threads", "1", "worker threads for curve tracing and operator products"},
      {"solver.tol", "1e-6", "CG tolerance on the relative normal-equation residual"},
      {"solver.max_iter", "500", "CG iteration limit"},
      {"solver.tau_rank", "1e-8", "relative singular value threshold for the null space"},
      {"solver.dense_limit", "4000", "largest pair dof count for dense assembly"},
      {"solver.gauge_tol", "1e-2", "simulate: bound on max |value| reported for gauge data"},
      {"solver.elliptic_n_x", "64", "elliptic check: spatial samples"},
      {"solver.elliptic_n_theta", "32", "elliptic check: direction samples"},
      {"solver.elliptic_threshold", "1e-6", "elliptic check: margin threshold"},
      {"solver.simple_samples", "64", "simplicity report: base points"},
      {"solver.simple_dirs", "16", "simplicity report: directions per base point"},
      {"solver.symbol_n", "20", "symbol sweep: points and covector angles per axis"},
      {"solver.perturb_target", "generator", "perturb: generator | weight"},
      {"solver.deltas", "0.01,0.001", "perturb: decreasing perturbation sizes"},
      {"solver.perturb_x", "0.2", "perturbation direction gaussian center x"},
      {"solver.perturb_y", "-0.1", "perturbation direction gaussian center y"},
      {"solver.perturb_width", "0.5", "perturbation direction gaussian width"},
      {"solver.power_iterations", "200", "perturb: power iteration limit"},

      {"output.dir", "out", "directory for all output files"},
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config::Config() {
  for (const KeySpec& k : schema()) values_[k.key] = k.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected section.key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::load_ini(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of a section");
    try {
      set(section + "." + trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::num(const std::string& key) const {
  const std::string& v = str(key);
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return d;
}

int Config::integer(const std::string& key) const {
  const std::string& v = str(key);
  std::size_t used = 0;
  int i = 0;
  try {
    i = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return i;
}

std::uint64_t Config::u64(const std::string& key) const {
  const std::string& v = str(key);
  std::size_t used = 0;
  std::uint64_t i = 0;
  try {
    i = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || v[0] == '-')
    throw ConfigError(key + ": not a nonnegative integer: '" + v + "'");
  return i;
}

bool Config::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + v + "'");
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  std::istringstream is(str(key));
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError(key + ": bad list entry '" + item + "'");
    out.push_back(d);
  }
  return out;
}

std::string Config::to_ini() const {
  std::ostringstream os;
  std::string section;
  for (const KeySpec& k : schema()) {
    const auto dot = k.key.find('.');
    const std::string sec = k.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << k.key.substr(dot + 1) << " = " << values_.at(k.key) << '\n';
  }
  return os.str();
}

std::string Config::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_ini()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wdt::cli

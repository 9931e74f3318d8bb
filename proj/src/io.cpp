#include "wdt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wdt::io {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

// Reads rows of a node CSV, checking the header and the node order.
template <typename Row>
void read_node_rows(std::istream& is, const Grid& g, const std::string& header, std::size_t cols,
                    Row&& row) {
  std::string line;
  if (!std::getline(is, line) || split(line) != split(header))
    throw std::invalid_argument("expected CSV header '" + header + "'");
  std::size_t idx = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != cols) throw std::invalid_argument("malformed CSV row: " + line);
    if (idx >= g.size()) throw std::invalid_argument("field CSV has more rows than grid nodes");
    const int i = std::stoi(cells[0]), j = std::stoi(cells[1]);
    if (i != g.col(idx) || j != g.row(idx))
      throw std::invalid_argument("field CSV rows are not in row-major node order");
    std::vector<double> vals;
    for (std::size_t c = 4; c < cols; ++c) vals.push_back(parse_double(cells[c]));
    row(idx, vals);
    ++idx;
  }
  if (idx != g.size()) throw std::invalid_argument("field CSV does not cover the grid");
}

}  // namespace

void write_field_csv(std::ostream& os, const CovectorField& f) {
  const Grid& g = *f.grid;
  os << "i,j,x,y,f1,f2\n";
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Vec2 x = g.node(idx);
    os << g.col(idx) << ',' << g.row(idx) << ',' << format_double(x.x()) << ','
       << format_double(x.y()) << ',' << format_double(f.f1[idx]) << ','
       << format_double(f.f2[idx]) << '\n';
  }
}

void write_field_csv(std::ostream& os, const ScalarField& s) {
  const Grid& g = *s.grid;
  os << "i,j,x,y,phi\n";
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Vec2 x = g.node(idx);
    os << g.col(idx) << ',' << g.row(idx) << ',' << format_double(x.x()) << ','
       << format_double(x.y()) << ',' << format_double(s.values[idx]) << '\n';
  }
}

CovectorField read_covector_csv(std::istream& is, GridPtr grid) {
  CovectorField f(grid);
  read_node_rows(is, *grid, "i,j,x,y,f1,f2", 6, [&](std::size_t idx, const std::vector<double>& v) {
    f.f1[idx] = v[0];
    f.f2[idx] = v[1];
  });
  return f;
}

ScalarField read_scalar_csv(std::istream& is, GridPtr grid) {
  ScalarField s(grid);
  read_node_rows(is, *grid, "i,j,x,y,phi", 5,
                 [&](std::size_t idx, const std::vector<double>& v) { s.values[idx] = v[0]; });
  return s;
}

void write_sinogram_csv(std::ostream& os, const Sinogram& s) {
  os << "entry_index,bx,by,thx,thy,mu,value\n";
  for (std::size_t e = 0; e < s.values.size(); ++e) {
    const FanEntry& f = s.fan->entries[e];
    os << e << ',' << format_double(f.x.x()) << ',' << format_double(f.x.y()) << ','
       << format_double(f.theta.x()) << ',' << format_double(f.theta.y()) << ','
       << format_double(f.mu) << ',' << format_double(s.values[e]) << '\n';
  }
}

Sinogram read_sinogram_csv(std::istream& is, FanPtr fan) {
  std::string line;
  if (!std::getline(is, line) || split(line) != split("entry_index,bx,by,thx,thy,mu,value"))
    throw std::invalid_argument("expected sinogram CSV header");
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 7) throw std::invalid_argument("malformed sinogram row: " + line);
    const std::size_t e = values.size();
    if (e >= fan->size() || std::stoul(cells[0]) != e)
      throw std::invalid_argument("sinogram rows do not match the fan");
    const FanEntry& f = fan->entries[e];
    const double geom[5] = {f.x.x(), f.x.y(), f.theta.x(), f.theta.y(), f.mu};
    for (int c = 0; c < 5; ++c)
      if (std::abs(parse_double(cells[c + 1]) - geom[c]) > 1e-12 * (1.0 + std::abs(geom[c])))
        throw std::invalid_argument("sinogram geometry does not match the fan at entry " +
                                    std::to_string(e));
    values.push_back(parse_double(cells[6]));
  }
  if (values.size() != fan->size()) throw std::invalid_argument("sinogram is shorter than the fan");
  return {std::move(fan), std::move(values), "file"};
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << contents;
  if (!os) throw std::runtime_error("failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace wdt::io

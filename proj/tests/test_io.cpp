#include "doctest.h"
#include "support.hpp"

#include "wdt/io.hpp"

#include <limits>
#include <sstream>

using namespace wdt;
using wdt::test::random_pair;
using wdt::test::random_vector;
using wdt::test::shared_fan;

TEST_SUITE("io") {

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, -2.5e17, std::numeric_limits<double>::max()})
    CHECK(std::stod(io::format_double(v)) == v);
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("field CSV round-trips") {
  const GridPtr g = make_grid(Domain{}, 10);
  const Pair p = random_pair(g, 5);
  std::stringstream fs, ss;
  io::write_field_csv(fs, p.f);
  io::write_field_csv(ss, p.phi);
  const CovectorField f = io::read_covector_csv(fs, g);
  const ScalarField s = io::read_scalar_csv(ss, g);
  CHECK(f.f1 == p.f.f1);
  CHECK(f.f2 == p.f.f2);
  CHECK(s.values == p.phi.values);
}

TEST_CASE("field CSV errors") {
  const GridPtr g = make_grid(Domain{}, 10);
  const GridPtr other = make_grid(Domain{}, 12);
  std::stringstream fs;
  io::write_field_csv(fs, random_pair(g, 5).f);
  const std::string text = fs.str();
  std::stringstream wrong_grid(text), wrong_kind(text), bad_header("a,b,c\n");
  CHECK_THROWS_AS(io::read_covector_csv(wrong_grid, other), std::invalid_argument);
  CHECK_THROWS_AS(io::read_scalar_csv(wrong_kind, g), std::invalid_argument);
  CHECK_THROWS_AS(io::read_covector_csv(bad_header, g), std::invalid_argument);
}

TEST_CASE("sinogram CSV round-trips and checks the fan") {
  const auto fan = shared_fan(Domain{}, 8, 4);
  const Eigen::VectorXd v = random_vector(static_cast<Eigen::Index>(fan->size()), 6);
  const Sinogram s(fan, std::vector<double>(v.data(), v.data() + v.size()));
  std::stringstream out;
  io::write_sinogram_csv(out, s);
  std::stringstream in(out.str()), mismatch(out.str());
  CHECK(io::read_sinogram_csv(in, fan).values == s.values);
  CHECK_THROWS_AS(io::read_sinogram_csv(mismatch, shared_fan(Domain{}, 8, 2)), std::invalid_argument);
}

}

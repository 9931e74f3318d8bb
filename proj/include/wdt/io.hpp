#pragma once

#include "wdt/fields.hpp"
#include "wdt/transform.hpp"

#include <iosfwd>
#include <string>

namespace wdt::io {

/// Shortest text that reads back to the same double.
std::string format_double(double v);

// Field CSV: header i,j,x,y,f1,f2 (or i,j,x,y,phi), one row per node in
// row-major order.
void write_field_csv(std::ostream& os, const CovectorField& f);
void write_field_csv(std::ostream& os, const ScalarField& s);
CovectorField read_covector_csv(std::istream& is, GridPtr grid);
ScalarField read_scalar_csv(std::istream& is, GridPtr grid);

// Sinogram CSV: header entry_index,bx,by,thx,thy,mu,value.
void write_sinogram_csv(std::ostream& os, const Sinogram& s);
/// Reads values for the given fan; the geometry columns must match it.
Sinogram read_sinogram_csv(std::istream& is, FanPtr fan);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace wdt::io

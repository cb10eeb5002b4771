#pragma once

#include <iosfwd>
#include <string>

#include "pcf/scm.hpp"

namespace pcf {

/// Header x0..x{d-1},a,y,u0..u{d-1},xcf0..xcf{d-1}. Floats are written with
/// 17 significant digits; hidden fields of synthetic rows are left empty.
void write_dataset_csv(std::ostream& os, const Dataset& ds);
void write_dataset_csv(const std::string& path, const Dataset& ds);

Dataset read_dataset_csv(std::istream& is, Task task);
Dataset read_dataset_csv(const std::string& path, Task task);

/// Shortest-round-trip-safe decimal (printf %.17g).
std::string format_double(double v);

}  // namespace pcf

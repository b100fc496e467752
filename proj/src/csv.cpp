#include "galam/csv.hpp"

#include <cmath>
#include <cstdio>

namespace galam::csv {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_meta(std::ostream& out, const std::string& key, const std::string& value) {
  out << "# " << key << '=' << value << '\n';
}

}  // namespace galam::csv

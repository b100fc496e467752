#pragma once

#include <cstdint>
#include <ostream>
#include <string>

namespace galam::csv {

/// 17 significant digits, '.' decimal point, "nan"/"inf" for non-finite.
std::string format_double(double x);

/// Writes "# key=value" metadata lines.
void write_meta(std::ostream& out, const std::string& key, const std::string& value);

}  // namespace galam::csv

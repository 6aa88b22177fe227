#include "micdist/csv.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>

namespace micdist {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double amplitude_db(double ratio) {
  return 20.0 * std::log10(std::max(std::abs(ratio), 1e-30));
}

}  // namespace micdist

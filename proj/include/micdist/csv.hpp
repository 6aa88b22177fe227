#pragma once

#include <string>

namespace micdist {

// Locale-independent, round-trippable-enough formatting for CSV cells
// (12 significant digits). Non-finite values print as "nan"/"inf"/"-inf".
std::string format_number(double value);

// 20 log10(ratio), with ratios below 1e-30 pinned to -600 dB so that CSV
// cells stay finite.
double amplitude_db(double ratio);

}  // namespace micdist

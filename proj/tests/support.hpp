#pragma once

#include <cmath>
#include <cstddef>

// |estimate - truth| in units of the standard error sd / sqrt(n).
inline double z_score(double estimate, double truth, double sd, std::size_t n) {
  return std::abs(estimate - truth) / (sd / std::sqrt(static_cast<double>(n)));
}

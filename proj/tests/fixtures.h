#pragma once

#include "edg/kernel.h"

#include <cmath>

namespace fixture {

// k^0.7 (j+1)^0.3 is bounded by 0.7k + 0.3(j+1) <= k + j + 1.
inline edg::Kernel power_kernel() {
  return edg::Kernel::separable(
      "power", [](edg::Index k) { return std::pow(double(k), 0.7); },
      [](edg::Index j) { return std::pow(double(j + 1), 0.3); }, 1.0);
}

// sqrt(k(j+1)) + 1, not of product form.
inline edg::Kernel root_kernel() {
  return edg::Kernel(
      "root", [](edg::Index k, edg::Index j) { return std::sqrt(double(k) * double(j + 1)) + 1.0; }, 1.0);
}

}  // namespace fixture

#pragma once

#include "cfa/linalg.hpp"

namespace cfa {

// max over rows of `a` of the minimum Euclidean distance to any row of `b`.
// Asymmetric. Serial reference and parallel default agree bit for bit.
double directed_hausdorff_serial(const Matrix& a, const Matrix& b);
double directed_hausdorff(const Matrix& a, const Matrix& b);

}  // namespace cfa

#pragma once

#include "ptpb/types.hpp"

namespace ptpb {

/// Largest singular value of a rectangular matrix.
/// Exact SVD for small matrices, deterministic power iteration on A^T A above.
double spectral_norm(const Mat& a);

/// Smallest and largest eigenvalues of a symmetric matrix.
struct EigRange {
  double lo = 0.0;
  double hi = 0.0;
};
EigRange symmetric_eig_range(const Mat& a);

}  // namespace ptpb

#include "ptpb/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

#include "ptpb/exceptions.hpp"

namespace ptpb {

double spectral_norm(const Mat& a) {
  if (a.size() == 0) throw InvalidArgumentError("spectral_norm: empty matrix");
  if (!all_finite(a)) throw InvalidArgumentError("spectral_norm: non-finite entries");
  if (std::max(a.rows(), a.cols()) <= 3) {
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
  }
  // Power iteration on the Gram matrix with a fixed, deterministic start vector.
  const Mat gram = a.transpose() * a;
  Vec v = Vec::Ones(gram.rows());
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vec w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(gram * w);
    const bool converged = std::abs(next - lambda) <= 1e-14 * std::max(1.0, std::abs(next));
    v = w;
    lambda = next;
    if (converged && it > 2) break;
  }
  return std::sqrt(std::max(0.0, lambda));
}

EigRange symmetric_eig_range(const Mat& a) {
  if (a.rows() != a.cols() || a.size() == 0)
    throw InvalidArgumentError("symmetric_eig_range: matrix must be square and nonempty");
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw InvalidArgumentError("symmetric_eig_range: eigen decomposition failed");
  const Vec& ev = es.eigenvalues();
  return EigRange{ev(0), ev(ev.size() - 1)};
}

}  // namespace ptpb

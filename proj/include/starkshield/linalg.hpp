#pragma once

#include <complex>

#include <Eigen/Core>

namespace starkshield {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;
using Matrix3 = Eigen::Matrix3cd;
using Matrix4 = Eigen::Matrix4cd;
using Vector3 = Eigen::Vector3cd;

/// Largest absolute row sum; an upper bound on the spectral norm.
inline double row_sum_norm(const Matrix3& m) {
  double best = 0.0;
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < 3; ++j) row += std::abs(m(i, j));
    best = row > best ? row : best;
  }
  return best;
}

inline double hermiticity_error(const Matrix3& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace starkshield

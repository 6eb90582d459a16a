#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace cmbf::conic::detail {

// svec packing of real symmetric d x d matrices: diagonal first is NOT
// used; ordering is column-major upper triangle (r <= c), off-diagonal
// entries scaled by sqrt(2) so that svec(A)'svec(B) = tr(AB).
inline int svec_len(int d) { return d * (d + 1) / 2; }

inline int svec_index(int r, int c, int d) {
  // r <= c, column-major upper triangle
  (void)d;
  return c * (c + 1) / 2 + r;
}

inline Eigen::VectorXd svec(const Eigen::MatrixXd& A) {
  const int d = static_cast<int>(A.rows());
  Eigen::VectorXd v(svec_len(d));
  const double s2 = std::sqrt(2.0);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r)
      v(svec_index(r, c, d)) = (r == c) ? A(r, c) : s2 * A(r, c);
  return v;
}

inline Eigen::MatrixXd smat(const Eigen::VectorXd& v, int d) {
  Eigen::MatrixXd A(d, d);
  const double is2 = 1.0 / std::sqrt(2.0);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) {
      const double x = v(svec_index(r, c, d));
      if (r == c) {
        A(r, c) = x;
      } else {
        A(r, c) = A(c, r) = is2 * x;
      }
    }
  return A;
}

}  // namespace cmbf::conic::detail

// Small dense linear algebra carriers shared by the whole library.
//
// Conventions used throughout:
//   * Mat4 carries both Lie-algebra elements (trace-free) and group elements
//     (det 1) of the 4x4 special linear group.
//   * The norm on 4x4 matrices is the entrywise sup norm; the inner product
//     is <X,Y> = trace(X Y^t).  All orthogonal projections use the latter,
//     all covering/energy computations use the former.
//   * Vec9 carries coordinates of a point of the 9-dimensional complement
//     representation in the weight-orthonormal basis (see weight_rep.hpp).
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace r9 {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Entrywise sup norm on 4x4 matrices (the default norm of the library).
inline double sup_norm(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

// Entrywise sup norm on weight coordinates.
inline double sup_norm(const Vec9& v) { return v.cwiseAbs().maxCoeff(); }

// Trace-form inner product <X,Y> = trace(X Y^t); the associated Euclidean
// norm coincides with the Frobenius norm.
inline double trace_dot(const Mat4& x, const Mat4& y) {
  return (x.cwiseProduct(y)).sum();
}

inline double trace_norm(const Mat4& x) { return std::sqrt(trace_dot(x, x)); }

// Elementary matrix E_ij (1 at row i, col j; zero-based indices).
inline Mat4 elem4(int i, int j) {
  Mat4 m = Mat4::Zero();
  m(i, j) = 1.0;
  return m;
}

}  // namespace r9

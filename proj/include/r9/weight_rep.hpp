// The 9-dimensional complement representation in weight coordinates: the
// graded orthonormal basis (weights -2..2 with multiplicities 1,2,3,2,1),
// the adjoint actions of the horospherical and diagonal subgroups as 9x9
// matrices, the flag projections, and principal-angle computations.
#pragma once

#include "r9/form.hpp"
#include "r9/lie_core.hpp"
#include "r9/linalg.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace r9 {

// Weight of each basis slot, in ascending order.
inline constexpr std::array<int, 9> kWeights = {-2, -1, -1, 0, 0, 0, 1, 1, 2};

// First slot index of each weight -2..2 (and one-past-the-end 9).
inline constexpr std::array<int, 6> kWeightOffsets = {0, 1, 3, 6, 8, 9};

// Multiplicities of the weights -2..2.
inline constexpr std::array<int, 5> kWeightDims = {1, 2, 3, 2, 1};

// Dimension of the flag piece spanned by weights >= lambda.
inline int flag_dim(int lambda) {
  if (lambda < -2 || lambda > 2) throw std::out_of_range("flag_dim: lambda");
  return 9 - kWeightOffsets[lambda + 2];
}

// Orthonormal basis of the (-1)-eigenspace of sigma, graded by the weight of
// the adjoint action of the diagonal-flow generator.  Construction is
// deterministic: the explicit coordinate matrices of each form, listed per
// weight in a fixed order, then Gram-Schmidt within each weight block under
// the trace form.
struct WeightBasis {
  Form form;
  std::array<Mat4, 9> vectors;

  Vec9 to_coords(const Mat4& x) const {
    Vec9 c;
    for (int i = 0; i < 9; ++i) c(i) = trace_dot(x, vectors[i]);
    return c;
  }

  Mat4 from_coords(const Vec9& c) const {
    Mat4 x = Mat4::Zero();
    for (int i = 0; i < 9; ++i) x += c(i) * vectors[i];
    return x;
  }

  static const WeightBasis& get(FormTag tag);
};

namespace detail {

inline std::array<Mat4, 9> raw_weight_matrices(FormTag tag) {
  std::array<Mat4, 9> m;
  if (tag == FormTag::Sig22) {
    // Elements are block matrices [[A,B],[C,-A]] with trace-free 2x2 blocks
    // A (diagonal blocks), B (upper right), C (lower left).  Slots are
    // ordered by weight; superscripts +/0/- denote the strictly upper,
    // diagonal and strictly lower block parts.
    Mat4 a0 = Mat4::Zero();
    a0.diagonal() << 1, -1, -1, 1;
    m[0] = elem4(3, 0);                // C^-   weight -2
    m[1] = elem4(1, 0) - elem4(3, 2);  // A^-   weight -1
    m[2] = elem4(2, 0) - elem4(3, 1);  // C^0   weight -1
    m[3] = a0;                         // A^0   weight  0
    m[4] = elem4(1, 2);                // B^-   weight  0
    m[5] = elem4(2, 1);                // C^+   weight  0
    m[6] = elem4(0, 1) - elem4(2, 3);  // A^+   weight  1
    m[7] = elem4(0, 2) - elem4(1, 3);  // B^0   weight  1
    m[8] = elem4(0, 3);                // B^+   weight  2
  } else {
    // Elements are parametrized by nine coordinates a1..a9 placed as
    //   [[ a4,  a2,  a3,       a1],
    //    [ a7,  a5,  a6,      -a2],
    //    [ a8,  a6, -2a4-a5,  -a3],
    //    [ a9, -a7, -a8,       a4]].
    Mat4 a4 = Mat4::Zero();
    a4.diagonal() << 1, 0, -2, 1;
    Mat4 a5 = Mat4::Zero();
    a5.diagonal() << 0, 1, -1, 0;
    m[0] = elem4(3, 0);                // a9  weight -2
    m[1] = elem4(1, 0) - elem4(3, 1);  // a7  weight -1
    m[2] = elem4(2, 0) - elem4(3, 2);  // a8  weight -1
    m[3] = a4;                         // a4  weight  0
    m[4] = a5;                         // a5  weight  0
    m[5] = elem4(1, 2) + elem4(2, 1);  // a6  weight  0
    m[6] = elem4(0, 1) - elem4(1, 3);  // a2  weight  1
    m[7] = elem4(0, 2) - elem4(2, 3);  // a3  weight  1
    m[8] = elem4(0, 3);                // a1  weight  2
  }
  return m;
}

}  // namespace detail

inline const WeightBasis& WeightBasis::get(FormTag tag) {
  auto build = [](FormTag t) {
    WeightBasis wb{Form::from_tag(t), {}};
    auto raw = detail::raw_weight_matrices(t);
    // Gram-Schmidt within each weight block (blocks are already mutually
    // orthogonal because distinct weights occupy disjoint matrix entries).
    for (int block = 0; block < 5; ++block) {
      int begin = kWeightOffsets[block], end = kWeightOffsets[block + 1];
      for (int i = begin; i < end; ++i) {
        Mat4 v = raw[i];
        for (int j = begin; j < i; ++j)
          v -= trace_dot(v, wb.vectors[j]) * wb.vectors[j];
        wb.vectors[i] = v / trace_norm(v);
      }
    }
    return wb;
  };
  static const WeightBasis sig22 = build(FormTag::Sig22);
  static const WeightBasis sig31 = build(FormTag::Sig31);
  return tag == FormTag::Sig22 ? sig22 : sig31;
}

// Matrix of Ad(u_{r,s}) on the representation in the weight basis, computed
// by conjugating the basis matrices (no symbolic transcription).  Unipotent;
// entries map each weight slot only to slots of equal or higher weight.
inline Mat9 ad_u(const Form& f, double r, double s) {
  const WeightBasis& wb = WeightBasis::get(f.tag);
  Mat4 u = u_elem(f, r, s);
  Mat4 uinv = u_elem(f, -r, -s);
  Mat9 m;
  for (int j = 0; j < 9; ++j) {
    Mat4 conj = u * wb.vectors[j] * uinv;
    m.col(j) = wb.to_coords(conj);
  }
  return m;
}

// Matrix of Ad applied with the transposed element u_{r,s}^t; in the
// orthonormal weight basis this is the transpose of ad_u.
inline Mat9 ad_ut(const Form& f, double r, double s) {
  const WeightBasis& wb = WeightBasis::get(f.tag);
  Mat4 u = u_elem(f, r, s).transpose();
  Mat4 uinv = u_elem(f, -r, -s).transpose();
  Mat9 m;
  for (int j = 0; j < 9; ++j) {
    Mat4 conj = u * wb.vectors[j] * uinv;
    m.col(j) = wb.to_coords(conj);
  }
  return m;
}

// Matrix of Ad(a_t): diagonal with entries e^{lambda t} per weight slot.
inline Mat9 ad_a(const Form&, double t) {
  Mat9 m = Mat9::Zero();
  for (int i = 0; i < 9; ++i) m(i, i) = std::exp(kWeights[i] * t);
  return m;
}

// Orthogonal projection onto the flag piece of weights >= lambda: zeroes
// every coordinate of lower weight.
inline Vec9 pi_flag(int lambda, const Vec9& w) {
  if (lambda < -2 || lambda > 2) throw std::out_of_range("pi_flag: lambda");
  Vec9 out = w;
  for (int i = 0; i < kWeightOffsets[lambda + 2]; ++i) out(i) = 0.0;
  return out;
}

// Projection composed with the horospherical action.
inline Vec9 pi_u(const Form& f, int lambda, double r, double s,
                 const Vec9& w) {
  return pi_flag(lambda, ad_u(f, r, s) * w);
}

struct precondition_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Angle between subspaces: the norm of the wedge of the concatenated
// orthonormal bases, computed as the square root of the Gram determinant.
// Equals |det| of the stacked matrix when the dimensions sum to 9; always
// in [0, 1].
inline double subspace_angle(const std::vector<std::vector<Vec9>>& bases) {
  int total = 0;
  for (const auto& b : bases) total += static_cast<int>(b.size());
  if (total > 9)
    throw precondition_error("subspace_angle: dimensions exceed 9");
  MatX v(9, total);
  int col = 0;
  for (const auto& b : bases) {
    for (size_t i = 0; i < b.size(); ++i) {
      for (size_t j = 0; j < i; ++j)
        if (std::abs(b[i].dot(b[j])) > 1e-10)
          throw precondition_error("subspace_angle: basis not orthonormal");
      if (std::abs(b[i].norm() - 1.0) > 1e-10)
        throw precondition_error("subspace_angle: basis not orthonormal");
      v.col(col++) = b[i];
    }
  }
  MatX gram = v.transpose() * v;
  double det = gram.determinant();
  return det <= 0.0 ? 0.0 : std::sqrt(det);
}

// Orthonormal basis (as coordinate vectors) of the flag piece of weights
// >= lambda: the corresponding coordinate axes.
inline std::vector<Vec9> flag_basis(int lambda) {
  std::vector<Vec9> out;
  for (int i = kWeightOffsets[lambda + 2]; i < 9; ++i)
    out.push_back(Vec9::Unit(i));
  return out;
}

// Orthonormalize the columns of a 9xk matrix (modified Gram-Schmidt; columns
// assumed independent).
inline std::vector<Vec9> orthonormal_columns(const MatX& m) {
  std::vector<Vec9> out;
  for (int j = 0; j < m.cols(); ++j) {
    Vec9 v = m.col(j);
    for (const auto& prev : out) v -= v.dot(prev) * prev;
    double n = v.norm();
    if (n > 1e-12) out.push_back(v / n);
  }
  return out;
}

}  // namespace r9

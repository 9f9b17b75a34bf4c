// The two quadratic forms on R^4 whose special orthogonal groups sit inside
// SL4 as the symmetric subgroups studied by this library, together with the
// involution matrices defining the corresponding Lie-algebra involutions.
#pragma once

#include "r9/linalg.hpp"

#include <stdexcept>
#include <string>

namespace r9 {

enum class FormTag { Sig22, Sig31 };

inline std::string to_string(FormTag t) {
  return t == FormTag::Sig22 ? "sig22" : "sig31";
}

// A quadratic form Q on R^4, evaluated as Q(x) = <x, q_matrix x>, plus the
// involutive matrix q_tilde (q_tilde^2 = Id) used by the Lie-algebra
// involution sigma(x) = -q_tilde x^t q_tilde.
struct Form {
  FormTag tag;
  Mat4 q_matrix;  // symmetric matrix of Q (off-diagonal halving)
  Mat4 q_tilde;   // involution matrix, proportional to q_matrix

  double quad(const Vec4& x) const { return x.dot(q_matrix * x); }

  // Signature (2,2): Q(x) = x2*x3 - x1*x4.
  static Form sig22() {
    Form f;
    f.tag = FormTag::Sig22;
    f.q_matrix = Mat4::Zero();
    f.q_matrix(0, 3) = f.q_matrix(3, 0) = -0.5;
    f.q_matrix(1, 2) = f.q_matrix(2, 1) = 0.5;
    f.q_tilde = -2.0 * f.q_matrix;  // antidiag(1,-1,-1,1), squares to Id
    return f;
  }

  // Signature (3,1): Q(x) = x2^2 + x3^2 - 2*x1*x4.
  static Form sig31() {
    Form f;
    f.tag = FormTag::Sig31;
    f.q_matrix = Mat4::Zero();
    f.q_matrix(1, 1) = f.q_matrix(2, 2) = 1.0;
    f.q_matrix(0, 3) = f.q_matrix(3, 0) = -1.0;
    f.q_tilde = -f.q_matrix;  // squares to Id
    return f;
  }

  static Form from_tag(FormTag t) {
    return t == FormTag::Sig22 ? sig22() : sig31();
  }
};

struct form_mismatch_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_form(const Form& f, FormTag expected, const char* what) {
  if (f.tag != expected)
    throw form_mismatch_error(std::string(what) + ": unsupported form " +
                              to_string(f.tag));
}

}  // namespace r9

#pragma once

#include "conflab/linalg.hpp"

namespace conflab {

// A long matrix product held as U·diag(exp l)·Vᵀ with U, V orthogonal and the
// singular values kept as logs. Updates are one-sided Jacobi sweeps on columns
// carried as (unit vector, log scale), so neither overflow nor loss of the small
// singular values occurs however long the product grows.
class ScaledProduct {
 public:
  ScaledProduct() = default;
  explicit ScaledProduct(int dim);
  static ScaledProduct from_matrix(const Matrix& m);

  void left_multiply(const Matrix& b);   // this <- b · this
  void right_multiply(const Matrix& b);  // this <- this · b

  int dim() const { return dim_; }
  const Matrix& left_vectors() const { return u_; }
  const Matrix& right_vectors() const { return v_; }
  const Vector& log_values() const { return l_; }
  double log_value(int j) const { return l_(j); }

  SingularData singular_data() const;
  // Dense U·diag(exp(l - shift))·Vᵀ; only safe when the spread of l is moderate.
  Matrix dense(double log_shift = 0.0) const;
  // Log norm of the image of v plus the unit direction of that image.
  double apply_log(const Vector& v, Vector* direction = nullptr) const;

 private:
  int dim_ = 0;
  int updates_ = 0;
  Matrix u_, v_;
  Vector l_;
};

// One-sided Jacobi on columns g_j = exp(s_j)·c_j. Columns of c are normalized on exit,
// scales written to s, and the accumulated rotation multiplied into v from the right.
void scaled_jacobi(Matrix& c, Vector& s, Matrix& v);

}  // namespace conflab

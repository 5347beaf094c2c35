#pragma once

#include "conflab/linalg.hpp"

namespace conflab {

// Orthonormal basis for the column span (columns assumed independent).
Matrix orthonormalize(const Matrix& cols);
// Orthonormal basis for the orthogonal complement of an orthonormal basis.
Matrix complement(const Matrix& basis);
bool is_orthonormal(const Matrix& basis, double tol = 1e-10);

// Largest principal angle between subspaces of equal dimension.
double max_principal_angle(const Matrix& a, const Matrix& b);
// Smallest principal angle.
double min_principal_angle(const Matrix& a, const Matrix& b);

// Orthonormal basis of a ∩ b of the requested dimension, taking the best-aligned
// directions. Both inputs orthonormal.
Matrix intersect(const Matrix& a, const Matrix& b, int dim);

// |det(G⊥ᵀ·orth(H))| for dim H + dim G = d. Zero iff H meets G.
double subspace_corner(const Matrix& h, const Matrix& g);

// Deterministic orthonormal basis of span(basis): projection of fixed reference
// columns, orthonormalized.
Matrix canonical_basis(const Matrix& basis, const Matrix& reference);

}  // namespace conflab

#pragma once

#include "h2mg/types.hpp"

// Dense reference routines. Deliberately independent of the hierarchical
// code so that equivalence tests compare two separate implementations.
namespace h2mg::oracle {

/// Cholesky first, partial-pivot LU when Cholesky fails. Throws
/// NumericalError when A is singular to working precision.
Vector dense_solve(const Matrix& A, const Vector& b);

/// U^T A V. With one basis argument, U^T A U.
Matrix dense_galerkin(const Matrix& A, const Matrix& U, const Matrix& V);
Matrix dense_galerkin(const Matrix& A, const Matrix& U);

/// True iff a Cholesky factorization completes with positive pivots.
bool spd_check(const Matrix& A);

/// Plain conjugate gradients for exactly `iters` steps (stops early only
/// when the residual vanishes).
Vector dense_cg(const Matrix& A, const Vector& b, const Vector& x0, int iters);

/// sqrt(e^T A e) for e = x - x_ref.
double a_norm_error(const Matrix& A, const Vector& x, const Vector& x_ref);

}  // namespace h2mg::oracle

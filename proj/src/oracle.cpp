#include "h2mg/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace h2mg::oracle {

Vector dense_solve(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw std::invalid_argument("dense_solve: dimension mismatch");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() == Eigen::Success) return llt.solve(b);

  Eigen::FullPivLU<Matrix> rank_probe(A);
  if (!rank_probe.isInvertible()) throw NumericalError("dense_solve: matrix is singular");
  return Eigen::PartialPivLU<Matrix>(A).solve(b);
}

Matrix dense_galerkin(const Matrix& A, const Matrix& U, const Matrix& V) {
  if (A.rows() != U.rows() || A.cols() != V.rows())
    throw std::invalid_argument("dense_galerkin: dimension mismatch");
  return U.transpose() * A * V;
}

Matrix dense_galerkin(const Matrix& A, const Matrix& U) { return dense_galerkin(A, U, U); }

bool spd_check(const Matrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("spd_check: matrix not square");
  // Eigen's LLT reports NumericalIssue on the first pivot <= 0.
  if (!A.allFinite()) return false;
  return Eigen::LLT<Matrix>(A).info() == Eigen::Success;
}

Vector dense_cg(const Matrix& A, const Vector& b, const Vector& x0, int iters) {
  Vector x = x0;
  Vector r = b - A * x;
  Vector p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < iters && rr > 0.0; ++it) {
    const Vector Ap = A * p;
    const double alpha = rr / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

double a_norm_error(const Matrix& A, const Vector& x, const Vector& x_ref) {
  const Vector e = x - x_ref;
  return std::sqrt(std::max(0.0, e.dot(A * e)));
}

}  // namespace h2mg::oracle

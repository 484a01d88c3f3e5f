#include "h2mg/cg.hpp"

#include <cmath>
#include <stdexcept>

namespace h2mg {

namespace {
void check_finite(double v, int iteration) {
  if (!std::isfinite(v))
    throw NumericalError("CG diverged: non-finite value at iteration " +
                         std::to_string(iteration));
}
}  // namespace

Vector cg_iterate(const LinearOperator& op, const Vector& b, const Vector& x0, int iters,
                  int* applies) {
  if (iters < 0) throw std::invalid_argument("cg_iterate: iters < 0");
  if (x0.size() != b.size()) throw std::invalid_argument("cg_iterate: size mismatch");
  int count = 0;
  Vector x = x0;
  if (iters == 0) {
    if (applies) *applies = 0;
    return x;
  }
  const double guard = 1e-15 * b.norm();
  Vector r = b;
  if (x.squaredNorm() > 0.0) {
    r -= op(x);
    ++count;
  }
  double rr = r.squaredNorm();
  Vector p = r;
  for (int it = 0; it < iters; ++it) {
    if (std::sqrt(rr) <= guard) break;
    const Vector ap = op(p);
    ++count;
    const double alpha = rr / p.dot(ap);
    check_finite(alpha, it);
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    const double rr_new = r.squaredNorm();
    check_finite(rr_new, it);
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (applies) *applies = count;
  return x;
}

CgResult cg_solve(const LinearOperator& op, const Vector& b, const Vector& x0, double tol,
                  int max_iters, const std::optional<Vector>& x_true) {
  if (!(tol > 0.0)) throw std::invalid_argument("cg_solve: tol must be positive");
  CgResult res;
  res.x = x0;
  const double bnorm = b.norm();
  const double scale = bnorm > 0.0 ? bnorm : 1.0;
  Vector r = b - op(x0);
  auto metric = [&]() {
    if (x_true) return std::sqrt(std::max(0.0, -(res.x - *x_true).dot(r))) / scale;
    return r.norm() / scale;
  };
  res.metric = metric();
  if (res.metric < tol) {
    res.converged = true;
    return res;
  }
  Vector p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iters; ++it) {
    const Vector ap = op(p);
    const double alpha = rr / p.dot(ap);
    check_finite(alpha, it);
    res.x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    const double rr_new = r.squaredNorm();
    check_finite(rr_new, it);
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    res.iterations = it + 1;
    res.metric = metric();
    res.history.push_back(res.metric);
    if (res.metric < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace h2mg

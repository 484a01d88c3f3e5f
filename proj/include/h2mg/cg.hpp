#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "h2mg/types.hpp"

namespace h2mg {

using LinearOperator = std::function<Vector(const Vector&)>;

/// Conjugate gradients (Hestenes-Stiefel) for exactly `iters` steps from x0,
/// stopping early only when the residual norm falls to 1e-15 ||b||.
/// `applies`, when given, receives the number of operator applications.
/// Throws NumericalError when a NaN or infinity appears.
Vector cg_iterate(const LinearOperator& op, const Vector& b, const Vector& x0, int iters,
                  int* applies = nullptr);

struct CgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  /// Final value of the stopping metric.
  double metric = 0.0;
  /// Metric after each iteration.
  std::vector<double> history;
};

/// Unpreconditioned CG run to tolerance. With x_true the metric is
/// sqrt(e^T A e) / ||b|| computed from the recurrence residual
/// (e^T A e = -e^T r); otherwise it is the recurrence residual ||r|| / ||b||.
CgResult cg_solve(const LinearOperator& op, const Vector& b, const Vector& x0, double tol,
                  int max_iters, const std::optional<Vector>& x_true = std::nullopt);

}  // namespace h2mg

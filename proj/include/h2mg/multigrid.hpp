#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "h2mg/h2matrix.hpp"

namespace h2mg {

struct SmootherConfig {
  /// CG iterations on the finest level, both legs.
  int n_f = 1;
  /// CG iterations on every coarser non-dense level, both legs.
  int n_c = 40;
};

/// Work done by one or more V-cycles.
struct CycleCounters {
  std::int64_t fine_smooth_iters = 0;
  std::int64_t coarse_smooth_iters = 0;
  /// Operator multiply-adds: H2 applications, transfers, coarse solves.
  std::int64_t flops = 0;
};

enum class Leg { kDown, kUp };

/// Called after every smoother run with the smoothed correction of level i
/// (level-i ordering; tree ordering on level 0).
using CycleObserver = std::function<void(int level, Leg leg, const Vector& correction)>;

struct HierarchyOptions {
  /// Restriction stops at the first level with at most this many blocks
  /// (or at the top of the H2 matrix). Negative: 4 * patch_factor.
  /// Zero: always descend to the top.
  Index coarse_blocks = -1;
  /// Factor a symmetric coarsest operator that is not positive definite
  /// with LU instead of failing.
  bool lu_fallback = false;
};

/// The restricted operators A_0 ... A_{l-1} of an H2 matrix. The coarsest
/// operator is materialized dense and factored once (Cholesky, or
/// partial-pivot LU for a non-symmetric matrix).
class OperatorHierarchy {
 public:
  /// Throws NumericalError when the coarsest operator of a symmetric matrix
  /// is not positive definite, unless options.lu_fallback is set.
  explicit OperatorHierarchy(const H2Matrix& a, const HierarchyOptions& options = {});

  int num_levels() const { return static_cast<int>(ops_.size()); }
  /// A_k as an H2 operator; the last one is the coarsest level.
  const H2Operator& op(int k) const { return ops_.at(k); }
  const Matrix& coarse_matrix() const { return coarse_; }
  const H2Matrix& matrix() const { return matrix_; }
  bool coarse_uses_cholesky() const { return use_cholesky_; }

  /// A_top^{-1} r.
  Vector coarse_solve(const Vector& r) const;

  /// One V-cycle in tree ordering.
  Vector vcycle_tree(const Vector& b, const Vector& x0, const SmootherConfig& cfg,
                     CycleCounters* counters = nullptr,
                     const CycleObserver& observer = nullptr) const;

 private:
  H2Matrix matrix_;
  std::vector<H2Operator> ops_;
  Matrix coarse_;
  Eigen::LLT<Matrix> llt_;
  Eigen::PartialPivLU<Matrix> lu_;
  bool use_cholesky_ = true;
};

struct CycleRecord {
  int cycle = 0;
  double resid_2norm = 0.0;
  /// NaN when no reference solution was given.
  double rel_anorm_err = 0.0;
  std::int64_t cum_flops = 0;
  double wall_ms = 0.0;
};

struct SolveStats {
  int vcycles = 0;
  bool converged = false;
  std::int64_t fine_smooth_iters = 0;
  std::int64_t coarse_smooth_iters = 0;
  std::int64_t flops = 0;
  /// Value of the stopping metric after the last cycle.
  double final_metric = 0.0;
  double setup_ms = 0.0;
  std::vector<CycleRecord> history;

  /// Columns cycle,resid_2norm,rel_Anorm_err,cum_flops,wall_ms, preceded by
  /// run_id when one is given.
  void write_csv(std::ostream& out, const std::string& run_id = "") const;
};

struct SolveResult {
  Vector x;
  SolveStats stats;
};

/// One V-cycle; b, x0 and the result use the original point ordering.
Vector vcycle(const OperatorHierarchy& h, const Vector& b, const Vector& x0,
              const SmootherConfig& cfg = {}, CycleCounters* counters = nullptr);

/// Repeated V-cycles until the stopping metric drops below tol or
/// max_cycles is reached. The metric is sqrt(e^T A e) / ||b|| with
/// e = x - x_true when x_true is given, otherwise ||b - A x|| / ||b||.
/// Non-convergence is reported through stats.converged; a non-finite
/// metric ends the iteration.
SolveResult solve(const OperatorHierarchy& h, const Vector& b, const Vector& x0,
                  const SmootherConfig& cfg, double tol, int max_cycles,
                  const std::optional<Vector>& x_true = std::nullopt);

struct ErrorBasisSplit {
  /// U_0^T e, in level-1 coefficient ordering.
  Vector coarse;
  /// e - U_0 U_0^T e, in the original point ordering.
  Vector complement;
  /// Q_0^T e, where the blocks of Q_0 complete those of U_0 to orthogonal
  /// matrices; block-ordered like `coarse`.
  Vector complement_coeffs;
};

/// Splits e (original ordering) into its finest-basis coordinates and the
/// orthogonal remainder. Throws std::invalid_argument for a single-level
/// matrix.
ErrorBasisSplit error_basis_decomposition(const H2Matrix& a, const Vector& e);

}  // namespace h2mg

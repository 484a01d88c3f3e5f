#include "h2mg/multigrid.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "h2mg/cg.hpp"

namespace h2mg {

OperatorHierarchy::OperatorHierarchy(const H2Matrix& a, const HierarchyOptions& options)
    : matrix_(a) {
  const Index stop_blocks =
      options.coarse_blocks < 0 ? 4 * a.tree().patch_factor() : options.coarse_blocks;
  ops_.push_back(a.op());
  while (!ops_.back().is_dense() &&
         static_cast<Index>(a.tree().level(ops_.back().level()).size()) > stop_blocks)
    ops_.push_back(ops_.back().restrict());
  coarse_ = ops_.back().to_dense();
  if (coarse_.size() == 0) return;
  llt_.compute(coarse_);
  if (llt_.info() == Eigen::Success) return;
  if (a.symmetric() && !options.lu_fallback)
    throw NumericalError("coarsest operator (dimension " + std::to_string(coarse_.rows()) +
                         ") is not positive definite");
  use_cholesky_ = false;
  lu_.compute(coarse_);
}

Vector OperatorHierarchy::coarse_solve(const Vector& r) const {
  if (r.size() == 0) return r;
  return use_cholesky_ ? Vector(llt_.solve(r)) : Vector(lu_.solve(r));
}

Vector OperatorHierarchy::vcycle_tree(const Vector& b, const Vector& x0,
                                      const SmootherConfig& cfg, CycleCounters* counters,
                                      const CycleObserver& observer) const {
  if (b.size() != ops_[0].size() || x0.size() != ops_[0].size())
    throw std::invalid_argument("vcycle: vector length does not match the operator");
  if (cfg.n_f < 0 || cfg.n_c < 0) throw std::invalid_argument("vcycle: negative smoothing count");
  CycleCounters local;
  CycleCounters& cnt = counters ? *counters : local;
  const int l = num_levels();
  const int top = l - 1;

  auto smooth = [&](int i, const Vector& rhs, const Vector& guess) {
    const H2Operator& a = ops_[i];
    const int iters = i == 0 ? cfg.n_f : cfg.n_c;
    int applies = 0;
    Vector e = cg_iterate([&a](const Vector& v) { return a.apply(v); }, rhs, guess, iters,
                          &applies);
    cnt.flops += applies * a.flops_per_apply();
    (i == 0 ? cnt.fine_smooth_iters : cnt.coarse_smooth_iters) += iters;
    return e;
  };

  std::vector<Vector> r(l), e(l);
  r[0] = b - ops_[0].apply(x0);
  cnt.flops += ops_[0].flops_per_apply();
  for (int i = 0; i < top; ++i) {
    e[i] = smooth(i, r[i], Vector::Zero(r[i].size()));
    if (observer) observer(i, Leg::kDown, e[i]);
    const H2Operator& a = ops_[i];
    const Vector resid = r[i] - a.apply(e[i]);
    cnt.flops += a.flops_per_apply();
    r[i + 1] = a.row_basis().apply_transpose(resid);
    cnt.flops += a.row_basis().entries();
  }
  e[top] = coarse_solve(r[top]);
  cnt.flops += coarse_.size();
  for (int i = top - 1; i >= 0; --i) {
    const H2Operator& a = ops_[i];
    e[i] += a.col_basis().apply(e[i + 1]);
    cnt.flops += a.col_basis().entries();
    e[i] = smooth(i, r[i], e[i]);
    if (observer) observer(i, Leg::kUp, e[i]);
  }
  return x0 + e[0];
}

void SolveStats::write_csv(std::ostream& out, const std::string& run_id) const {
  const auto old_flags = out.flags();
  const auto old_prec = out.precision();
  out << (run_id.empty() ? "" : "run_id,") << "cycle,resid_2norm,rel_Anorm_err,cum_flops,wall_ms\n";
  out << std::scientific;
  out.precision(16);
  for (const auto& rec : history) {
    if (!run_id.empty()) out << run_id << ',';
    out << rec.cycle << ',' << rec.resid_2norm << ',' << rec.rel_anorm_err << ','
        << rec.cum_flops << ',' << rec.wall_ms << '\n';
  }
  out.flags(old_flags);
  out.precision(old_prec);
}

Vector vcycle(const OperatorHierarchy& h, const Vector& b, const Vector& x0,
              const SmootherConfig& cfg, CycleCounters* counters) {
  const ClusterTree& tree = h.matrix().tree();
  return tree.to_original_order(
      h.vcycle_tree(tree.to_tree_order(b), tree.to_tree_order(x0), cfg, counters));
}

SolveResult solve(const OperatorHierarchy& h, const Vector& b, const Vector& x0,
                  const SmootherConfig& cfg, double tol, int max_cycles,
                  const std::optional<Vector>& x_true) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
  if (max_cycles < 0) throw std::invalid_argument("solve: max_cycles must be >= 0");
  const ClusterTree& tree = h.matrix().tree();
  const H2Operator& a = h.op(0);
  if (b.size() != a.size() || x0.size() != a.size() || (x_true && x_true->size() != a.size()))
    throw std::invalid_argument("solve: vector length does not match the operator");

  const Vector bt = tree.to_tree_order(b);
  Vector x = tree.to_tree_order(x0);
  std::optional<Vector> xt;
  if (x_true) xt = tree.to_tree_order(*x_true);
  const double bnorm = bt.norm();
  const double scale = bnorm > 0.0 ? bnorm : 1.0;

  double resid = 0.0, anorm = std::numeric_limits<double>::quiet_NaN();
  auto measure = [&]() {
    resid = (bt - a.apply_uncounted(x)).norm();
    if (xt) {
      const Vector err = x - *xt;
      anorm = std::sqrt(std::max(0.0, err.dot(a.apply_uncounted(err)))) / scale;
      return anorm;
    }
    return resid / scale;
  };

  SolveResult out;
  SolveStats& st = out.stats;
  st.final_metric = measure();
  st.converged = st.final_metric < tol;
  CycleCounters cnt;
  const auto t0 = std::chrono::steady_clock::now();
  while (!st.converged && st.vcycles < max_cycles) {
    x = h.vcycle_tree(bt, x, cfg, &cnt);
    ++st.vcycles;
    st.final_metric = measure();
    st.converged = st.final_metric < tol;
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    st.history.push_back(CycleRecord{st.vcycles, resid, xt ? anorm : std::nan(""), cnt.flops, ms});
    if (!std::isfinite(st.final_metric)) break;
  }
  st.fine_smooth_iters = cnt.fine_smooth_iters;
  st.coarse_smooth_iters = cnt.coarse_smooth_iters;
  st.flops = cnt.flops;
  out.x = tree.to_original_order(x);
  return out;
}

ErrorBasisSplit error_basis_decomposition(const H2Matrix& a, const Vector& e) {
  if (a.num_levels() < 2)
    throw std::invalid_argument("error_basis_decomposition: matrix has no basis level");
  if (e.size() != a.size())
    throw std::invalid_argument("error_basis_decomposition: length mismatch");
  const auto& u = a.op().row_basis();
  const Vector et = a.tree().to_tree_order(e);
  ErrorBasisSplit split;
  split.coarse = u.apply_transpose(et);
  split.complement = a.tree().to_original_order(et - u.apply(split.coarse));
  split.complement_coeffs.resize(u.rows() - u.cols());
  Index out = 0;
  for (Index b = 0; b < u.num_blocks(); ++b) {
    const Matrix& ub = u.block(b);
    const Index n = ub.rows(), m = n - ub.cols();
    if (m == 0) continue;
    const Matrix q = Eigen::HouseholderQR<Matrix>(ub).householderQ();
    split.complement_coeffs.segment(out, m) =
        q.rightCols(m).transpose() * et.segment(u.row_offsets()[b], n);
    out += m;
  }
  return split;
}

}  // namespace h2mg

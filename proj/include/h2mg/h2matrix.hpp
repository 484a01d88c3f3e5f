#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "h2mg/block_sparse.hpp"
#include "h2mg/cluster_tree.hpp"
#include "h2mg/kernel.hpp"

namespace h2mg {

struct H2Options {
  /// Target relative matvec accuracy.
  double epsilon = 1e-9;
  /// Admissibility parameter; 0 means "far iff the boxes do not touch".
  double eta = 0.0;
  /// Coarsening stops at the first level whose dimension is <= coarse_cap.
  Index coarse_cap = 512;
  /// Upper bound on the number of levels; 0 means no bound.
  int max_levels = 0;
};

/// Shared storage of one H2 matrix
///   A = D_0 + U_0 (D_1 + U_1 ( ... T ... ) V_1^T) V_0^T
/// in tree ordering. Level k < top carries the close part D_k and the
/// transfer bases U_k, V_k; the top level is the dense coupling T.
struct H2Data {
  struct Level {
    std::shared_ptr<const BlockSparse> close;
    BlockDiagonalBasis row_basis;
    BlockDiagonalBasis col_basis;
  };

  bool symmetric = true;
  /// dims[k] = dimension of the level-k coefficient space, dims[0] = N.
  std::vector<Index> dims;
  /// partition[k] = block offsets of the tree level-k nodes in space k.
  std::vector<std::vector<Index>> partition;
  /// parent[k][b] = tree level-(k+1) node containing level-k node b.
  std::vector<std::vector<Index>> parent;
  std::vector<Level> levels;
  std::shared_ptr<const Matrix> top;
  double frobenius_norm = 0.0;
  double epsilon = 0.0;

  mutable std::atomic<std::int64_t> flops{0};

  int top_level() const { return static_cast<int>(levels.size()); }
};

/// The operator A_k seen from level k: its finest close part is owned by the
/// view, all deeper levels are shared with the parent matrix. At the top
/// level the operator is a dense matrix.
class H2Operator {
 public:
  H2Operator() = default;
  H2Operator(std::shared_ptr<const H2Data> data, int level,
             std::shared_ptr<const BlockSparse> close, std::shared_ptr<const Matrix> dense);

  int level() const { return level_; }
  Index size() const { return data_->dims[level_]; }
  bool is_dense() const { return level_ == data_->top_level(); }
  bool symmetric() const { return data_->symmetric; }

  /// y = A_k x in the level-k coefficient ordering. Adds the multiply-add
  /// count to the shared counter.
  Vector apply(const Vector& x) const;
  Vector apply_uncounted(const Vector& x) const;

  /// Multiply-adds per apply.
  std::int64_t flops_per_apply() const { return flops_per_apply_; }
  std::int64_t stored_entries() const { return stored_entries_; }

  /// Only valid when !is_dense().
  const BlockSparse& close() const { return *close_; }
  const BlockDiagonalBasis& row_basis() const;
  const BlockDiagonalBasis& col_basis() const;
  /// Only valid when is_dense().
  const Matrix& dense() const { return *dense_; }

  /// Galerkin coarse operator A_{k+1} = U_k^T A_k V_k. Requires !is_dense().
  H2Operator restrict() const;

  /// Materializes the operator; intended for small sizes.
  Matrix to_dense() const;

  const std::shared_ptr<const H2Data>& data() const { return data_; }

 private:
  std::shared_ptr<const H2Data> data_;
  int level_ = 0;
  std::shared_ptr<const BlockSparse> close_;
  std::shared_ptr<const Matrix> dense_;
  std::int64_t flops_per_apply_ = 0;
  std::int64_t stored_entries_ = 0;
};

class H2Matrix {
 public:
  H2Matrix(std::shared_ptr<const H2Data> data, std::shared_ptr<const ClusterTree> tree);

  Index size() const { return data_->dims[0]; }
  int num_levels() const { return data_->top_level() + 1; }
  bool symmetric() const { return data_->symmetric; }
  const std::vector<Index>& level_dims() const { return data_->dims; }
  /// Basis ranks of the tree level-k nodes, k < num_levels() - 1.
  std::vector<Index> ranks(int k) const;
  const ClusterTree& tree() const { return *tree_; }
  const H2Data& data() const { return *data_; }

  /// The fine-level operator, tree ordering.
  const H2Operator& op() const { return op_; }

  /// y = A x with x and y in the original point ordering.
  Vector matvec(const Vector& x) const;

  std::int64_t flops() const { return data_->flops.load(); }
  void reset_flops() const { data_->flops.store(0); }
  std::int64_t flops_per_matvec() const { return op_.flops_per_apply(); }
  std::int64_t stored_entries() const { return op_.stored_entries(); }
  std::int64_t stored_bytes() const { return 8 * stored_entries(); }
  /// Largest ||U_b^T U_b - I||_F over all basis blocks.
  double orthogonality_defect() const;

  /// Debug dump of level dimensions, ranks and block pattern.
  std::string to_json(bool with_blocks = true) const;

 private:
  std::shared_ptr<const H2Data> data_;
  std::shared_ptr<const ClusterTree> tree_;
  H2Operator op_;
};

/// Builds an H2 approximation of `kernel` (given in the original ordering)
/// over `tree`. Evaluates every kernel entry a small number of times.
H2Matrix build_h2(const KernelMatrix& kernel, const ClusterTree& tree,
                  const H2Options& options = {});

/// Largest relative matvec error over `num_probes` standard normal probes,
/// against dense assembly. Throws std::length_error beyond `cap`.
double approximation_error(const H2Matrix& a, const KernelMatrix& kernel, int num_probes,
                           std::uint64_t seed, Index cap = 20000);

}  // namespace h2mg

#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "h2mg/types.hpp"

namespace h2mg {

/// Square block-sparse matrix over one partition of [0, n).
class BlockSparse {
 public:
  BlockSparse() = default;
  /// `offsets` has one entry per block plus the total size.
  explicit BlockSparse(std::vector<Index> offsets);

  Index size() const { return offsets_.empty() ? 0 : offsets_.back(); }
  Index num_blocks() const { return static_cast<Index>(offsets_.size()) - 1; }
  const std::vector<Index>& offsets() const { return offsets_; }
  Index block_size(Index b) const { return offsets_[b + 1] - offsets_[b]; }

  /// Inserts or overwrites block (i, j). Throws on a shape mismatch.
  void set(Index i, Index j, Matrix block);
  /// Adds into block (i, j), creating a zero block first when absent.
  void add(Index i, Index j, const Matrix& block);
  /// Adds `block` into block (i, j) at local offset (r, c).
  void add_at(Index i, Index j, Index r, Index c, const Matrix& block);

  const Matrix* find(Index i, Index j) const;
  const std::map<std::pair<Index, Index>, Matrix>& blocks() const { return blocks_; }

  /// y += B x.
  void apply_add(const Vector& x, Vector& y) const;
  Matrix to_dense() const;
  /// Total stored entries.
  std::int64_t entries() const;

 private:
  std::vector<Index> offsets_;
  std::map<std::pair<Index, Index>, Matrix> blocks_;
};

/// Block-diagonal transfer matrix. Block b maps a segment of the fine space
/// (rows) to a segment of the coarse space (columns).
class BlockDiagonalBasis {
 public:
  BlockDiagonalBasis() = default;
  explicit BlockDiagonalBasis(std::vector<Matrix> blocks);

  Index num_blocks() const { return static_cast<Index>(blocks_.size()); }
  const Matrix& block(Index b) const { return blocks_[b]; }
  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_offsets() const { return col_offsets_; }
  Index rows() const { return row_offsets_.back(); }
  Index cols() const { return col_offsets_.back(); }
  Index rank(Index b) const { return blocks_[b].cols(); }

  /// U x (coarse -> fine).
  Vector apply(const Vector& x) const;
  /// U^T x (fine -> coarse).
  Vector apply_transpose(const Vector& x) const;
  /// M U for a matrix whose columns live in the fine space.
  Matrix right_multiply(const Matrix& m) const;
  /// U_b^T M for the consecutive blocks [first, last); M has the matching
  /// number of fine rows.
  Matrix left_project(Index first, Index last, const Matrix& m) const;

  Matrix to_dense() const;
  std::int64_t entries() const;
  /// Largest ||U_b^T U_b - I||_F over all blocks.
  double orthogonality_defect() const;

 private:
  std::vector<Matrix> blocks_;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_offsets_{0};
};

}  // namespace h2mg

#include "h2mg/block_sparse.hpp"

#include <algorithm>
#include <stdexcept>

namespace h2mg {

BlockSparse::BlockSparse(std::vector<Index> offsets) : offsets_(std::move(offsets)) {
  if (offsets_.empty() || offsets_.front() != 0)
    throw std::invalid_argument("BlockSparse: offsets must start at 0");
  if (!std::is_sorted(offsets_.begin(), offsets_.end()))
    throw std::invalid_argument("BlockSparse: offsets must be non-decreasing");
}

void BlockSparse::set(Index i, Index j, Matrix block) {
  if (i < 0 || j < 0 || i >= num_blocks() || j >= num_blocks())
    throw std::out_of_range("BlockSparse::set: block index out of range");
  if (block.rows() != block_size(i) || block.cols() != block_size(j))
    throw std::invalid_argument("BlockSparse::set: block shape does not match the partition");
  blocks_[{i, j}] = std::move(block);
}

void BlockSparse::add(Index i, Index j, const Matrix& block) {
  add_at(i, j, 0, 0, block);
}

void BlockSparse::add_at(Index i, Index j, Index r, Index c, const Matrix& block) {
  if (i < 0 || j < 0 || i >= num_blocks() || j >= num_blocks())
    throw std::out_of_range("BlockSparse::add_at: block index out of range");
  if (r < 0 || c < 0 || r + block.rows() > block_size(i) || c + block.cols() > block_size(j))
    throw std::invalid_argument("BlockSparse::add_at: sub-block exceeds the block");
  auto it = blocks_.find({i, j});
  if (it == blocks_.end())
    it = blocks_.emplace(std::pair{i, j}, Matrix::Zero(block_size(i), block_size(j))).first;
  it->second.block(r, c, block.rows(), block.cols()) += block;
}

const Matrix* BlockSparse::find(Index i, Index j) const {
  auto it = blocks_.find({i, j});
  return it == blocks_.end() ? nullptr : &it->second;
}

void BlockSparse::apply_add(const Vector& x, Vector& y) const {
  for (const auto& [ij, m] : blocks_) {
    const auto [i, j] = ij;
    y.segment(offsets_[i], m.rows()).noalias() += m * x.segment(offsets_[j], m.cols());
  }
}

Matrix BlockSparse::to_dense() const {
  Matrix d = Matrix::Zero(size(), size());
  for (const auto& [ij, m] : blocks_)
    d.block(offsets_[ij.first], offsets_[ij.second], m.rows(), m.cols()) = m;
  return d;
}

std::int64_t BlockSparse::entries() const {
  std::int64_t n = 0;
  for (const auto& [ij, m] : blocks_) n += m.size();
  return n;
}

BlockDiagonalBasis::BlockDiagonalBasis(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  row_offsets_.reserve(blocks_.size() + 1);
  col_offsets_.reserve(blocks_.size() + 1);
  for (const Matrix& b : blocks_) {
    row_offsets_.push_back(row_offsets_.back() + b.rows());
    col_offsets_.push_back(col_offsets_.back() + b.cols());
  }
}

Vector BlockDiagonalBasis::apply(const Vector& x) const {
  if (x.size() != cols()) throw std::invalid_argument("BlockDiagonalBasis::apply: size mismatch");
  Vector y(rows());
  for (Index b = 0; b < num_blocks(); ++b)
    y.segment(row_offsets_[b], blocks_[b].rows()).noalias() =
        blocks_[b] * x.segment(col_offsets_[b], blocks_[b].cols());
  return y;
}

Vector BlockDiagonalBasis::apply_transpose(const Vector& x) const {
  if (x.size() != rows())
    throw std::invalid_argument("BlockDiagonalBasis::apply_transpose: size mismatch");
  Vector y(cols());
  for (Index b = 0; b < num_blocks(); ++b)
    y.segment(col_offsets_[b], blocks_[b].cols()).noalias() =
        blocks_[b].transpose() * x.segment(row_offsets_[b], blocks_[b].rows());
  return y;
}

Matrix BlockDiagonalBasis::right_multiply(const Matrix& m) const {
  if (m.cols() != rows())
    throw std::invalid_argument("BlockDiagonalBasis::right_multiply: size mismatch");
  Matrix out(m.rows(), cols());
  for (Index b = 0; b < num_blocks(); ++b)
    out.middleCols(col_offsets_[b], blocks_[b].cols()).noalias() =
        m.middleCols(row_offsets_[b], blocks_[b].rows()) * blocks_[b];
  return out;
}

Matrix BlockDiagonalBasis::left_project(Index first, Index last, const Matrix& m) const {
  const Index base_row = row_offsets_[first];
  if (m.rows() != row_offsets_[last] - base_row)
    throw std::invalid_argument("BlockDiagonalBasis::left_project: size mismatch");
  const Index base_col = col_offsets_[first];
  Matrix out(col_offsets_[last] - base_col, m.cols());
  for (Index b = first; b < last; ++b)
    out.middleRows(col_offsets_[b] - base_col, blocks_[b].cols()).noalias() =
        blocks_[b].transpose() * m.middleRows(row_offsets_[b] - base_row, blocks_[b].rows());
  return out;
}

Matrix BlockDiagonalBasis::to_dense() const {
  Matrix d = Matrix::Zero(rows(), cols());
  for (Index b = 0; b < num_blocks(); ++b)
    d.block(row_offsets_[b], col_offsets_[b], blocks_[b].rows(), blocks_[b].cols()) = blocks_[b];
  return d;
}

std::int64_t BlockDiagonalBasis::entries() const {
  std::int64_t n = 0;
  for (const Matrix& b : blocks_) n += b.size();
  return n;
}

double BlockDiagonalBasis::orthogonality_defect() const {
  double worst = 0.0;
  for (const Matrix& b : blocks_) {
    const Matrix g = b.transpose() * b - Matrix::Identity(b.cols(), b.cols());
    worst = std::max(worst, g.norm());
  }
  return worst;
}

}  // namespace h2mg

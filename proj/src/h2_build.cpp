#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "h2mg/h2matrix.hpp"

namespace h2mg {

namespace {

// Orthogonal rotation E of a strip X with the rows of E^T X ordered by
// decreasing norm; sq_norms[i] = |(E^T X)_i|^2. Norms come from the
// eigenvalues of X X^T. Eigenvalues below 1e-10 of the largest carry
// mostly rounding noise, so that tail subspace is re-diagonalized from its
// explicit rows, resolving squared norms down to ~1e-30 of the largest.
struct StripFactor {
  Matrix rotation;
  Vector sq_norms;
};

StripFactor factor_strip(const Matrix& x) {
  const Index n = x.rows();
  StripFactor f{Matrix::Identity(n, n), Vector::Zero(n)};
  if (n == 0 || x.cols() == 0) return f;

  constexpr double kNoise = 1e-10;
  constexpr double kFloor = 1e-30;
  constexpr int kRefinements = 3;
  auto diagonalize = [](const Matrix& z, Eigen::Ref<Matrix> rotation, Eigen::Ref<Vector> norms) {
    Matrix g = Matrix::Zero(z.rows(), z.rows());
    g.selfadjointView<Eigen::Lower>().rankUpdate(z);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.selfadjointView<Eigen::Lower>());
    rotation = (rotation * es.eigenvectors().rowwise().reverse()).eval();
    norms = es.eigenvalues().reverse().cwiseMax(0.0);
  };

  diagonalize(x, f.rotation, f.sq_norms);
  const double largest = f.sq_norms[0];
  Index lo = 0;
  for (int round = 0; round < kRefinements; ++round) {
    const double ref = f.sq_norms[lo];
    if (!(ref > kFloor * largest)) break;
    while (lo < n && f.sq_norms[lo] >= kNoise * ref) ++lo;
    if (n - lo < 2) break;
    const Index m = n - lo;
    const Matrix z = f.rotation.rightCols(m).transpose() * x;
    diagonalize(z, f.rotation.rightCols(m), f.sq_norms.tail(m));
  }

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return f.sq_norms[a] > f.sq_norms[b]; });
  StripFactor sorted{Matrix(n, n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    sorted.rotation.col(i) = f.rotation.col(order[i]);
    sorted.sq_norms[i] = f.sq_norms[order[i]];
  }
  return sorted;
}

// Smallest r with sum_{i >= r} sq_norms[i] <= budget.
Index truncation_rank(const Vector& sq_norms, double budget) {
  double tail = 0.0;
  Index r = sq_norms.size();
  while (r > 0 && tail + sq_norms[r - 1] <= budget) {
    tail += sq_norms[r - 1];
    --r;
  }
  return r;
}

class Builder {
 public:
  Builder(const KernelMatrix& kernel, const ClusterTree& tree, const H2Options& opt)
      : kernel_(kernel), tree_(tree), opt_(opt), symmetric_(kernel.symmetric()) {
    if (!symmetric_) kernel_t_ = kernel.transposed();
    const int nl = tree.num_levels();
    close_lists_.resize(nl);
    leaf_range_.resize(nl);
    for (int k = 0; k < nl; ++k) {
      const auto& nodes = tree.level(k);
      const Index n = static_cast<Index>(nodes.size());
      close_lists_[k].resize(n);
      leaf_range_[k].resize(n);
      for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b)
          if (!admissible(nodes[a].box, nodes[b].box, opt.eta)) close_lists_[k][a].push_back(b);
        if (k == 0) {
          leaf_range_[k][a] = {a, a + 1};
        } else {
          leaf_range_[k][a] = {leaf_range_[k - 1][nodes[a].child_begin].first,
                               leaf_range_[k - 1][nodes[a].child_end - 1].second};
        }
      }
    }
  }

  std::shared_ptr<H2Data> run();

 private:
  bool has_far_pair(int k) const {
    for (const auto& cl : close_lists_[k])
      if (static_cast<Index>(cl.size()) < static_cast<Index>(close_lists_[k].size())) return true;
    return false;
  }

  // Node range at tree level j covered by tree level-k node t (j <= k).
  std::pair<Index, Index> node_range(int k, Index t, int j) const {
    Index first = t, last = t + 1;
    for (int l = k; l > j; --l) {
      first = tree_.level(l)[first].child_begin;
      last = tree_.level(l)[last - 1].child_end;
    }
    return {first, last};
  }

  Matrix row_strip(const KernelMatrix& kern, const std::vector<BlockDiagonalBasis>& rows,
                   const std::vector<BlockDiagonalBasis>& cols, int k, Index t,
                   bool accumulate_norm);
  void zero_owned(int k, Index t, Matrix& strip) const;
  std::vector<StripFactor> basis_pass(const KernelMatrix& kern,
                                      const std::vector<BlockDiagonalBasis>& rows,
                                      const std::vector<BlockDiagonalBasis>& cols, int k,
                                      bool accumulate_norm, BlockSparse* close, Matrix* top);

  const KernelMatrix& kernel_;
  KernelMatrix kernel_t_ = kernel_;
  const ClusterTree& tree_;
  H2Options opt_;
  bool symmetric_;
  std::vector<std::vector<std::vector<Index>>> close_lists_;
  std::vector<std::vector<std::pair<Index, Index>>> leaf_range_;
  std::vector<BlockDiagonalBasis> row_bases_, col_bases_;
  std::vector<std::vector<Index>> partition_;
  std::vector<Index> dims_;
  double norm_sq_ = 0.0;
};

// Projected block row of tree level-k node t: W_t^T A(I_t, :) W, with
// size_k(t) rows and dims[k] columns.
Matrix Builder::row_strip(const KernelMatrix& kern, const std::vector<BlockDiagonalBasis>& rows,
                          const std::vector<BlockDiagonalBasis>& cols, int k, Index t,
                          bool accumulate_norm) {
  const Index n = kern.size();
  const auto& leaves = tree_.level(0);
  if (k == 0) {
    Matrix r = kern.block(leaves[t].begin, leaves[t].size(), 0, n);
    if (accumulate_norm) norm_sq_ += r.squaredNorm();
    return r;
  }
  const auto [la, lb] = leaf_range_[k][t];
  const Index row_base = rows[0].col_offsets()[la];
  Matrix stacked(rows[0].col_offsets()[lb] - row_base, dims_[k]);
  for (Index a = la; a < lb; ++a) {
    Matrix r = kern.block(leaves[a].begin, leaves[a].size(), 0, n);
    r = rows[0].left_project(a, a + 1, r);
    r = cols[0].right_multiply(r);
    for (int j = 1; j < k; ++j) r = cols[j].right_multiply(r);
    stacked.middleRows(rows[0].col_offsets()[a] - row_base, r.rows()) = r;
  }
  for (int j = 1; j < k; ++j) {
    const auto [first, last] = node_range(k, t, j);
    stacked = rows[j].left_project(first, last, stacked);
  }
  return stacked;
}

// Zeroes the parts of a level-k strip already stored at finer levels: the
// sub-blocks of child pairs that are close at level k-1.
void Builder::zero_owned(int k, Index t, Matrix& strip) const {
  if (k == 0) return;
  const auto& node = tree_.level(k)[t];
  const auto& row_off = row_bases_[k - 1].col_offsets();
  const auto& col_off = col_bases_[k - 1].col_offsets();
  const Index base = partition_[k][t];
  for (Index c = node.child_begin; c < node.child_end; ++c) {
    const Index r0 = row_off[c] - base, nr = row_off[c + 1] - row_off[c];
    if (nr == 0) continue;
    for (Index c2 : close_lists_[k - 1][c])
      strip.block(r0, col_off[c2], nr, col_off[c2 + 1] - col_off[c2]).setZero();
  }
}

std::vector<StripFactor> Builder::basis_pass(const KernelMatrix& kern,
                                             const std::vector<BlockDiagonalBasis>& rows,
                                             const std::vector<BlockDiagonalBasis>& cols, int k,
                                             bool accumulate_norm, BlockSparse* close,
                                             Matrix* top) {
  const auto& offsets = partition_[k];
  const Index n_nodes = static_cast<Index>(offsets.size()) - 1;
  std::vector<StripFactor> factors;
  if (!top) factors.reserve(n_nodes);
  for (Index t = 0; t < n_nodes; ++t) {
    Matrix strip = row_strip(kern, rows, cols, k, t, accumulate_norm);
    const Index bt = strip.rows();
    if (top) {
      zero_owned(k, t, strip);
      top->middleRows(offsets[t], bt) = strip;
      continue;
    }
    const auto& close_t = close_lists_[k][t];
    if (close) {
      Matrix owned = strip;
      zero_owned(k, t, owned);
      for (Index q : close_t) {
        if (symmetric_ && q < t) {
          if (const Matrix* m = close->find(q, t)) close->set(t, q, m->transpose());
          continue;
        }
        const auto blk = owned.middleCols(offsets[q], offsets[q + 1] - offsets[q]);
        if (blk.size() > 0 && blk.cwiseAbs().maxCoeff() > 0.0) close->set(t, q, blk);
      }
    }
    // far columns, in node order
    Index far_cols = dims_[k];
    for (Index q : close_t) far_cols -= offsets[q + 1] - offsets[q];
    Matrix x(bt, far_cols);
    Index pos = 0, next_close = 0;
    for (Index q = 0; q < n_nodes; ++q) {
      if (next_close < static_cast<Index>(close_t.size()) && close_t[next_close] == q) {
        ++next_close;
        continue;
      }
      const Index w = offsets[q + 1] - offsets[q];
      x.middleCols(pos, w) = strip.middleCols(offsets[q], w);
      pos += w;
    }
    factors.push_back(factor_strip(x));
  }
  return factors;
}

std::shared_ptr<H2Data> Builder::run() {
  const Index n = kernel_.size();
  const int tree_levels = tree_.num_levels();
  int basis_levels = tree_levels - 1;
  if (opt_.max_levels > 0) basis_levels = std::min(basis_levels, opt_.max_levels - 1);

  auto data = std::make_shared<H2Data>();
  data->symmetric = symmetric_;
  data->epsilon = opt_.epsilon;

  {
    std::vector<Index> off{0};
    for (const auto& leaf : tree_.level(0)) off.push_back(leaf.end);
    partition_.push_back(std::move(off));
  }
  dims_.push_back(n);

  auto is_top = [&](int k) {
    return dims_[k] <= opt_.coarse_cap || k >= basis_levels || k == tree_levels - 1 ||
           !has_far_pair(k);
  };

  int k = 0;
  while (!is_top(k)) {
    auto close = std::make_shared<BlockSparse>(partition_[k]);
    std::vector<StripFactor> row_f =
        basis_pass(kernel_, row_bases_, col_bases_, k, k == 0, close.get(), nullptr);
    std::vector<StripFactor> col_f;
    if (!symmetric_)
      col_f = basis_pass(kernel_t_, col_bases_, row_bases_, k, false, nullptr, nullptr);

    const double tau = opt_.epsilon * std::sqrt(norm_sq_) / (2.0 * basis_levels);
    const auto& offsets = partition_[k];
    std::vector<Matrix> u_blocks, v_blocks;
    for (Index t = 0; t + 1 < static_cast<Index>(offsets.size()); ++t) {
      const Index bt = offsets[t + 1] - offsets[t];
      const double budget = tau * tau * static_cast<double>(bt) / static_cast<double>(dims_[k]);
      Index r = truncation_rank(row_f[t].sq_norms, budget);
      if (!symmetric_) r = std::max(r, truncation_rank(col_f[t].sq_norms, budget));
      u_blocks.push_back(row_f[t].rotation.leftCols(r));
      v_blocks.push_back(symmetric_ ? u_blocks.back() : col_f[t].rotation.leftCols(r));
    }
    row_bases_.emplace_back(std::move(u_blocks));
    col_bases_.emplace_back(std::move(v_blocks));

    const auto& coarse_nodes = tree_.level(k + 1);
    std::vector<Index> off{0};
    std::vector<Index> parent(tree_.level(k).size());
    for (Index p = 0; p < static_cast<Index>(coarse_nodes.size()); ++p) {
      off.push_back(row_bases_.back().col_offsets()[coarse_nodes[p].child_end]);
      for (Index c = coarse_nodes[p].child_begin; c < coarse_nodes[p].child_end; ++c)
        parent[c] = p;
    }
    partition_.push_back(std::move(off));
    data->parent.push_back(std::move(parent));
    dims_.push_back(row_bases_.back().cols());
    data->levels.push_back(H2Data::Level{std::move(close), row_bases_.back(), col_bases_.back()});
    ++k;
  }

  auto top = std::make_shared<Matrix>(dims_[k], dims_[k]);
  if (k == 0) {
    *top = kernel_.block(0, n, 0, n);
    norm_sq_ = top->squaredNorm();
  } else {
    basis_pass(kernel_, row_bases_, col_bases_, k, false, nullptr, top.get());
    if (symmetric_) *top = (0.5 * (*top + top->transpose())).eval();
  }
  data->top = std::move(top);
  data->dims = dims_;
  data->partition = partition_;
  data->frobenius_norm = std::sqrt(norm_sq_);
  return data;
}

}  // namespace

H2Matrix build_h2(const KernelMatrix& kernel, const ClusterTree& tree, const H2Options& options) {
  if (!(options.epsilon > 0.0 && options.epsilon < 1.0))
    throw std::invalid_argument("build_h2: epsilon must lie in (0, 1)");
  if (options.eta < 0.0) throw std::invalid_argument("build_h2: eta must be >= 0");
  if (options.max_levels < 0) throw std::invalid_argument("build_h2: max_levels must be >= 0");
  if (kernel.size() != tree.num_points())
    throw std::invalid_argument("build_h2: kernel and tree sizes differ");
  const KernelMatrix ordered = kernel.permuted(tree.tree_to_original());
  Builder builder(ordered, tree, options);
  return H2Matrix(builder.run(), std::make_shared<const ClusterTree>(tree));
}

}  // namespace h2mg

#include "h2mg/h2matrix.hpp"

#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace h2mg {

H2Operator::H2Operator(std::shared_ptr<const H2Data> data, int level,
                       std::shared_ptr<const BlockSparse> close,
                       std::shared_ptr<const Matrix> dense)
    : data_(std::move(data)), level_(level), close_(std::move(close)), dense_(std::move(dense)) {
  const int top = data_->top_level();
  if (level_ < 0 || level_ > top) throw std::out_of_range("H2Operator: level out of range");
  if (is_dense()) {
    if (!dense_) throw std::invalid_argument("H2Operator: top level needs a dense matrix");
    stored_entries_ = dense_->size();
    flops_per_apply_ = dense_->size();
    return;
  }
  if (!close_) throw std::invalid_argument("H2Operator: missing close part");
  std::int64_t stored = close_->entries() + data_->top->size();
  std::int64_t flops = stored;
  for (int j = level_; j < top; ++j) {
    const auto& lv = data_->levels[j];
    if (j > level_) {
      stored += lv.close->entries();
      flops += lv.close->entries();
    }
    const std::int64_t basis = lv.row_basis.entries();
    if (data_->symmetric) {
      stored += basis;
      flops += 2 * basis;
    } else {
      stored += basis + lv.col_basis.entries();
      flops += basis + lv.col_basis.entries();
    }
  }
  stored_entries_ = stored;
  flops_per_apply_ = flops;
}

const BlockDiagonalBasis& H2Operator::row_basis() const {
  if (is_dense()) throw std::logic_error("H2Operator: the top level has no basis");
  return data_->levels[level_].row_basis;
}

const BlockDiagonalBasis& H2Operator::col_basis() const {
  if (is_dense()) throw std::logic_error("H2Operator: the top level has no basis");
  return data_->levels[level_].col_basis;
}

Vector H2Operator::apply(const Vector& x) const {
  Vector y = apply_uncounted(x);
  data_->flops.fetch_add(flops_per_apply_, std::memory_order_relaxed);
  return y;
}

Vector H2Operator::apply_uncounted(const Vector& x) const {
  if (x.size() != size())
    throw std::invalid_argument("H2Operator::apply: expected length " + std::to_string(size()) +
                                ", got " + std::to_string(x.size()));
  if (is_dense()) return (*dense_) * x;

  const int top = data_->top_level();
  // forward: coefficients c_j at every coarser level
  std::vector<Vector> c(top + 1);
  c[level_] = x;
  for (int j = level_; j < top; ++j) c[j + 1] = data_->levels[j].col_basis.apply_transpose(c[j]);
  // backward
  Vector z = (*data_->top) * c[top];
  for (int j = top - 1; j > level_; --j) {
    Vector w = data_->levels[j].row_basis.apply(z);
    data_->levels[j].close->apply_add(c[j], w);
    z = std::move(w);
  }
  Vector y = data_->levels[level_].row_basis.apply(z);
  close_->apply_add(x, y);
  return y;
}

H2Operator H2Operator::restrict() const {
  if (is_dense()) throw std::logic_error("H2Operator::restrict: already at the top level");
  const H2Data& d = *data_;
  const int next = level_ + 1;
  const auto& U = d.levels[level_].row_basis;
  const auto& V = d.levels[level_].col_basis;
  const auto& parent = d.parent[level_];
  const auto& coarse_offsets = d.partition[next];

  // U_s^T F_st V_t for every stored block, symmetric pairs computed once
  auto projected = [&](Index s, Index t, const Matrix& f) -> Matrix {
    return U.block(s).transpose() * f * V.block(t);
  };

  if (next == d.top_level()) {
    auto dense = std::make_shared<Matrix>(*d.top);
    for (const auto& [st, f] : close_->blocks()) {
      const auto [s, t] = st;
      if (U.rank(s) == 0 || V.rank(t) == 0) continue;
      if (d.symmetric && s > t) continue;
      const Matrix c = projected(s, t, f);
      dense->block(U.col_offsets()[s], V.col_offsets()[t], c.rows(), c.cols()) += c;
      if (d.symmetric && s < t)
        dense->block(V.col_offsets()[t], U.col_offsets()[s], c.cols(), c.rows()) += c.transpose();
    }
    return H2Operator(data_, next, nullptr, std::move(dense));
  }

  auto close = std::make_shared<BlockSparse>(*d.levels[next].close);
  for (const auto& [st, f] : close_->blocks()) {
    const auto [s, t] = st;
    if (U.rank(s) == 0 || V.rank(t) == 0) continue;
    if (d.symmetric && s > t) continue;
    const Matrix c = projected(s, t, f);
    const Index ps = parent[s], pt = parent[t];
    const Index rs = U.col_offsets()[s] - coarse_offsets[ps];
    const Index ct = V.col_offsets()[t] - coarse_offsets[pt];
    close->add_at(ps, pt, rs, ct, c);
    if (d.symmetric && s < t) close->add_at(pt, ps, ct, rs, c.transpose());
  }
  return H2Operator(data_, next, std::move(close), nullptr);
}

Matrix H2Operator::to_dense() const {
  if (is_dense()) return *dense_;
  const H2Data& d = *data_;
  const int next = level_ + 1;
  const H2Operator deeper =
      next == d.top_level() ? H2Operator(data_, next, nullptr, d.top)
                            : H2Operator(data_, next, d.levels[next].close, nullptr);
  const Matrix inner = deeper.to_dense();
  const Matrix u = row_basis().to_dense();
  const Matrix v = col_basis().to_dense();
  Matrix out = u * (inner * v.transpose());
  for (const auto& [ij, m] : close_->blocks())
    out.block(close_->offsets()[ij.first], close_->offsets()[ij.second], m.rows(), m.cols()) += m;
  return out;
}

H2Matrix::H2Matrix(std::shared_ptr<const H2Data> data, std::shared_ptr<const ClusterTree> tree)
    : data_(std::move(data)), tree_(std::move(tree)) {
  if (data_->top_level() == 0)
    op_ = H2Operator(data_, 0, nullptr, data_->top);
  else
    op_ = H2Operator(data_, 0, data_->levels[0].close, nullptr);
}

std::vector<Index> H2Matrix::ranks(int k) const {
  if (k < 0 || k >= data_->top_level()) throw std::out_of_range("H2Matrix::ranks: bad level");
  const auto& U = data_->levels[k].row_basis;
  std::vector<Index> r(U.num_blocks());
  for (Index b = 0; b < U.num_blocks(); ++b) r[b] = U.rank(b);
  return r;
}

Vector H2Matrix::matvec(const Vector& x) const {
  if (x.size() != size())
    throw std::invalid_argument("H2Matrix::matvec: expected length " + std::to_string(size()));
  return tree_->to_original_order(op_.apply(tree_->to_tree_order(x)));
}

double H2Matrix::orthogonality_defect() const {
  double worst = 0.0;
  for (const auto& lv : data_->levels) {
    worst = std::max(worst, lv.row_basis.orthogonality_defect());
    worst = std::max(worst, lv.col_basis.orthogonality_defect());
  }
  return worst;
}

std::string H2Matrix::to_json(bool with_blocks) const {
  using nlohmann::json;
  const H2Data& d = *data_;
  json j;
  j["num_points"] = size();
  j["symmetric"] = d.symmetric;
  j["num_levels"] = num_levels();
  j["epsilon"] = d.epsilon;
  j["frobenius_norm"] = d.frobenius_norm;
  j["level_dims"] = d.dims;
  j["stored_entries"] = stored_entries();
  j["flops_per_matvec"] = flops_per_matvec();
  json levels = json::array();
  for (int k = 0; k < d.top_level(); ++k) {
    const auto& lv = d.levels[k];
    json l;
    l["level"] = k;
    l["num_nodes"] = lv.row_basis.num_blocks();
    l["block_sizes"] = json::array();
    for (Index b = 0; b < lv.row_basis.num_blocks(); ++b)
      l["block_sizes"].push_back(lv.row_basis.block(b).rows());
    l["ranks"] = ranks(k);
    l["close_entries"] = lv.close->entries();
    l["num_close_blocks"] = lv.close->blocks().size();
    if (with_blocks) {
      json pairs = json::array();
      for (const auto& [ij, m] : lv.close->blocks()) pairs.push_back({ij.first, ij.second});
      l["close_blocks"] = std::move(pairs);
    }
    levels.push_back(std::move(l));
  }
  j["levels"] = std::move(levels);
  j["top"] = {{"level", d.top_level()}, {"dim", d.dims.back()}};
  return j.dump(2);
}

double approximation_error(const H2Matrix& a, const KernelMatrix& kernel, int num_probes,
                           std::uint64_t seed, Index cap) {
  if (kernel.size() != a.size())
    throw std::invalid_argument("approximation_error: kernel and matrix sizes differ");
  if (num_probes < 1) throw std::invalid_argument("approximation_error: num_probes < 1");
  const Matrix dense = assemble_dense(kernel, cap);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int p = 0; p < num_probes; ++p) {
    Vector x(a.size());
    for (Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    const Vector exact = dense * x;
    worst = std::max(worst, (a.matvec(x) - exact).norm() / exact.norm());
  }
  return worst;
}

}  // namespace h2mg

#include "h2mg/kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace h2mg {

namespace {
constexpr double kFourPi = 4.0 * std::numbers::pi;

void check_sigma_c(double sigma, double c) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("kernel: sigma must be positive");
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("kernel: c must be >= 0");
}
}  // namespace

void validate(const KernelSpec& spec) {
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) check_sigma_c(g->sigma, g->c);
  if (const auto* e = std::get_if<ExponentialKernel>(&spec)) check_sigma_c(e->sigma, e->c);
  if (const auto* b = std::get_if<LaplaceSingleLayer>(&spec))
    if (!b->mesh) throw std::invalid_argument("kernel: BEM kernel without mesh");
}

KernelMatrix::KernelMatrix(const KernelSpec& spec, const PointSet& points) : spec_(spec) {
  validate(spec);
  if (std::holds_alternative<LaplaceSingleLayer>(spec)) {
    *this = KernelMatrix(std::get<LaplaceSingleLayer>(spec));
    return;
  }
  double c = 0.0;
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    kind_ = Kind::kGaussian;
    sigma_ = g->sigma;
    c = g->c;
  } else {
    const auto& e = std::get<ExponentialKernel>(spec);
    kind_ = Kind::kExponential;
    sigma_ = e.sigma;
    c = e.c;
  }
  dim_ = points.dim();
  coords_ = Matrix::Zero(points.size(), 3);
  coords_.leftCols(dim_) = points.coords();
  diag_ = Vector::Constant(points.size(), 1.0 + c);
}

KernelMatrix::KernelMatrix(const LaplaceSingleLayer& spec) : spec_(spec) {
  validate(spec_);
  const SurfaceMesh& mesh = *spec.mesh;
  kind_ = Kind::kBem;
  dim_ = 3;
  coords_ = mesh.centroids();
  diag_ = (mesh.areas() / kFourPi).cwiseQuotient(mesh.reg_radii());
  if (spec.symmetrized) {
    row_weight_ = mesh.areas().cwiseSqrt() / kFourPi;
    col_weight_ = mesh.areas().cwiseSqrt();
  } else {
    row_weight_ = Vector::Ones(mesh.num_triangles());
    col_weight_ = mesh.areas() / kFourPi;
  }
  symmetric_ = spec.symmetrized;
}

KernelMatrix::KernelMatrix(const KernelSpec& spec) {
  if (!std::holds_alternative<LaplaceSingleLayer>(spec))
    throw std::invalid_argument("KernelMatrix: point kernels need a PointSet");
  *this = KernelMatrix(std::get<LaplaceSingleLayer>(spec));
}

PointSet KernelMatrix::points() const { return PointSet(coords_.leftCols(dim_)); }

double KernelMatrix::entry(Index i, Index j) const {
  if (i < 0 || j < 0 || i >= size() || j >= size())
    throw std::out_of_range("KernelMatrix::entry: index out of range");
  if (i == j) return diag_[i];
  const double d2 = (coords_.row(i) - coords_.row(j)).squaredNorm();
  double v = 0.0;
  switch (kind_) {
    case Kind::kGaussian: v = std::exp(-d2 / sigma_); break;
    case Kind::kExponential: v = std::exp(-std::sqrt(d2) / sigma_); break;
    case Kind::kBem: v = row_weight_[i] * col_weight_[j] / std::sqrt(d2); break;
  }
  if (!std::isfinite(v))
    throw NumericalError("kernel entry (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") is not finite: coincident points");
  return v;
}

Matrix KernelMatrix::block(Index r0, Index nr, Index c0, Index nc) const {
  if (r0 < 0 || c0 < 0 || nr < 0 || nc < 0 || r0 + nr > size() || c0 + nc > size())
    throw std::out_of_range("KernelMatrix::block: range out of bounds");
  Matrix out(nr, nc);
  Eigen::ArrayXd d2(nr);
  for (Index j = 0; j < nc; ++j) {
    d2 = (coords_.col(0).segment(r0, nr).array() - coords_(c0 + j, 0)).square();
    for (int a = 1; a < dim_; ++a)
      d2 += (coords_.col(a).segment(r0, nr).array() - coords_(c0 + j, a)).square();
    auto col = out.col(j).array();
    switch (kind_) {
      case Kind::kGaussian: col = (d2 * (-1.0 / sigma_)).exp(); break;
      case Kind::kExponential: col = (d2.sqrt() * (-1.0 / sigma_)).exp(); break;
      case Kind::kBem:
        col = row_weight_.segment(r0, nr).array() * (col_weight_[c0 + j] * d2.rsqrt());
        break;
    }
  }
  // diagonal entries that fall inside the block
  const Index lo = std::max(r0, c0), hi = std::min(r0 + nr, c0 + nc);
  for (Index i = lo; i < hi; ++i) out(i - r0, i - c0) = diag_[i];
  if (kind_ == Kind::kBem) check_finite(out, r0, c0);
  return out;
}

void KernelMatrix::check_finite(const Matrix& m, Index r0, Index c0) const {
  if (m.allFinite()) return;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j)))
        throw NumericalError("kernel entry (" + std::to_string(r0 + i) + ", " +
                             std::to_string(c0 + j) + ") is not finite: coincident points");
}

KernelMatrix KernelMatrix::permuted(std::span<const Index> order) const {
  if (static_cast<Index>(order.size()) != size())
    throw std::invalid_argument("KernelMatrix::permuted: size mismatch");
  KernelMatrix out = *this;
  for (Index t = 0; t < size(); ++t) {
    out.coords_.row(t) = coords_.row(order[t]);
    out.diag_[t] = diag_[order[t]];
    if (kind_ == Kind::kBem) {
      out.row_weight_[t] = row_weight_[order[t]];
      out.col_weight_[t] = col_weight_[order[t]];
    }
  }
  return out;
}

KernelMatrix KernelMatrix::transposed() const {
  KernelMatrix out = *this;
  std::swap(out.row_weight_, out.col_weight_);
  return out;
}

Matrix assemble_dense(const KernelMatrix& kernel, Index cap) {
  if (kernel.size() > cap)
    throw std::length_error("assemble_dense: N = " + std::to_string(kernel.size()) +
                            " exceeds the dense cap " + std::to_string(cap));
  Matrix a = kernel.block(0, kernel.size(), 0, kernel.size());
  // vectorized exp may differ in the last bit between mirrored entries
  if (kernel.symmetric()) a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  return a;
}

Vector bem_point_source_rhs(const SurfaceMesh& mesh, const Eigen::Vector3d& source) {
  const Matrix& y = mesh.centroids();
  Vector f(y.rows());
  for (Index j = 0; j < y.rows(); ++j) {
    const double d = (y.row(j).transpose() - source).norm();
    if (!(d > 0.0))
      throw std::invalid_argument("bem_point_source_rhs: centroid " + std::to_string(j) +
                                  " coincides with the source");
    f[j] = 1.0 / (kFourPi * d);
  }
  return f;
}

Vector bem_symmetric_scale(const SurfaceMesh& mesh) { return mesh.areas().cwiseSqrt(); }

}  // namespace h2mg

#pragma once

#include <memory>
#include <variant>

#include "h2mg/geometry.hpp"

namespace h2mg {

struct GaussianKernel {
  double sigma = 0.1;
  double c = 1e-3;
};

struct ExponentialKernel {
  double sigma = 0.1;
  double c = 1e-3;
};

/// Centroid-collocation single-layer potential on a triangulated surface.
/// With `symmetrized` the matrix is W^{1/2} A W^{-1/2}, W = diag(areas),
/// which is symmetric; solve it for W^{1/2} sigma with right-hand side
/// W^{1/2} f.
struct LaplaceSingleLayer {
  std::shared_ptr<const SurfaceMesh> mesh;
  bool symmetrized = false;
};

using KernelSpec = std::variant<GaussianKernel, ExponentialKernel, LaplaceSingleLayer>;

/// Checks sigma > 0, c >= 0 and the presence of a mesh. Throws
/// std::invalid_argument.
void validate(const KernelSpec& spec);

/// Matrix-free view of a kernel matrix bound to its evaluation points.
///
///   Gaussian     a_ij = exp(-|p_i - p_j|^2 / sigma),  a_ii = 1 + c
///   Exponential  a_ij = exp(-|p_i - p_j| / sigma),    a_ii = 1 + c
///   BEM          a_ij = w_j / (4 pi |x_i - y_j|),     a_ii = w_i / (4 pi R_i)
///   BEM, sym.    a_ij = sqrt(w_i w_j) / (4 pi |x_i - y_j|)
///
/// The diagonal rule is tied to the index, so a permuted view keeps it on
/// the diagonal.
class KernelMatrix {
 public:
  /// Gaussian or exponential kernel on `points`.
  KernelMatrix(const KernelSpec& spec, const PointSet& points);
  /// BEM kernel on the centroids of `spec.mesh`.
  explicit KernelMatrix(const LaplaceSingleLayer& spec);
  explicit KernelMatrix(const KernelSpec& spec);

  Index size() const { return coords_.rows(); }
  bool symmetric() const { return symmetric_; }
  const KernelSpec& spec() const { return spec_; }
  /// The evaluation points (centroids for BEM), in this view's ordering.
  PointSet points() const;

  double entry(Index i, Index j) const;

  /// Rows [r0, r0 + nr) x columns [c0, c0 + nc). Throws NumericalError when
  /// an off-diagonal entry is not finite (coincident points).
  Matrix block(Index r0, Index nr, Index c0, Index nc) const;

  /// View with rows and columns reordered: new index t is old index order[t].
  KernelMatrix permuted(std::span<const Index> order) const;
  /// View of the transposed matrix.
  KernelMatrix transposed() const;

 private:
  enum class Kind { kGaussian, kExponential, kBem };

  KernelMatrix() = default;
  void check_finite(const Matrix& m, Index r0, Index c0) const;

  KernelSpec spec_;
  Kind kind_ = Kind::kGaussian;
  int dim_ = 0;
  double sigma_ = 1.0;
  Matrix coords_;  // N x 3, unused axes zero
  Vector diag_;
  Vector row_weight_;  // BEM only
  Vector col_weight_;
  bool symmetric_ = true;
};

/// Dense assembly; throws std::length_error when N > cap.
Matrix assemble_dense(const KernelMatrix& kernel, Index cap = 20000);

/// f_j = 1 / (4 pi |y_j - source|) at each triangle centroid. Throws
/// std::invalid_argument when a centroid coincides with the source.
Vector bem_point_source_rhs(const SurfaceMesh& mesh, const Eigen::Vector3d& source);

/// sqrt(areas): the diagonal that maps the plain BEM system to its
/// symmetrized form.
Vector bem_symmetric_scale(const SurfaceMesh& mesh);

}  // namespace h2mg

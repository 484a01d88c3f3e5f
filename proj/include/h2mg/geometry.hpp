#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "h2mg/types.hpp"

namespace h2mg {

/// A set of N points in 1, 2 or 3 dimensions. Coordinates are stored
/// column-major as an N x dim matrix so that each coordinate axis is
/// contiguous.
class PointSet {
 public:
  PointSet() = default;
  /// Throws std::invalid_argument on empty input, unsupported dimension or
  /// non-finite coordinates.
  explicit PointSet(Matrix coords);

  Index size() const { return coords_.rows(); }
  int dim() const { return static_cast<int>(coords_.cols()); }
  const Matrix& coords() const { return coords_; }
  double operator()(Index i, int axis) const { return coords_(i, axis); }

  PointSet permuted(std::span<const Index> order) const;

 private:
  Matrix coords_;
};

/// Triangulated surface with one-point (centroid) quadrature data.
class SurfaceMesh {
 public:
  using Triangle = std::array<Index, 3>;

  SurfaceMesh() = default;
  /// Validates the connectivity and computes centroids, areas and
  /// regularization radii. Throws std::invalid_argument on out-of-range or
  /// repeated vertex indices and on zero-area triangles.
  SurfaceMesh(Matrix vertices, std::vector<Triangle> triangles);

  Index num_vertices() const { return vertices_.rows(); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }

  const Matrix& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  /// num_triangles x 3.
  const Matrix& centroids() const { return centroids_; }
  const Vector& areas() const { return areas_; }
  /// Mean distance from each centroid to the three vertices of its triangle.
  const Vector& reg_radii() const { return reg_radii_; }

  double total_area() const { return areas_.sum(); }
  PointSet centroid_points() const { return PointSet(centroids_); }

 private:
  Matrix vertices_;
  std::vector<Triangle> triangles_;
  Matrix centroids_;
  Vector areas_;
  Vector reg_radii_;
};

/// n_per_dim^dim points uniformly spaced on [0,1]^dim including the
/// endpoints. In 2D the first coordinate varies slowest (row-major).
PointSet build_tensor_grid(Index n_per_dim, int dim);

/// The first n points (in the ordering above) of the smallest tensor grid
/// with at least n points; the full grid when n is a perfect power.
PointSet build_grid_points(Index n, int dim);

struct TorusParams {
  Index n_u = 64;
  Index n_v = 32;
  double major_radius = 2.0;
  double minor_radius = 0.5;
  int wave_count = 3;
  double wave_amp = 0.3;
};

/// Torus whose tube radius is modulated as
/// minor_radius * (1 + wave_amp * cos(wave_count * u)), triangulated on an
/// n_u x n_v parameter grid (2 * n_u * n_v triangles). Self-intersection for
/// large modulation is not checked.
SurfaceMesh build_wavy_torus(const TorusParams& params);

/// Reads `v x y z` and `f i j k` records (1-based, triangles only; `f a/b/c`
/// index forms are accepted and the texture/normal parts ignored).
SurfaceMesh read_obj(const std::filesystem::path& path);

/// Writes one row per triangle: x,y,z,area and, when given, a value column.
void write_centroid_csv(const SurfaceMesh& mesh, const std::filesystem::path& path,
                        const Vector* values = nullptr,
                        const std::string& value_name = "value");

}  // namespace h2mg

#include "h2mg/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace h2mg {

PointSet::PointSet(Matrix coords) : coords_(std::move(coords)) {
  if (coords_.rows() < 1) throw std::invalid_argument("PointSet: no points");
  if (coords_.cols() < 1 || coords_.cols() > 3)
    throw std::invalid_argument("PointSet: dimension must be 1, 2 or 3");
  if (!coords_.allFinite())
    throw std::invalid_argument("PointSet: non-finite coordinate");
}

PointSet PointSet::permuted(std::span<const Index> order) const {
  if (static_cast<Index>(order.size()) != size())
    throw std::invalid_argument("PointSet::permuted: size mismatch");
  Matrix out(size(), coords_.cols());
  for (Index i = 0; i < size(); ++i) out.row(i) = coords_.row(order[i]);
  return PointSet(std::move(out));
}

SurfaceMesh::SurfaceMesh(Matrix vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.cols() != 3)
    throw std::invalid_argument("SurfaceMesh: vertices must be 3D");
  if (triangles_.empty()) throw std::invalid_argument("SurfaceMesh: no triangles");
  if (!vertices_.allFinite())
    throw std::invalid_argument("SurfaceMesh: non-finite vertex");

  const Index n = num_triangles();
  centroids_.resize(n, 3);
  areas_.resize(n);
  reg_radii_.resize(n);
  for (Index t = 0; t < n; ++t) {
    const auto& tri = triangles_[t];
    for (Index v : tri) {
      if (v < 0 || v >= vertices_.rows())
        throw std::invalid_argument("SurfaceMesh: vertex index out of range in triangle " +
                                    std::to_string(t));
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw std::invalid_argument("SurfaceMesh: repeated vertex in triangle " +
                                  std::to_string(t));
    const Eigen::Vector3d a = vertices_.row(tri[0]).transpose();
    const Eigen::Vector3d b = vertices_.row(tri[1]).transpose();
    const Eigen::Vector3d c = vertices_.row(tri[2]).transpose();
    const Eigen::Vector3d centroid = (a + b + c) / 3.0;
    const double area = 0.5 * (b - a).cross(c - a).norm();
    if (!(area > 0.0))
      throw std::invalid_argument("SurfaceMesh: degenerate triangle " + std::to_string(t));
    centroids_.row(t) = centroid.transpose();
    areas_[t] = area;
    reg_radii_[t] =
        ((centroid - a).norm() + (centroid - b).norm() + (centroid - c).norm()) / 3.0;
  }
}

PointSet build_tensor_grid(Index n_per_dim, int dim) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("build_tensor_grid: dim must be 1 or 2");
  if (n_per_dim < 2) throw std::invalid_argument("build_tensor_grid: n_per_dim < 2");
  const double h = 1.0 / static_cast<double>(n_per_dim - 1);
  if (dim == 1) {
    Matrix c(n_per_dim, 1);
    for (Index i = 0; i < n_per_dim; ++i) c(i, 0) = i * h;
    return PointSet(std::move(c));
  }
  Matrix c(n_per_dim * n_per_dim, 2);
  for (Index i = 0; i < n_per_dim; ++i) {
    for (Index j = 0; j < n_per_dim; ++j) {
      c(i * n_per_dim + j, 0) = i * h;
      c(i * n_per_dim + j, 1) = j * h;
    }
  }
  return PointSet(std::move(c));
}

PointSet build_grid_points(Index n, int dim) {
  if (n < 4) throw std::invalid_argument("build_grid_points: n < 4");
  Index side = 2;
  if (dim == 1) side = n;
  while (dim == 2 && side * side < n) ++side;
  PointSet grid = build_tensor_grid(side, dim);
  if (grid.size() == n) return grid;
  return PointSet(grid.coords().topRows(n));
}

SurfaceMesh build_wavy_torus(const TorusParams& p) {
  if (p.n_u < 3 || p.n_v < 3) throw std::invalid_argument("build_wavy_torus: n_u, n_v >= 3");
  if (!(p.minor_radius > 0.0) || !(p.minor_radius < p.major_radius))
    throw std::invalid_argument("build_wavy_torus: need 0 < minor_radius < major_radius");
  if (!(p.wave_amp >= 0.0)) throw std::invalid_argument("build_wavy_torus: wave_amp < 0");

  constexpr double two_pi = 2.0 * std::numbers::pi;
  Matrix vertices(p.n_u * p.n_v, 3);
  auto vid = [&](Index i, Index j) { return (i % p.n_u) * p.n_v + (j % p.n_v); };
  for (Index i = 0; i < p.n_u; ++i) {
    const double u = two_pi * static_cast<double>(i) / static_cast<double>(p.n_u);
    const double r = p.minor_radius * (1.0 + p.wave_amp * std::cos(p.wave_count * u));
    for (Index j = 0; j < p.n_v; ++j) {
      const double v = two_pi * static_cast<double>(j) / static_cast<double>(p.n_v);
      const double ring = p.major_radius + r * std::cos(v);
      vertices.row(vid(i, j)) << ring * std::cos(u), ring * std::sin(u), r * std::sin(v);
    }
  }
  std::vector<SurfaceMesh::Triangle> tris;
  tris.reserve(2 * p.n_u * p.n_v);
  for (Index i = 0; i < p.n_u; ++i) {
    for (Index j = 0; j < p.n_v; ++j) {
      const Index a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  }
  return SurfaceMesh(std::move(vertices), std::move(tris));
}

}  // namespace h2mg

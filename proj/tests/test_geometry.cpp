#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "h2mg/cluster_tree.hpp"
#include "h2mg/geometry.hpp"

using namespace h2mg;

namespace {

const double kPi = std::numbers::pi;

// Heron's formula, independent of the cross-product area in SurfaceMesh.
double heron(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const double x = (b - a).norm(), y = (c - b).norm(), z = (a - c).norm();
  const double s = 0.5 * (x + y + z);
  return std::sqrt(std::max(0.0, s * (s - x) * (s - y) * (s - z)));
}

double torus_area_oracle(int nu, int nv, double big_r, double r) {
  auto vert = [&](int i, int j) {
    const double u = 2 * kPi * i / nu, v = 2 * kPi * j / nv;
    return Eigen::Vector3d((big_r + r * std::cos(v)) * std::cos(u),
                           (big_r + r * std::cos(v)) * std::sin(u), r * std::sin(v));
  };
  double total = 0.0;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      total += heron(vert(i, j), vert(i + 1, j), vert(i + 1, j + 1));
      total += heron(vert(i, j), vert(i + 1, j + 1), vert(i, j + 1));
    }
  return total;
}

TorusParams plain_torus(Index nu, Index nv) {
  TorusParams p;
  p.n_u = nu;
  p.n_v = nv;
  p.wave_count = 0;
  p.wave_amp = 0.0;
  return p;
}

}  // namespace

TEST(TensorGrid, UnitIntervalEndpoints) {
  const PointSet p = build_tensor_grid(2, 1);
  ASSERT_EQ(p.size(), 2);
  EXPECT_EQ(p(0, 0), 0.0);
  EXPECT_EQ(p(1, 0), 1.0);
}

TEST(TensorGrid, NinePointSquare) {
  const PointSet p = build_tensor_grid(3, 2);
  ASSERT_EQ(p.size(), 9);
  EXPECT_EQ(p(0, 0), 0.0);
  EXPECT_EQ(p(0, 1), 0.0);
  EXPECT_EQ(p(4, 0), 0.5);
  EXPECT_EQ(p(4, 1), 0.5);
  EXPECT_EQ(p(8, 0), 1.0);
  EXPECT_EQ(p(8, 1), 1.0);
  // row-major: first coordinate varies slowest
  EXPECT_EQ(p(1, 0), 0.0);
  EXPECT_EQ(p(1, 1), 0.5);
}

TEST(TensorGrid, Size1024) { EXPECT_EQ(build_tensor_grid(32, 2).size(), 1024); }

TEST(TensorGrid, RejectsBadArguments) {
  EXPECT_THROW(build_tensor_grid(3, 3), std::invalid_argument);
  EXPECT_THROW(build_tensor_grid(1, 2), std::invalid_argument);
}

TEST(GridPoints, PrefixOfSmallestGrid) {
  const PointSet p = build_grid_points(512, 2);
  const PointSet full = build_tensor_grid(23, 2);
  ASSERT_EQ(p.size(), 512);
  EXPECT_EQ(p.coords(), full.coords().topRows(512));
  EXPECT_EQ(build_grid_points(1024, 2).coords(), build_tensor_grid(32, 2).coords());
}

TEST(PointSet, RejectsInvalidCoordinates) {
  EXPECT_THROW(PointSet(Matrix(0, 2)), std::invalid_argument);
  Matrix bad = Matrix::Zero(3, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(PointSet{bad}, std::invalid_argument);
  EXPECT_THROW(PointSet(Matrix::Zero(3, 4)), std::invalid_argument);
}

TEST(SurfaceMesh, ValidatesConnectivity) {
  Matrix v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  EXPECT_THROW(SurfaceMesh(v, {{0, 1, 3}}), std::invalid_argument);
  EXPECT_THROW(SurfaceMesh(v, {{0, 1, 1}}), std::invalid_argument);
  Matrix collinear(3, 3);
  collinear << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  EXPECT_THROW(SurfaceMesh(collinear, {{0, 1, 2}}), std::invalid_argument);
}

TEST(SurfaceMesh, RegRadiusIsMeanCentroidVertexDistance) {
  Matrix v(3, 3);
  v << 0.1, -0.3, 0.7, 1.9, 0.2, -0.4, 0.3, 1.4, 0.5;
  const SurfaceMesh m(v, {{0, 1, 2}});
  const Eigen::Vector3d c = (v.row(0) + v.row(1) + v.row(2)).transpose() / 3.0;
  const double expected =
      ((v.row(0).transpose() - c).norm() + (v.row(1).transpose() - c).norm() +
       (v.row(2).transpose() - c).norm()) /
      3.0;
  EXPECT_NEAR(m.reg_radii()[0], expected, 1e-12 * expected);
  EXPECT_NEAR(m.areas()[0], heron(v.row(0), v.row(1), v.row(2)), 1e-12);
}

TEST(WavyTorus, CoarseMeshAgainstHeronOracle) {
  const SurfaceMesh m = build_wavy_torus(plain_torus(3, 3));
  EXPECT_EQ(m.num_triangles(), 18);
  const double exact = 4 * kPi * kPi * 2.0 * 0.5;
  const double oracle = torus_area_oracle(3, 3, 2.0, 0.5);
  EXPECT_NEAR(m.total_area(), oracle, 1e-12 * oracle);
  // inscribed polyhedron: below the smooth area, and far below on 3x3
  EXPECT_LT(m.total_area(), exact);
  EXPECT_NEAR(m.total_area(), 20.525, 1e-3);
}

TEST(WavyTorus, FineMeshWithinOnePercent) {
  const SurfaceMesh m = build_wavy_torus(plain_torus(64, 32));
  const double exact = 4 * kPi * kPi * 2.0 * 0.5;
  EXPECT_EQ(m.num_triangles(), 2 * 64 * 32);
  EXPECT_LT(std::abs(m.total_area() - exact) / exact, 0.01);
}

TEST(WavyTorus, AreaConvergesUnderRefinement) {
  const double exact = 4 * kPi * kPi * 2.0 * 0.5;
  double prev = std::numeric_limits<double>::infinity();
  for (Index n : {4, 8, 16, 32}) {
    const double err = std::abs(build_wavy_torus(plain_torus(2 * n, n)).total_area() - exact);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(WavyTorus, DefaultWavyMeshIsPositive) {
  const SurfaceMesh m = build_wavy_torus(TorusParams{});
  EXPECT_EQ(m.num_triangles(), 2 * 64 * 32);
  EXPECT_GT(m.areas().minCoeff(), 0.0);
  EXPECT_GT(m.reg_radii().minCoeff(), 0.0);
}

TEST(WavyTorus, RejectsDegenerateRadii) {
  TorusParams p;
  p.minor_radius = 3.0;
  EXPECT_THROW(build_wavy_torus(p), std::invalid_argument);
  p = TorusParams{};
  p.n_u = 2;
  EXPECT_THROW(build_wavy_torus(p), std::invalid_argument);
}

TEST(MeshIo, ObjRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "h2mg_obj_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "tet.obj";
  {
    std::ofstream out(path);
    out << "# tetrahedron\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
        << "f 1 3 2\nf 1/1 2/2 4/4\nf 1//1 4//4 3//3\nf 2/1/1 3/1/1 4/1/1\n";
  }
  const SurfaceMesh m = read_obj(path);
  EXPECT_EQ(m.num_vertices(), 4);
  ASSERT_EQ(m.num_triangles(), 4);
  EXPECT_EQ(m.triangles()[1], (SurfaceMesh::Triangle{0, 1, 3}));
  EXPECT_NEAR(m.total_area(), 1.5 + std::sqrt(3.0) / 2.0, 1e-14);

  const auto csv = dir / "c.csv";
  Vector vals = Vector::LinSpaced(4, 1.0, 4.0);
  write_centroid_csv(m, csv, &vals, "sigma");
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "x,y,z,area,sigma");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(MeshIo, RejectsBadFaces) {
  const auto path = std::filesystem::temp_directory_path() / "h2mg_bad.obj";
  {
    std::ofstream out(path);
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n";
  }
  EXPECT_THROW(read_obj(path), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n";
  }
  EXPECT_THROW(read_obj(path), std::invalid_argument);
  EXPECT_THROW(read_obj("/nonexistent/mesh.obj"), std::invalid_argument);
}

TEST(ClusterTree, PowerOfTwoLine) {
  const auto t = ClusterTree::build(build_tensor_grid(1024, 1), 16, 2);
  ASSERT_EQ(t.level(0).size(), 64u);
  for (const auto& node : t.level(0)) EXPECT_EQ(node.size(), 16);
  EXPECT_EQ(t.num_levels(), 7);
  EXPECT_EQ(t.level(6).size(), 1u);
}

TEST(ClusterTree, NinePoints) {
  const auto t = ClusterTree::build(build_tensor_grid(3, 2), 4, 2);
  std::vector<Index> sizes;
  for (const auto& node : t.level(0)) sizes.push_back(node.size());
  EXPECT_EQ(sizes, (std::vector<Index>{3, 2, 2, 2}));
}

TEST(ClusterTree, PartitionAndNesting) {
  const PointSet pts = build_grid_points(1000, 2);
  const auto t = ClusterTree::build(pts, 32, 4);
  for (int k = 0; k < t.num_levels(); ++k) {
    const auto& lv = t.level(k);
    EXPECT_EQ(lv.front().begin, 0);
    EXPECT_EQ(lv.back().end, pts.size());
    for (std::size_t b = 0; b + 1 < lv.size(); ++b) EXPECT_EQ(lv[b].end, lv[b + 1].begin);
    if (k == 0) {
      for (const auto& node : lv) EXPECT_LE(node.size(), 32);
      continue;
    }
    EXPECT_LT(lv.size(), t.level(k - 1).size());
    for (const auto& node : lv) {
      const Index nchild = node.child_end - node.child_begin;
      EXPECT_GE(nchild, std::min<Index>(4, t.level(k - 1).size()));
      for (Index c = node.child_begin; c < node.child_end; ++c)
        EXPECT_TRUE(node.box.contains(t.level(k - 1)[c].box));
    }
  }
}

TEST(ClusterTree, RemainderGoesToTrailingGroup) {
  // 32 leaves, patch 3: groups of 3 with a trailing group of 5
  const auto t3 = ClusterTree::build(build_grid_points(200, 2), 8, 3);
  for (int k = 1; k < t3.num_levels(); ++k) {
    const auto& lv = t3.level(k);
    for (std::size_t b = 0; b + 1 < lv.size(); ++b)
      EXPECT_EQ(lv[b].child_end - lv[b].child_begin, 3);
    EXPECT_GE(lv.back().child_end - lv.back().child_begin, 3);
  }
  EXPECT_EQ(t3.level(0).size(), 32u);
  EXPECT_EQ(t3.level(1).size(), 10u);
  EXPECT_EQ(t3.level(1).back().child_end - t3.level(1).back().child_begin, 5);
}

TEST(ClusterTree, PermutationRoundTrip) {
  const PointSet pts = build_grid_points(777, 2);
  const auto t = ClusterTree::build(pts, 16, 4);
  std::set<Index> seen(t.tree_to_original().begin(), t.tree_to_original().end());
  EXPECT_EQ(seen.size(), 777u);
  Vector x = Vector::LinSpaced(777, -3.0, 5.0);
  EXPECT_EQ(t.to_original_order(t.to_tree_order(x)), x);
  EXPECT_EQ(t.to_tree_order(t.to_original_order(x)), x);
  for (Index i = 0; i < 777; ++i) EXPECT_EQ(t.tree_to_original()[t.original_to_tree()[i]], i);
}

TEST(ClusterTree, RejectsBadArguments) {
  const PointSet pts = build_tensor_grid(10, 1);
  EXPECT_THROW(ClusterTree::build(pts, 16, 2), std::invalid_argument);
  EXPECT_THROW(ClusterTree::build(pts, 3, 2), std::invalid_argument);
  EXPECT_THROW(ClusterTree::build(pts, 4, 1), std::invalid_argument);
}

TEST(Admissibility, BoxRules) {
  Box a{{0, 0, 0}, {1, 1, 0}};
  Box touching{{1, 0, 0}, {2, 1, 0}};
  Box apart{{1.5, 0, 0}, {2.5, 1, 0}};
  EXPECT_FALSE(admissible(a, a, 0.0));
  EXPECT_FALSE(admissible(a, touching, 0.0));
  EXPECT_TRUE(admissible(a, apart, 0.0));
  // gap 0.5 vs eta * diam = 1 * sqrt(2)
  EXPECT_FALSE(admissible(a, apart, 1.0));
  EXPECT_DOUBLE_EQ(a.distance(apart), 0.5);
}

TEST(Admissibility, TreeNodes) {
  const auto t = ClusterTree::build(build_tensor_grid(256, 1), 16, 2);
  EXPECT_FALSE(admissible(t, 0, 3, 3, 0.0));
  EXPECT_FALSE(admissible(t, 0, 3, 4, 0.0));
  EXPECT_TRUE(admissible(t, 0, 3, 5, 0.0));
}

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "h2mg/cg.hpp"
#include "h2mg/multigrid.hpp"
#include "h2mg/oracle.hpp"

using namespace h2mg;

namespace {

Vector randn(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

Matrix shifted_symmetric(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = ud(rng);
  Matrix s = 0.5 * (m + m.transpose());
  const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff();
  s.diagonal().array() += 1.0 - lo;
  return s;
}

LinearOperator dense_op(const Matrix& a) {
  return [&a](const Vector& x) -> Vector { return a * x; };
}

H2Matrix gaussian(Index n, double sigma, double c, H2Options opt, int dim = 2) {
  const PointSet pts = build_grid_points(n, dim);
  const KernelMatrix k(GaussianKernel{sigma, c}, pts);
  return build_h2(k, ClusterTree::build(pts, std::min<Index>(32, n), 4), opt);
}

HierarchyOptions to_top() {
  HierarchyOptions ho;
  ho.coarse_blocks = 0;
  return ho;
}

H2Options two_level() {
  H2Options o;
  o.coarse_cap = 64;
  o.max_levels = 2;
  return o;
}

double a_norm(const Matrix& a, const Vector& e) { return std::sqrt(e.dot(a * e)); }

}  // namespace

TEST(Cg, ZeroIterationsReturnsStart) {
  const Matrix a = shifted_symmetric(10, 1);
  const Vector x0 = randn(10, 2);
  EXPECT_EQ(cg_iterate(dense_op(a), randn(10, 3), x0, 0), x0);
}

TEST(Cg, IdentityInOneStep) {
  const Vector b = randn(17, 4);
  int applies = 0;
  const Vector x = cg_iterate([](const Vector& v) { return v; }, b, Vector::Zero(17), 1, &applies);
  EXPECT_EQ(x, b);
  EXPECT_GE(applies, 1);
}

TEST(Cg, FiniteTermination50) {
  const Matrix a = shifted_symmetric(50, 5);
  const Vector b = randn(50, 6);
  const Vector x = cg_iterate(dense_op(a), b, Vector::Zero(50), 50);
  const Vector ref = oracle::dense_solve(a, b);
  EXPECT_LE((x - ref).norm() / ref.norm(), 1e-8);
}

TEST(Cg, NanIsAnError) {
  const LinearOperator bad = [](const Vector& v) {
    return Vector(Vector::Constant(v.size(), std::numeric_limits<double>::quiet_NaN()));
  };
  EXPECT_THROW(cg_iterate(bad, Vector::Ones(4), Vector::Zero(4), 3), NumericalError);
}

TEST(Cg, SolveTerminatesWithinN) {
  const Matrix a = shifted_symmetric(40, 8);
  const Vector b = randn(40, 9);
  const CgResult r = cg_solve(dense_op(a), b, Vector::Zero(40), 1e-10, 40);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 40);
  EXPECT_EQ(r.history.size(), static_cast<std::size_t>(r.iterations));
  EXPECT_LE((b - a * r.x).norm() / b.norm(), 1e-9);

  const Vector x_true = oracle::dense_solve(a, b);
  const CgResult e = cg_solve(dense_op(a), b, Vector::Zero(40), 1e-10, 40, x_true);
  EXPECT_TRUE(e.converged);
  EXPECT_LT(oracle::a_norm_error(a, e.x, x_true) / b.norm(), 1e-9);
}

TEST(Hierarchy, SingleLevelIsDirectSolve) {
  const PointSet pts = build_grid_points(200, 2);
  const KernelMatrix k(GaussianKernel{0.1, 1e-3}, pts);
  const H2Matrix a = build_h2(k, ClusterTree::build(pts, 32, 4));
  const OperatorHierarchy h(a);
  ASSERT_EQ(h.num_levels(), 1);
  const Vector b = randn(200, 1);
  const Vector x = vcycle(h, b, Vector::Zero(200));
  const Vector ref = oracle::dense_solve(assemble_dense(k), b);
  EXPECT_LE((x - ref).norm() / ref.norm(), 1e-12 * 1e3);  // cond(A) ~ 1e3
  EXPECT_LE((a.matvec(x) - b).norm() / b.norm(), 1e-12);
}

TEST(Hierarchy, TwoLevelCoarseIsGalerkin) {
  const H2Matrix a = gaussian(512, 0.1, 1e-3, two_level());
  const OperatorHierarchy h(a, to_top());
  ASSERT_EQ(h.num_levels(), 2);
  const Matrix expected =
      oracle::dense_galerkin(a.op().to_dense(), a.op().row_basis().to_dense());
  EXPECT_LE((h.coarse_matrix() - expected).norm() / expected.norm(), 1e-10);
  EXPECT_TRUE(h.coarse_uses_cholesky());
}

TEST(Hierarchy, GaussianN4096CoarseSpd) {
  const H2Matrix a = gaussian(4096, 0.1, 1e-3, H2Options{});
  const OperatorHierarchy h(a);
  EXPECT_GE(h.num_levels(), 2);
  EXPECT_TRUE(h.coarse_uses_cholesky());
  EXPECT_GT(h.coarse_matrix().diagonal().minCoeff(), 0.0);
  EXPECT_TRUE(oracle::spd_check(h.coarse_matrix()));
  for (int k = 0; k + 1 < h.num_levels(); ++k)
    EXPECT_EQ(h.op(k + 1).size(), h.op(k).row_basis().cols());
}

TEST(Hierarchy, NonSymmetricUsesLu) {
  auto mesh = std::make_shared<const SurfaceMesh>(build_wavy_torus(TorusParams{16, 8}));
  const KernelMatrix k(LaplaceSingleLayer{mesh});
  H2Options o;
  o.coarse_cap = 64;
  const H2Matrix a = build_h2(k, ClusterTree::build(mesh->centroid_points(), 16, 4), o);
  const OperatorHierarchy h(a);
  EXPECT_FALSE(h.coarse_uses_cholesky());
  const Vector r = randn(h.coarse_matrix().rows(), 1);
  EXPECT_LE((h.coarse_matrix() * h.coarse_solve(r) - r).norm(), 1e-10 * r.norm());
}

TEST(Hierarchy, IndefiniteCoarseThrowsUnlessFallback) {
  // a dense matrix with a negative eigenvalue at the top
  auto data = std::make_shared<H2Data>();
  data->dims = {2};
  data->partition = {{0, 2}};
  Matrix t(2, 2);
  t << 1, 2, 2, 1;
  data->top = std::make_shared<Matrix>(t);
  const H2Matrix bad(data, std::make_shared<ClusterTree>(
                               ClusterTree::build(build_tensor_grid(4, 1), 4, 2)));
  EXPECT_THROW(OperatorHierarchy{bad}, NumericalError);
  HierarchyOptions ho;
  ho.lu_fallback = true;
  const OperatorHierarchy h(bad, ho);
  EXPECT_FALSE(h.coarse_uses_cholesky());
}

TEST(Vcycle, FixedPoint) {
  H2Options o;
  o.coarse_cap = 64;
  const H2Matrix a = gaussian(1024, 0.1, 1e-3, o);
  const OperatorHierarchy h(a);
  ASSERT_GE(h.num_levels(), 2);
  const Vector x_true = randn(1024, 3);
  const Vector x = vcycle(h, a.matvec(x_true), x_true);
  EXPECT_LE((x - x_true).norm() / x_true.norm(), 1e-12);
}

TEST(Vcycle, CoarseCorrectionDoesNotIncreaseEnergyError) {
  const H2Matrix a = gaussian(512, 0.1, 1e-3, two_level());
  const OperatorHierarchy h(a, to_top());
  ASSERT_EQ(h.num_levels(), 2);
  const Matrix ad = a.op().to_dense();
  SmootherConfig cfg;
  cfg.n_f = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Vector x_true = randn(512, seed);
    const Vector b = ad * x_true;
    const Vector x0 = randn(512, 100 + seed);
    const Vector x1 = h.vcycle_tree(b, x0, cfg);
    EXPECT_LE(a_norm(ad, x1 - x_true), a_norm(ad, x0 - x_true) * (1.0 + 1e-12));
  }
}

TEST(Vcycle, ObserverSeesBothLegs) {
  H2Options o;
  o.coarse_cap = 64;
  const H2Matrix a = gaussian(1024, 0.1, 1e-3, o);
  const OperatorHierarchy h(a, to_top());
  const int l = h.num_levels();
  ASSERT_GE(l, 3);
  std::vector<std::pair<int, Leg>> seen;
  CycleCounters counters;
  h.vcycle_tree(randn(1024, 1), Vector::Zero(1024), SmootherConfig{}, &counters,
                [&](int level, Leg leg, const Vector& e) {
                  EXPECT_EQ(e.size(), h.op(level).size());
                  seen.emplace_back(level, leg);
                });
  std::vector<std::pair<int, Leg>> expected;
  for (int k = 0; k + 1 < l; ++k) expected.emplace_back(k, Leg::kDown);
  for (int k = l - 2; k >= 0; --k) expected.emplace_back(k, Leg::kUp);
  EXPECT_EQ(seen, expected);
  EXPECT_EQ(counters.fine_smooth_iters, 2);
  EXPECT_EQ(counters.coarse_smooth_iters, 2 * 40 * (l - 2));
  EXPECT_GT(counters.flops, 0);
}

TEST(Solve, ZeroRightHandSide) {
  const H2Matrix a = gaussian(256, 0.1, 1e-3, two_level());
  const OperatorHierarchy h(a);
  const SolveResult r = solve(h, Vector::Zero(256), Vector::Zero(256), {}, 1e-9, 10);
  EXPECT_TRUE(r.stats.converged);
  EXPECT_EQ(r.stats.vcycles, 0);
  EXPECT_TRUE(r.stats.history.empty());
  EXPECT_EQ(r.x, Vector::Zero(256));
}

TEST(Solve, GaussianConvergesAndReportsHonestMetric) {
  const H2Matrix a = gaussian(1024, 0.1, 1e-3, H2Options{});
  const OperatorHierarchy h(a);
  const Vector x_true = randn(1024, 42);
  const Vector b = a.matvec(x_true);
  const SolveResult r = solve(h, b, Vector::Zero(1024), {}, 1e-9, 50, x_true);
  EXPECT_TRUE(r.stats.converged);
  EXPECT_LE(r.stats.vcycles, 5);
  EXPECT_EQ(r.stats.history.size(), static_cast<std::size_t>(r.stats.vcycles));
  EXPECT_LT(r.stats.final_metric, 1e-9);
  // recompute the metric with the dense tree-order operator
  const ClusterTree& t = a.tree();
  const Matrix ad = a.op().to_dense();
  const Vector e = t.to_tree_order(r.x - x_true);
  EXPECT_LT(a_norm(ad, e) / b.norm(), 1e-9 * 1.01);
  for (std::size_t i = 1; i < r.stats.history.size(); ++i)
    EXPECT_GE(r.stats.history[i].cum_flops, r.stats.history[i - 1].cum_flops);
}

TEST(Solve, ResidualModeAndDeterminism) {
  const H2Matrix a = gaussian(1024, 0.1, 1e-3, H2Options{});
  const OperatorHierarchy h(a);
  const Vector b = randn(1024, 7);
  const SolveResult r1 = solve(h, b, Vector::Zero(1024), {}, 1e-8, 50);
  const SolveResult r2 = solve(h, b, Vector::Zero(1024), {}, 1e-8, 50);
  EXPECT_TRUE(r1.stats.converged);
  EXPECT_LT((b - a.matvec(r1.x)).norm() / b.norm(), 1e-8);
  EXPECT_TRUE(std::isnan(r1.stats.history.back().rel_anorm_err));
  EXPECT_EQ(r1.x, r2.x);
  EXPECT_EQ(r1.stats.vcycles, r2.stats.vcycles);
}

TEST(Solve, NonConvergenceIsFlagged) {
  const H2Matrix a = gaussian(1024, 0.01, 1e-5, H2Options{});
  const OperatorHierarchy h(a);
  const Vector x_true = randn(1024, 1);
  const SolveResult r = solve(h, a.matvec(x_true), Vector::Zero(1024), {}, 1e-14, 2, x_true);
  EXPECT_FALSE(r.stats.converged);
  EXPECT_EQ(r.stats.vcycles, 2);
}

TEST(Solve, CsvFormat) {
  const H2Matrix a = gaussian(256, 0.1, 1e-3, two_level());
  const OperatorHierarchy h(a);
  const Vector x_true = randn(256, 1);
  const SolveResult r = solve(h, a.matvec(x_true), Vector::Zero(256), {}, 1e-9, 20, x_true);
  std::ostringstream plain, tagged;
  r.stats.write_csv(plain);
  r.stats.write_csv(tagged, "run-1");
  std::istringstream in(plain.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "cycle,resid_2norm,rel_Anorm_err,cum_flops,wall_ms");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
  }
  EXPECT_EQ(rows, r.stats.vcycles);
  EXPECT_EQ(tagged.str().rfind("run_id,cycle,", 0), 0u);
  EXPECT_NE(tagged.str().find("\nrun-1,1,"), std::string::npos);
}

TEST(ErrorBasis, SpanAndComplement) {
  H2Options o;
  o.coarse_cap = 64;
  const H2Matrix a = gaussian(1024, 0.01, 1e-3, o, 1);
  ASSERT_GE(a.num_levels(), 2);
  const auto& u = a.op().row_basis();
  const ClusterTree& t = a.tree();

  const Vector in_span = t.to_original_order(u.apply(randn(u.cols(), 1)));
  const ErrorBasisSplit s1 = error_basis_decomposition(a, in_span);
  EXPECT_LE(s1.complement.norm(), 1e-12 * in_span.norm());
  EXPECT_LE(s1.complement_coeffs.norm(), 1e-12 * in_span.norm());

  const ErrorBasisSplit s0 = error_basis_decomposition(a, randn(1024, 2));
  const ErrorBasisSplit s2 = error_basis_decomposition(a, s0.complement);
  EXPECT_LE(s2.coarse.norm(), 1e-12 * s0.complement.norm());

  EXPECT_EQ(s0.complement_coeffs.size(), 1024 - u.cols());
  EXPECT_NEAR(s0.complement_coeffs.norm(), s0.complement.norm(), 1e-12 * s0.complement.norm());
  EXPECT_NEAR(std::hypot(s0.coarse.norm(), s0.complement.norm()), randn(1024, 2).norm(), 1e-10);
}

TEST(ErrorBasis, SingleLevelRejected) {
  const H2Matrix a = gaussian(100, 0.1, 1e-3, H2Options{});
  EXPECT_THROW(error_basis_decomposition(a, Vector::Zero(100)), std::invalid_argument);
}

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h2mg/bench.hpp"

using namespace h2mg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("h2mg_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
  std::ifstream in(file);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

BenchOptions quick() {
  BenchOptions o;
  o.max_cycles = 30;
  o.cg_max_iters = 500;
  return o;
}

}  // namespace

TEST(BenchKernel, SmallestSizeEmitsTwoRows) {
  for (PointKernel kind : {PointKernel::kGaussian, PointKernel::kExponential}) {
    const BenchReport rep = bench_kernel(kind, 0.1, 1e-3, {64}, quick());
    ASSERT_EQ(rep.rows.size(), 2u) << to_string(kind);
    EXPECT_EQ(rep.rows[0].method, "h2mg");
    EXPECT_EQ(rep.rows[1].method, "cg");
    for (const auto& r : rep.rows) {
      EXPECT_EQ(r.n, 64);
      EXPECT_EQ(r.status, "ok");
      EXPECT_TRUE(r.converged);
      EXPECT_LT(r.final_metric, 1e-9);
    }
  }
}

TEST(BenchKernel, FilesLinkToManifest) {
  const fs::path dir = scratch("kernel_files");
  const BenchReport rep = bench_kernel(PointKernel::kGaussian, 0.1, 1e-3, {64, 256}, quick());
  rep.write(dir);
  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  EXPECT_EQ(manifest["id"], rep.manifest.id);
  EXPECT_EQ(manifest["experiment"], "gaussian");
  for (const char* key : {"git_describe", "timestamp", "params"})
    EXPECT_TRUE(manifest.contains(key)) << key;
  for (const char* key : {"sigma", "c", "epsilon", "n_f", "n_c", "tol", "seed", "sizes"})
    EXPECT_TRUE(manifest["params"].contains(key)) << key;

  const auto results = read_csv(dir / "results.csv");
  ASSERT_EQ(results.size(), 5u);
  EXPECT_EQ(results[0].front(), "run_id");
  EXPECT_EQ(results[0].size(), 10u);
  for (std::size_t i = 1; i < results.size(); ++i) {
    EXPECT_EQ(results[i].front(), rep.manifest.id);
    EXPECT_EQ(results[i].size(), 10u);
  }
  const auto conv = read_csv(dir / "convergence.csv");
  EXPECT_EQ(conv.size(), rep.history.size() + 1);
  for (std::size_t i = 1; i < conv.size(); ++i) EXPECT_EQ(conv[i].front(), rep.manifest.id);
  EXPECT_FALSE(fs::exists(dir / "charge.csv"));
}

TEST(BenchKernel, DeterministicUnderFixedSeed) {
  const BenchReport a = bench_kernel(PointKernel::kExponential, 0.1, 1e-3, {256}, quick());
  const BenchReport b = bench_kernel(PointKernel::kExponential, 0.1, 1e-3, {256}, quick());
  EXPECT_EQ(a.manifest.id, b.manifest.id);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].iterations, b.rows[i].iterations);
    EXPECT_EQ(a.rows[i].final_metric, b.rows[i].final_metric);
    EXPECT_EQ(a.rows[i].flops, b.rows[i].flops);
  }
  BenchOptions other = quick();
  other.seed = 1;
  EXPECT_NE(bench_kernel(PointKernel::kExponential, 0.1, 1e-3, {64}, other).manifest.id,
            a.manifest.id);
}

TEST(BenchKernel, BadSizeBecomesStatusRow) {
  const BenchReport rep = bench_kernel(PointKernel::kGaussian, 0.1, 1e-3, {10, 64}, quick());
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].n, 10);
  EXPECT_EQ(rep.rows[0].status.rfind("error", 0), 0u);
  EXPECT_EQ(rep.rows[1].status, "ok");
}

TEST(BenchKernel, DenseRowWhenRequested) {
  BenchOptions o = quick();
  o.dense_cap = 100;
  const BenchReport rep = bench_kernel(PointKernel::kGaussian, 0.1, 1e-3, {64}, o);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[2].method, "dense_cholesky");
  EXPECT_LT(rep.rows[2].final_metric, 1e-9);
}

TEST(BenchKernel, InvalidKernelParameters) {
  EXPECT_THROW(bench_kernel(PointKernel::kGaussian, -1.0, 1e-3, {64}, quick()),
               std::invalid_argument);
}

TEST(BenchBem, TinyTorusSmoke) {
  TorusParams tp;
  const fs::path dir = scratch("bem_tiny");
  const BenchReport rep = bench_bem(BemSetup{tp}, {{3, 3}}, quick());
  rep.write(dir);
  ASSERT_EQ(rep.charges.size(), 1u);
  EXPECT_EQ(rep.charges[0].n, 18);
  EXPECT_TRUE(rep.charges[0].sigma.allFinite());
  const auto charge = read_csv(dir / "charge.csv");
  ASSERT_EQ(charge.size(), 19u);
  EXPECT_EQ(charge[0], (std::vector<std::string>{"run_id", "N", "x", "y", "z", "area", "sigma"}));
  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  EXPECT_EQ(manifest["params"]["system"], "symmetrized");
}

TEST(BenchBem, SymmetrizedChargeSolvesPlainSystem) {
  // a few hundred triangles: the MG hierarchy is a direct solve
  BenchOptions o = quick();
  o.tol = 1e-10;
  const BenchReport rep = bench_bem(BemSetup{}, {{16, 8}}, o);
  ASSERT_EQ(rep.charges.size(), 1u);
  auto mesh = rep.charges[0].mesh;
  const Matrix a = assemble_dense(KernelMatrix(LaplaceSingleLayer{mesh}));
  const Vector f = bem_point_source_rhs(*mesh, Eigen::Vector3d(6, 0, 0));
  EXPECT_LE((a * rep.charges[0].sigma - f).norm() / f.norm(), 1e-8);
}

TEST(BenchBem, DefaultTorusChargesFinite) {
  BenchOptions o;
  o.max_cycles = 3;
  o.cg_max_iters = 50;
  const TorusParams tp;
  const BenchReport rep = bench_bem(BemSetup{}, {{tp.n_u, tp.n_v}}, o);
  ASSERT_EQ(rep.charges.size(), 1u);
  EXPECT_EQ(rep.charges[0].n, 2 * tp.n_u * tp.n_v);
  EXPECT_TRUE(rep.charges[0].sigma.allFinite());
}

TEST(BenchBem, ObjMesh) {
  const fs::path dir = scratch("bem_obj");
  fs::create_directories(dir);
  {
    std::ofstream obj(dir / "tet.obj");
    obj << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";
  }
  const BenchReport rep = bench_bem_mesh(dir / "tet.obj", BemSetup{}, quick());
  ASSERT_FALSE(rep.rows.empty());
  EXPECT_EQ(rep.rows[0].n, 4);
}

TEST(Analyze, SnapshotsPerLeg) {
  const fs::path dir = scratch("analyze");
  const ErrorBasisReport rep = analyze_error_basis(512, 0.01, 1e-3, BenchOptions{});
  ASSERT_EQ(rep.snapshots.size(), 4u);
  EXPECT_EQ(rep.snapshots[0].leg, Leg::kDown);
  EXPECT_EQ(rep.snapshots[1].leg, Leg::kUp);
  EXPECT_EQ(rep.snapshots[3].cycle, 2);
  EXPECT_EQ(rep.snapshots[0].coarse.size(), rep.dims.at(1));
  EXPECT_EQ(rep.snapshots[0].complement.size(), 512 - rep.dims.at(1));
  rep.write(dir);
  EXPECT_EQ(read_csv(dir / "results.csv").size(), 5u);
  EXPECT_EQ(read_csv(dir / "components.csv").size(), 1u + 4u * 512u);
  EXPECT_THROW(analyze_error_basis(128, 0.01, 1e-3, BenchOptions{}), std::invalid_argument);
}

TEST(Verify, DefaultsPass) {
  const VerifyReport rep = verify(PointKernel::kGaussian, 0.1, 1e-3, 512, 1e-8, BenchOptions{});
  EXPECT_TRUE(rep.pass());
  for (const auto& ch : rep.checks) EXPECT_FALSE(ch.skipped) << ch.name;
}

TEST(Verify, LooseBuildFailsTightCheck) {
  BenchOptions o;
  o.epsilon = 1e-3;
  EXPECT_FALSE(verify(PointKernel::kGaussian, 0.1, 1e-3, 512, 1e-9, o).pass());
}

TEST(Verify, SingleLevelPassesTrivially) {
  const VerifyReport rep = verify(PointKernel::kExponential, 0.1, 1e-3, 64, 1e-8, BenchOptions{});
  EXPECT_TRUE(rep.pass());
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h2mg/multigrid.hpp"

namespace h2mg {

struct BenchOptions {
  Index leaf_size = 32;
  Index patch = 4;
  double eta = 0.0;
  double epsilon = 1e-9;
  SmootherConfig smoother;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  int max_cycles = 200;
  /// Plain CG baseline; 0 disables it.
  int cg_max_iters = 5000;
  /// Dense Cholesky timing row for N <= dense_cap; 0 disables it.
  Index dense_cap = 0;
};

/// Parameters and provenance of one run. The id is derived from the
/// parameters, so identical settings give identical ids.
struct RunManifest {
  std::string id;
  std::string experiment;
  nlohmann::json params;
  std::string git_describe;
  std::string timestamp;

  static RunManifest make(std::string experiment, nlohmann::json params);
  nlohmann::json to_json() const;
};

/// One solver run on one problem size.
struct ResultRow {
  std::string method;  // h2mg, cg, dense_cholesky
  Index n = 0;
  /// V-cycles for h2mg, iterations for cg, 0 for dense.
  int iterations = 0;
  bool converged = false;
  double final_metric = 0.0;
  double wall_ms = 0.0;
  /// H2 build + hierarchy setup (h2mg), H2 build (cg), assembly +
  /// factorization (dense).
  double setup_ms = 0.0;
  std::int64_t flops = 0;
  /// "ok", "not_converged" or an error description.
  std::string status = "ok";
};

struct ConvergenceRow {
  std::string method;
  Index n = 0;
  int step = 0;
  double metric = 0.0;
  std::int64_t cum_flops = 0;
};

/// Per-triangle solution of one BEM run.
struct ChargeField {
  Index n = 0;
  std::shared_ptr<const SurfaceMesh> mesh;
  Vector sigma;
};

struct BenchReport {
  RunManifest manifest;
  std::vector<ResultRow> rows;
  std::vector<ConvergenceRow> history;
  std::vector<ChargeField> charges;

  /// Writes results.csv, convergence.csv, manifest.json and, for BEM runs,
  /// charge.csv into `dir` (created if needed).
  void write(const std::filesystem::path& dir) const;
};

enum class PointKernel { kGaussian, kExponential };

/// For each N >= 64: 2D grid (build_grid_points), H2 build, x_true standard
/// normal from `seed`, b = A x_true, then H2-MG and plain CG on the same
/// H2 operator. The metric is the relative A-norm error. Failures of one
/// size become status rows.
BenchReport bench_kernel(PointKernel kind, double sigma, double c,
                         const std::vector<Index>& sizes, const BenchOptions& options);

struct BemSetup {
  TorusParams torus;
  Eigen::Vector3d source{6.0, 0.0, 0.0};
  /// Solve the plain collocation system instead of its symmetrized form.
  bool plain = false;
};

/// For each (n_u, n_v): wavy torus mesh, point-source right-hand side,
/// H2-MG and CG by relative residual. Unless `setup.plain`, the system
/// solved is the symmetrized one and the residual is measured there; the
/// reported charge is always sigma of the original system.
BenchReport bench_bem(const BemSetup& setup, const std::vector<std::pair<Index, Index>>& sizes,
                      const BenchOptions& options);

/// Same as bench_bem on a single mesh read from an OBJ file.
BenchReport bench_bem_mesh(const std::filesystem::path& obj, const BemSetup& setup,
                           const BenchOptions& options);

struct ErrorComponents {
  int cycle = 0;
  Leg leg = Leg::kDown;
  /// U_0^T e.
  Vector coarse;
  /// Q_0^T e.
  Vector complement;
};

struct ErrorBasisReport {
  RunManifest manifest;
  std::vector<Index> dims;
  std::vector<ErrorComponents> snapshots;

  /// results.csv (one summary row per snapshot), components.csv (every
  /// component) and manifest.json.
  void write(const std::filesystem::path& dir) const;
};

/// 1D Gaussian on N equispaced points of [0, 1], x_true standard normal,
/// two V-cycles. Records the fine-level error after the downward and after
/// the upward smoothing of each cycle. Requires N >= 256.
ErrorBasisReport analyze_error_basis(Index n, double sigma, double c,
                                     const BenchOptions& options);

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
  bool skipped = false;
};

struct VerifyReport {
  RunManifest manifest;
  std::vector<VerifyCheck> checks;
  bool pass() const;
};

/// Oracle equivalence suite on a 2D grid of N points: matvec against dense
/// assembly (limit `tol`), Galerkin restriction against the dense triple
/// product, SPD of every level, fixed point of the V-cycle, basis
/// orthonormality. Builds with a coarse cap of 64 so that small N still
/// have basis levels. Requires N <= 4096.
VerifyReport verify(PointKernel kind, double sigma, double c, Index n, double tol,
                    const BenchOptions& options);

std::string to_string(PointKernel kind);
std::string to_string(Leg leg);

}  // namespace h2mg

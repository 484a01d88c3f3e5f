#include <algorithm>
#include <stdexcept>

#include "h2mg/bench.hpp"
#include "h2mg/oracle.hpp"

namespace h2mg {

namespace {
constexpr Index kVerifyCap = 4096;
// Small enough that moderate N get basis levels to check.
constexpr Index kVerifyCoarseCap = 64;

VerifyCheck check(std::string name, double value, double limit) {
  return {std::move(name), value, limit, value <= limit, false};
}

VerifyCheck skipped(std::string name) { return {std::move(name), 0.0, 0.0, true, true}; }

double rel_frobenius(const Matrix& a, const Matrix& ref) {
  const double scale = std::max(ref.norm(), 1e-300);
  return (a - ref).norm() / scale;
}
}  // namespace

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

VerifyReport verify(PointKernel kind, double sigma, double c, Index n, double tol,
                    const BenchOptions& options) {
  if (n > kVerifyCap)
    throw std::invalid_argument("verify: N exceeds the dense cap " + std::to_string(kVerifyCap));
  if (!(tol > 0.0)) throw std::invalid_argument("verify: tol must be positive");
  nlohmann::json p = {{"kernel", to_string(kind)}, {"sigma", sigma},  {"c", c},
                      {"N", n},                    {"tol", tol},      {"epsilon", options.epsilon},
                      {"eta", options.eta},        {"leaf_size", options.leaf_size},
                      {"patch", options.patch},    {"seed", options.seed},
                      {"n_f", options.smoother.n_f}, {"n_c", options.smoother.n_c}};
  VerifyReport rep;
  rep.manifest = RunManifest::make("verify", p);

  const PointSet pts = build_grid_points(n, 2);
  const KernelSpec spec = kind == PointKernel::kGaussian ? KernelSpec(GaussianKernel{sigma, c})
                                                         : KernelSpec(ExponentialKernel{sigma, c});
  const KernelMatrix kernel(spec, pts);
  const auto tree =
      ClusterTree::build(pts, std::min(options.leaf_size, pts.size()), options.patch);
  H2Options ho;
  ho.epsilon = options.epsilon;
  ho.eta = options.eta;
  ho.coarse_cap = kVerifyCoarseCap;
  const H2Matrix a = build_h2(kernel, tree, ho);

  rep.checks.push_back(
      check("matvec_vs_dense", approximation_error(a, kernel, 5, options.seed, kVerifyCap), tol));
  rep.checks.push_back(check("basis_orthonormality", a.orthogonality_defect(), 1e-12));

  const H2Operator& op = a.op();
  if (op.is_dense()) {
    rep.checks.push_back(skipped("galerkin_restriction"));
  } else {
    const Matrix ref = oracle::dense_galerkin(op.to_dense(), op.row_basis().to_dense(),
                                              op.col_basis().to_dense());
    rep.checks.push_back(
        check("galerkin_restriction", rel_frobenius(op.restrict().to_dense(), ref), 1e-10));
  }

  // Every level of the hierarchy, not only the factored one.
  HierarchyOptions hopt;
  hopt.lu_fallback = true;
  const OperatorHierarchy h(a, hopt);
  int indefinite = 0;
  for (int k = 0; k < h.num_levels(); ++k)
    if (!oracle::spd_check(h.op(k).to_dense())) ++indefinite;
  rep.checks.push_back(check("spd_levels", indefinite, 0));

  Vector x0 = Vector::LinSpaced(n, -1.0, 1.0);
  const Vector b = op.apply_uncounted(x0);
  const Vector x1 = h.vcycle_tree(b, x0, options.smoother);
  rep.checks.push_back(check("vcycle_fixed_point", (x1 - x0).norm() / x0.norm(), 1e-14));
  return rep;
}

}  // namespace h2mg

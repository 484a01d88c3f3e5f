#include <memory>
#include <optional>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "h2mg/bench.hpp"
#include "h2mg/cg.hpp"
#include "h2mg/oracle.hpp"

namespace py = pybind11;
using namespace h2mg;

namespace {

// The matrix keeps its kernel alive so that approximation_error can be
// called later from Python.
struct PyH2 {
  std::shared_ptr<const KernelMatrix> kernel;
  std::shared_ptr<const H2Matrix> matrix;
};

PyH2 make_h2(const KernelMatrix& k, Index leaf_size, Index patch, double epsilon, double eta,
             Index coarse_cap, int max_levels) {
  PyH2 out;
  out.kernel = std::make_shared<const KernelMatrix>(k);
  const PointSet pts = k.points();
  const ClusterTree tree = ClusterTree::build(pts, std::min(leaf_size, pts.size()), patch);
  H2Options o;
  o.epsilon = epsilon;
  o.eta = eta;
  o.coarse_cap = coarse_cap;
  o.max_levels = max_levels;
  out.matrix = std::make_shared<const H2Matrix>(build_h2(k, tree, o));
  return out;
}

py::dict stats_dict(const SolveStats& s) {
  py::dict d;
  d["vcycles"] = s.vcycles;
  d["converged"] = s.converged;
  d["final_metric"] = s.final_metric;
  d["fine_smooth_iters"] = s.fine_smooth_iters;
  d["coarse_smooth_iters"] = s.coarse_smooth_iters;
  d["flops"] = s.flops;
  d["setup_ms"] = s.setup_ms;
  py::list hist;
  for (const auto& r : s.history) {
    py::dict h;
    h["cycle"] = r.cycle;
    h["resid_2norm"] = r.resid_2norm;
    h["rel_anorm_err"] = r.rel_anorm_err;
    h["cum_flops"] = r.cum_flops;
    h["wall_ms"] = r.wall_ms;
    hist.append(h);
  }
  d["history"] = hist;
  return d;
}

py::list rows_list(const BenchReport& rep) {
  py::list rows;
  for (const auto& r : rep.rows) {
    py::dict d;
    d["run_id"] = rep.manifest.id;
    d["method"] = r.method;
    d["N"] = r.n;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["final_metric"] = r.final_metric;
    d["wall_ms"] = r.wall_ms;
    d["setup_ms"] = r.setup_ms;
    d["flops"] = r.flops;
    d["status"] = r.status;
    rows.append(d);
  }
  return rows;
}

PointKernel parse_kind(const std::string& s) {
  if (s == "gaussian") return PointKernel::kGaussian;
  if (s == "exponential") return PointKernel::kExponential;
  throw py::value_error("kernel must be 'gaussian' or 'exponential'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "H2-MG: multigrid over the levels of an H2 matrix";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("grid_points", [](Index n, int dim) { return build_grid_points(n, dim).coords(); },
        py::arg("n"), py::arg("dim") = 2,
        "First n points of the smallest uniform grid on [0,1]^dim holding n points.");

  py::class_<SurfaceMesh, std::shared_ptr<SurfaceMesh>>(m, "SurfaceMesh")
      .def_property_readonly("vertices", &SurfaceMesh::vertices)
      .def_property_readonly("triangles",
                             [](const SurfaceMesh& s) {
                               Eigen::Matrix<Index, Eigen::Dynamic, 3, Eigen::RowMajor> t(
                                   s.num_triangles(), 3);
                               for (Index i = 0; i < s.num_triangles(); ++i)
                                 for (int j = 0; j < 3; ++j) t(i, j) = s.triangles()[i][j];
                               return t;
                             })
      .def_property_readonly("centroids", &SurfaceMesh::centroids)
      .def_property_readonly("areas", &SurfaceMesh::areas)
      .def_property_readonly("num_triangles", &SurfaceMesh::num_triangles)
      .def("total_area", &SurfaceMesh::total_area);

  m.def(
      "wavy_torus",
      [](Index n_u, Index n_v, double major, double minor, int waves, double amp) {
        return std::make_shared<SurfaceMesh>(
            build_wavy_torus(TorusParams{n_u, n_v, major, minor, waves, amp}));
      },
      py::arg("n_u") = 64, py::arg("n_v") = 32, py::arg("major_radius") = 2.0,
      py::arg("minor_radius") = 0.5, py::arg("wave_count") = 3, py::arg("wave_amp") = 0.3);
  m.def("read_obj", [](const std::string& path) {
    return std::make_shared<SurfaceMesh>(read_obj(path));
  });
  m.def("point_source_rhs", [](const SurfaceMesh& mesh, const Eigen::Vector3d& src) {
    return bem_point_source_rhs(mesh, src);
  });

  py::class_<PyH2>(m, "H2Matrix")
      .def_static(
          "gaussian",
          [](const Matrix& points, double sigma, double c, double epsilon, Index leaf_size,
             Index patch, double eta, Index coarse_cap, int max_levels) {
            return make_h2(KernelMatrix(GaussianKernel{sigma, c}, PointSet(points)), leaf_size,
                           patch, epsilon, eta, coarse_cap, max_levels);
          },
          py::arg("points"), py::arg("sigma") = 0.1, py::arg("c") = 1e-3,
          py::arg("epsilon") = 1e-9, py::arg("leaf_size") = 32, py::arg("patch") = 4,
          py::arg("eta") = 0.0, py::arg("coarse_cap") = 512, py::arg("max_levels") = 0)
      .def_static(
          "exponential",
          [](const Matrix& points, double sigma, double c, double epsilon, Index leaf_size,
             Index patch, double eta, Index coarse_cap, int max_levels) {
            return make_h2(KernelMatrix(ExponentialKernel{sigma, c}, PointSet(points)),
                           leaf_size, patch, epsilon, eta, coarse_cap, max_levels);
          },
          py::arg("points"), py::arg("sigma") = 0.1, py::arg("c") = 1e-3,
          py::arg("epsilon") = 1e-9, py::arg("leaf_size") = 32, py::arg("patch") = 4,
          py::arg("eta") = 0.0, py::arg("coarse_cap") = 512, py::arg("max_levels") = 0)
      .def_static(
          "bem",
          [](std::shared_ptr<SurfaceMesh> mesh, bool symmetrized, double epsilon,
             Index leaf_size, Index patch, double eta, Index coarse_cap, int max_levels) {
            return make_h2(KernelMatrix(LaplaceSingleLayer{mesh, symmetrized}), leaf_size, patch,
                           epsilon, eta, coarse_cap, max_levels);
          },
          py::arg("mesh"), py::arg("symmetrized") = true, py::arg("epsilon") = 1e-9,
          py::arg("leaf_size") = 32, py::arg("patch") = 4, py::arg("eta") = 0.0,
          py::arg("coarse_cap") = 512, py::arg("max_levels") = 0)
      .def_property_readonly("size", [](const PyH2& a) { return a.matrix->size(); })
      .def_property_readonly("num_levels", [](const PyH2& a) { return a.matrix->num_levels(); })
      .def_property_readonly("symmetric", [](const PyH2& a) { return a.matrix->symmetric(); })
      .def_property_readonly("level_dims",
                             [](const PyH2& a) { return a.matrix->level_dims(); })
      .def_property_readonly("stored_entries",
                             [](const PyH2& a) { return a.matrix->stored_entries(); })
      .def_property_readonly("flops_per_matvec",
                             [](const PyH2& a) { return a.matrix->flops_per_matvec(); })
      .def("ranks", [](const PyH2& a, int k) { return a.matrix->ranks(k); })
      .def("matvec", [](const PyH2& a, const Vector& x) { return a.matrix->matvec(x); })
      .def("dense", [](const PyH2& a) { return assemble_dense(*a.kernel); },
           "Dense assembly of the underlying kernel (original ordering).")
      .def(
          "approximation_error",
          [](const PyH2& a, int probes, std::uint64_t seed) {
            return approximation_error(*a.matrix, *a.kernel, probes, seed);
          },
          py::arg("probes") = 10, py::arg("seed") = 0)
      .def("orthogonality_defect", [](const PyH2& a) { return a.matrix->orthogonality_defect(); })
      .def(
          "to_json", [](const PyH2& a, bool blocks) { return a.matrix->to_json(blocks); },
          py::arg("with_blocks") = true);

  py::class_<OperatorHierarchy, std::shared_ptr<OperatorHierarchy>>(m, "Hierarchy")
      .def(py::init([](const PyH2& a, Index coarse_blocks, bool lu_fallback) {
             HierarchyOptions o;
             o.coarse_blocks = coarse_blocks;
             o.lu_fallback = lu_fallback;
             return std::make_shared<OperatorHierarchy>(*a.matrix, o);
           }),
           py::arg("matrix"), py::arg("coarse_blocks") = -1, py::arg("lu_fallback") = false)
      .def_property_readonly("num_levels", &OperatorHierarchy::num_levels)
      .def_property_readonly("coarse_uses_cholesky", &OperatorHierarchy::coarse_uses_cholesky)
      .def(
          "vcycle",
          [](const OperatorHierarchy& h, const Vector& b, const Vector& x0, int n_f, int n_c) {
            return vcycle(h, b, x0, SmootherConfig{n_f, n_c});
          },
          py::arg("b"), py::arg("x0"), py::arg("n_f") = 1, py::arg("n_c") = 40)
      .def(
          "solve",
          [](const OperatorHierarchy& h, const Vector& b, std::optional<Vector> x0, double tol,
             int max_cycles, int n_f, int n_c, std::optional<Vector> x_true) {
            const Vector start = x0 ? *x0 : Vector::Zero(b.size());
            SolveResult r;
            {
              py::gil_scoped_release release;
              r = solve(h, b, start, SmootherConfig{n_f, n_c}, tol, max_cycles, x_true);
            }
            return py::make_tuple(r.x, stats_dict(r.stats));
          },
          py::arg("b"), py::arg("x0") = std::nullopt, py::arg("tol") = 1e-9,
          py::arg("max_cycles") = 200, py::arg("n_f") = 1, py::arg("n_c") = 40,
          py::arg("x_true") = std::nullopt);

  m.def(
      "cg_solve",
      [](const PyH2& a, const Vector& b, double tol, int max_iters,
         std::optional<Vector> x_true) {
        const H2Matrix& mat = *a.matrix;
        const CgResult r = cg_solve([&mat](const Vector& v) { return mat.matvec(v); }, b,
                                    Vector::Zero(b.size()), tol, max_iters, x_true);
        py::dict d;
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        d["metric"] = r.metric;
        d["history"] = r.history;
        return py::make_tuple(r.x, d);
      },
      py::arg("matrix"), py::arg("b"), py::arg("tol") = 1e-9, py::arg("max_iters") = 5000,
      py::arg("x_true") = std::nullopt);

  m.def("dense_solve", &oracle::dense_solve);
  m.def("spd_check", &oracle::spd_check);

  m.def(
      "bench_kernel",
      [](const std::string& kind, double sigma, double c, const std::vector<Index>& sizes,
         double tol, int max_cycles, int cg_max_iters, std::uint64_t seed,
         std::optional<std::string> out) {
        BenchOptions o;
        o.tol = tol;
        o.max_cycles = max_cycles;
        o.cg_max_iters = cg_max_iters;
        o.seed = seed;
        const BenchReport rep = bench_kernel(parse_kind(kind), sigma, c, sizes, o);
        if (out) rep.write(*out);
        return rows_list(rep);
      },
      py::arg("kernel"), py::arg("sigma") = 0.1, py::arg("c") = 1e-3,
      py::arg("sizes") = std::vector<Index>{1024}, py::arg("tol") = 1e-9,
      py::arg("max_cycles") = 200, py::arg("cg_max_iters") = 5000, py::arg("seed") = 0,
      py::arg("out") = std::nullopt);

  m.def(
      "verify",
      [](const std::string& kind, Index n, double sigma, double c, double tol, double epsilon) {
        BenchOptions o;
        o.epsilon = epsilon;
        const VerifyReport rep = verify(parse_kind(kind), sigma, c, n, tol, o);
        py::dict checks;
        for (const auto& ch : rep.checks) {
          py::dict d;
          d["value"] = ch.value;
          d["limit"] = ch.limit;
          d["pass"] = ch.pass;
          d["skipped"] = ch.skipped;
          checks[py::str(ch.name)] = d;
        }
        return py::make_tuple(rep.pass(), checks);
      },
      py::arg("kernel") = "gaussian", py::arg("n") = 512, py::arg("sigma") = 0.1,
      py::arg("c") = 1e-3, py::arg("tol") = 1e-8, py::arg("epsilon") = 1e-9);
}

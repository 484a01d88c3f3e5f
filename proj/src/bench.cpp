#include "h2mg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "h2mg/cg.hpp"
#include "h2mg/oracle.hpp"

#ifndef H2MG_GIT_DESCRIBE
#define H2MG_GIT_DESCRIBE "unknown"
#endif

namespace h2mg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// 17 significant digits, scientific.
std::string num(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(16) << v;
  return s.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// FNV-1a, stable across platforms unlike std::hash.
std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Vector standard_normal(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = dist(rng);
  return x;
}

KernelSpec point_spec(PointKernel kind, double sigma, double c) {
  if (kind == PointKernel::kGaussian) return GaussianKernel{sigma, c};
  return ExponentialKernel{sigma, c};
}

H2Options h2_options(const BenchOptions& o) {
  H2Options h;
  h.epsilon = o.epsilon;
  h.eta = o.eta;
  return h;
}

nlohmann::json common_params(const BenchOptions& o) {
  return {{"epsilon", o.epsilon},      {"eta", o.eta},
          {"leaf_size", o.leaf_size},  {"patch", o.patch},
          {"n_f", o.smoother.n_f},     {"n_c", o.smoother.n_c},
          {"tol", o.tol},              {"seed", o.seed},
          {"max_cycles", o.max_cycles}, {"cg_max_iters", o.cg_max_iters},
          {"dense_cap", o.dense_cap}};
}

// bnorm > 0 selects the relative residual as the history metric, otherwise
// the relative A-norm error.
void append_mg(BenchReport& rep, Index n, const SolveStats& st, double wall_ms, double setup_ms,
               double bnorm) {
  ResultRow row{"h2mg", n, st.vcycles, st.converged, st.final_metric, wall_ms, setup_ms, st.flops};
  row.status = st.converged ? "ok" : "not_converged";
  rep.rows.push_back(row);
  for (const auto& rec : st.history)
    rep.history.push_back({"h2mg", n, rec.cycle,
                           bnorm > 0.0 ? rec.resid_2norm / bnorm : rec.rel_anorm_err,
                           rec.cum_flops});
}

void append_cg(BenchReport& rep, Index n, const CgResult& cg, std::int64_t flops_per_mv,
               double wall_ms, double setup_ms) {
  ResultRow row{"cg", n, cg.iterations, cg.converged, cg.metric, wall_ms, setup_ms,
                (cg.iterations + 1) * flops_per_mv};
  row.status = cg.converged ? "ok" : "not_converged";
  rep.rows.push_back(row);
  for (std::size_t k = 0; k < cg.history.size(); ++k)
    rep.history.push_back({"cg", n, static_cast<int>(k + 1), cg.history[k],
                           static_cast<std::int64_t>(k + 2) * flops_per_mv});
}

ResultRow error_row(const std::string& method, Index n, const std::exception& e) {
  ResultRow row;
  row.method = method;
  row.n = n;
  row.final_metric = std::nan("");
  row.status = std::string("error: ") + e.what();
  return row;
}

void run_kernel_size(BenchReport& rep, PointKernel kind, double sigma, double c, Index n,
                     const BenchOptions& o) {
  if (n < 64) throw std::invalid_argument("N must be at least 64");
  const PointSet pts = build_grid_points(n, 2);
  const KernelMatrix kernel(point_spec(kind, sigma, c), pts);

  auto t0 = Clock::now();
  const auto tree = ClusterTree::build(pts, std::min(o.leaf_size, pts.size()), o.patch);
  const H2Matrix a = build_h2(kernel, tree, h2_options(o));
  const double build_ms = ms_since(t0);

  const Vector x_true = standard_normal(n, o.seed);
  const Vector b = a.matvec(x_true);

  try {
    t0 = Clock::now();
    const OperatorHierarchy h(a);
    const double setup_ms = build_ms + ms_since(t0);
    t0 = Clock::now();
    const SolveResult res = solve(h, b, Vector::Zero(n), o.smoother, o.tol, o.max_cycles, x_true);
    append_mg(rep, n, res.stats, ms_since(t0), setup_ms, 0.0);
  } catch (const std::exception& e) {
    rep.rows.push_back(error_row("h2mg", n, e));
  }

  if (o.cg_max_iters > 0) {
    try {
      const ClusterTree& t = a.tree();
      const H2Operator& op = a.op();
      t0 = Clock::now();
      CgResult cg = cg_solve([&op](const Vector& v) { return op.apply(v); }, t.to_tree_order(b),
                             Vector::Zero(n), o.tol, o.cg_max_iters, t.to_tree_order(x_true));
      append_cg(rep, n, cg, a.flops_per_matvec(), ms_since(t0), build_ms);
    } catch (const std::exception& e) {
      rep.rows.push_back(error_row("cg", n, e));
    }
  }

  if (o.dense_cap > 0 && n <= o.dense_cap) {
    try {
      t0 = Clock::now();
      const Matrix dense = assemble_dense(kernel, o.dense_cap);
      const Eigen::LLT<Matrix> llt(dense);
      if (llt.info() != Eigen::Success) throw NumericalError("dense matrix is not SPD");
      const double setup_ms = ms_since(t0);
      t0 = Clock::now();
      const Vector x = llt.solve(b);
      const std::int64_t nn = n;
      ResultRow row{"dense_cholesky", n, 0, true,
                    oracle::a_norm_error(dense, x, x_true) / b.norm(), ms_since(t0), setup_ms,
                    nn * nn * nn / 3 + 2 * nn * nn};
      rep.rows.push_back(row);
    } catch (const std::exception& e) {
      rep.rows.push_back(error_row("dense_cholesky", n, e));
    }
  }
}

void run_bem_mesh(BenchReport& rep, std::shared_ptr<const SurfaceMesh> mesh,
                  const BemSetup& setup, const BenchOptions& o) {
  const Index n = mesh->num_triangles();
  const KernelMatrix kernel(LaplaceSingleLayer{mesh, !setup.plain});
  const Vector scale = setup.plain ? Vector::Ones(n) : bem_symmetric_scale(*mesh);
  const Vector b = bem_point_source_rhs(*mesh, setup.source).cwiseProduct(scale);

  auto t0 = Clock::now();
  const PointSet pts = kernel.points();
  const auto tree = ClusterTree::build(pts, std::min(o.leaf_size, pts.size()), o.patch);
  const H2Matrix a = build_h2(kernel, tree, h2_options(o));
  const double build_ms = ms_since(t0);

  // The collocation matrix is not positive definite, so the coarsest level
  // may need LU even in the symmetrized form.
  HierarchyOptions ho;
  ho.lu_fallback = true;

  std::optional<Vector> best;
  double best_metric = std::numeric_limits<double>::infinity();
  bool best_converged = false;
  auto offer = [&](const Vector& x, double metric, bool converged) {
    if (!x.allFinite() || !std::isfinite(metric)) return;
    if (best && (best_converged || (!converged && metric >= best_metric))) return;
    best = x;
    best_metric = metric;
    best_converged = converged;
  };

  try {
    t0 = Clock::now();
    const OperatorHierarchy h(a, ho);
    const double setup_ms = build_ms + ms_since(t0);
    t0 = Clock::now();
    const SolveResult res = solve(h, b, Vector::Zero(n), o.smoother, o.tol, o.max_cycles);
    append_mg(rep, n, res.stats, ms_since(t0), setup_ms, b.norm());
    offer(res.x, res.stats.final_metric, res.stats.converged);
  } catch (const std::exception& e) {
    rep.rows.push_back(error_row("h2mg", n, e));
  }

  if (o.cg_max_iters > 0) {
    try {
      const ClusterTree& t = a.tree();
      const H2Operator& op = a.op();
      t0 = Clock::now();
      CgResult cg = cg_solve([&op](const Vector& v) { return op.apply(v); }, t.to_tree_order(b),
                             Vector::Zero(n), o.tol, o.cg_max_iters);
      append_cg(rep, n, cg, a.flops_per_matvec(), ms_since(t0), build_ms);
      offer(t.to_original_order(cg.x), cg.metric, cg.converged);
    } catch (const std::exception& e) {
      rep.rows.push_back(error_row("cg", n, e));
    }
  }

  if (best) rep.charges.push_back({n, mesh, best->cwiseQuotient(scale)});
}

nlohmann::json bem_params(const BemSetup& s, const BenchOptions& o) {
  nlohmann::json p = common_params(o);
  p["kernel"] = "laplace_single_layer";
  p["system"] = s.plain ? "plain" : "symmetrized";
  p["source"] = {s.source.x(), s.source.y(), s.source.z()};
  p["metric"] = "rel_residual";
  return p;
}

}  // namespace

std::string to_string(PointKernel kind) {
  return kind == PointKernel::kGaussian ? "gaussian" : "exponential";
}

std::string to_string(Leg leg) { return leg == Leg::kDown ? "down" : "up"; }

RunManifest RunManifest::make(std::string experiment, nlohmann::json params) {
  RunManifest m;
  m.experiment = std::move(experiment);
  m.params = std::move(params);
  std::ostringstream id;
  id << m.experiment << '-' << std::hex << std::setw(16) << std::setfill('0')
     << fnv1a(m.experiment + m.params.dump());
  m.id = id.str();
  m.git_describe = H2MG_GIT_DESCRIBE;
  m.timestamp = utc_timestamp();
  return m;
}

nlohmann::json RunManifest::to_json() const {
  return {{"id", id},
          {"experiment", experiment},
          {"params", params},
          {"git_describe", git_describe},
          {"timestamp", timestamp}};
}

void BenchReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = open_csv(dir / "manifest.json");
    out << manifest.to_json().dump(2) << '\n';
  }
  {
    std::ofstream out = open_csv(dir / "results.csv");
    out << "run_id,method,N,iterations,converged,final_metric,wall_ms,setup_ms,flops,status\n";
    for (const auto& r : rows) {
      std::string status = r.status;
      for (char& ch : status)
        if (ch == ',' || ch == '\n') ch = ';';
      out << manifest.id << ',' << r.method << ',' << r.n << ',' << r.iterations << ','
          << (r.converged ? 1 : 0) << ',' << num(r.final_metric) << ',' << num(r.wall_ms) << ','
          << num(r.setup_ms) << ',' << r.flops << ',' << status << '\n';
    }
  }
  {
    std::ofstream out = open_csv(dir / "convergence.csv");
    out << "run_id,method,N,step,metric,cum_flops\n";
    for (const auto& r : history)
      out << manifest.id << ',' << r.method << ',' << r.n << ',' << r.step << ','
          << num(r.metric) << ',' << r.cum_flops << '\n';
  }
  if (!charges.empty()) {
    std::ofstream out = open_csv(dir / "charge.csv");
    out << "run_id,N,x,y,z,area,sigma\n";
    for (const auto& f : charges) {
      const Matrix& y = f.mesh->centroids();
      for (Index j = 0; j < f.n; ++j)
        out << manifest.id << ',' << f.n << ',' << num(y(j, 0)) << ',' << num(y(j, 1)) << ','
            << num(y(j, 2)) << ',' << num(f.mesh->areas()[j]) << ',' << num(f.sigma[j]) << '\n';
    }
  }
}

BenchReport bench_kernel(PointKernel kind, double sigma, double c,
                         const std::vector<Index>& sizes, const BenchOptions& options) {
  validate(point_spec(kind, sigma, c));
  nlohmann::json p = common_params(options);
  p["kernel"] = to_string(kind);
  p["sigma"] = sigma;
  p["c"] = c;
  p["sizes"] = sizes;
  p["metric"] = "rel_anorm_err";
  BenchReport rep;
  rep.manifest = RunManifest::make(to_string(kind), p);
  for (Index n : sizes) {
    try {
      run_kernel_size(rep, kind, sigma, c, n, options);
    } catch (const std::exception& e) {
      rep.rows.push_back(error_row("h2mg", n, e));
    }
  }
  return rep;
}

BenchReport bench_bem(const BemSetup& setup, const std::vector<std::pair<Index, Index>>& sizes,
                      const BenchOptions& options) {
  nlohmann::json p = bem_params(setup, options);
  const TorusParams& t = setup.torus;
  p["torus"] = {{"major_radius", t.major_radius}, {"minor_radius", t.minor_radius},
                {"wave_count", t.wave_count},     {"wave_amp", t.wave_amp}};
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& [nu, nv] : sizes) grid.push_back({nu, nv});
  p["sizes"] = grid;
  BenchReport rep;
  rep.manifest = RunManifest::make("bem", p);
  for (const auto& [nu, nv] : sizes) {
    TorusParams tp = t;
    tp.n_u = nu;
    tp.n_v = nv;
    try {
      run_bem_mesh(rep, std::make_shared<const SurfaceMesh>(build_wavy_torus(tp)), setup,
                   options);
    } catch (const std::exception& e) {
      rep.rows.push_back(error_row("h2mg", 2 * nu * nv, e));
    }
  }
  return rep;
}

BenchReport bench_bem_mesh(const std::filesystem::path& obj, const BemSetup& setup,
                           const BenchOptions& options) {
  nlohmann::json p = bem_params(setup, options);
  p["mesh_obj"] = obj.string();
  BenchReport rep;
  rep.manifest = RunManifest::make("bem", p);
  auto mesh = std::make_shared<const SurfaceMesh>(read_obj(obj));
  try {
    run_bem_mesh(rep, mesh, setup, options);
  } catch (const std::exception& e) {
    rep.rows.push_back(error_row("h2mg", mesh->num_triangles(), e));
  }
  return rep;
}

ErrorBasisReport analyze_error_basis(Index n, double sigma, double c,
                                     const BenchOptions& options) {
  if (n < 256) throw std::invalid_argument("analyze_error_basis: N must be at least 256");
  nlohmann::json p = common_params(options);
  p["kernel"] = "gaussian";
  p["dim"] = 1;
  p["N"] = n;
  p["sigma"] = sigma;
  p["c"] = c;
  ErrorBasisReport rep;
  rep.manifest = RunManifest::make("analyze", p);

  const PointSet pts = build_grid_points(n, 1);
  const KernelMatrix kernel(GaussianKernel{sigma, c}, pts);
  const auto tree =
      ClusterTree::build(pts, std::min(options.leaf_size, pts.size()), options.patch);
  H2Options ho = h2_options(options);
  ho.coarse_cap = std::min(ho.coarse_cap, n / 2);  // keep a basis level for small N
  const H2Matrix a = build_h2(kernel, tree, ho);
  if (a.num_levels() < 2)
    throw std::invalid_argument("analyze_error_basis: the H2 matrix has a single level");
  rep.dims = a.level_dims();
  HierarchyOptions hier;
  hier.coarse_blocks = 0;
  const OperatorHierarchy h(a, hier);

  const Vector x_true = standard_normal(n, options.seed);
  const Vector bt = tree.to_tree_order(a.matvec(x_true));
  const Vector xt = tree.to_tree_order(x_true);
  Vector x = Vector::Zero(n);
  for (int cycle = 1; cycle <= 2; ++cycle) {
    auto observer = [&](int level, Leg leg, const Vector& corr) {
      if (level != 0) return;
      const ErrorBasisSplit split =
          error_basis_decomposition(a, tree.to_original_order(x + corr - xt));
      rep.snapshots.push_back({cycle, leg, split.coarse, split.complement_coeffs});
    };
    x = h.vcycle_tree(bt, x, options.smoother, nullptr, observer);
  }
  return rep;
}

void ErrorBasisReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = open_csv(dir / "manifest.json");
    nlohmann::json j = manifest.to_json();
    j["level_dims"] = dims;
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out = open_csv(dir / "results.csv");
    out << "run_id,cycle,leg,max_coarse,max_complement,norm_coarse,norm_complement\n";
    for (const auto& s : snapshots) {
      const double mc = s.coarse.size() ? s.coarse.cwiseAbs().maxCoeff() : 0.0;
      const double mq = s.complement.size() ? s.complement.cwiseAbs().maxCoeff() : 0.0;
      out << manifest.id << ',' << s.cycle << ',' << to_string(s.leg) << ',' << num(mc) << ','
          << num(mq) << ',' << num(s.coarse.norm()) << ',' << num(s.complement.norm()) << '\n';
    }
  }
  {
    std::ofstream out = open_csv(dir / "components.csv");
    out << "run_id,cycle,leg,space,index,value\n";
    for (const auto& s : snapshots) {
      for (Index i = 0; i < s.coarse.size(); ++i)
        out << manifest.id << ',' << s.cycle << ',' << to_string(s.leg) << ",coarse," << i << ','
            << num(s.coarse[i]) << '\n';
      for (Index i = 0; i < s.complement.size(); ++i)
        out << manifest.id << ',' << s.cycle << ',' << to_string(s.leg) << ",complement," << i
            << ',' << num(s.complement[i]) << '\n';
    }
  }
}

}  // namespace h2mg

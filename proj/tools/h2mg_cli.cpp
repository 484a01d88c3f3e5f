#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "h2mg/bench.hpp"

namespace {

using namespace h2mg;

struct CommonArgs {
  BenchOptions opt;
  std::string out = "h2mg_out";
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--tol", a.opt.tol, "Stopping tolerance")->capture_default_str();
  app->add_option("--nf", a.opt.smoother.n_f, "CG smoothing steps on the finest level")
      ->capture_default_str();
  app->add_option("--nc", a.opt.smoother.n_c, "CG smoothing steps on coarse levels")
      ->capture_default_str();
  app->add_option("--seed", a.opt.seed, "Seed for x_true and probes")->capture_default_str();
  app->add_option("--leaf-size", a.opt.leaf_size, "Points per leaf cluster")->capture_default_str();
  app->add_option("--patch", a.opt.patch, "Clusters merged per level")->capture_default_str();
  app->add_option("--eta", a.opt.eta, "Admissibility parameter")->capture_default_str();
  app->add_option("--epsilon", a.opt.epsilon, "H2 relative accuracy")->capture_default_str();
  app->add_option("--max-cycles", a.opt.max_cycles, "V-cycle limit")->capture_default_str();
  app->add_option("--cg-max-iters", a.opt.cg_max_iters, "CG baseline limit (0 disables)")
      ->capture_default_str();
  app->add_option("--out", a.out, "Output directory")->capture_default_str();
}

void print_rows(const BenchReport& rep) {
  std::printf("run %s\n", rep.manifest.id.c_str());
  std::printf("%-15s %8s %6s %5s %12s %12s %12s  %s\n", "method", "N", "iters", "conv", "metric",
              "setup_ms", "wall_ms", "status");
  for (const auto& r : rep.rows)
    std::printf("%-15s %8lld %6d %5d %12.4e %12.1f %12.1f  %s\n", r.method.c_str(),
                static_cast<long long>(r.n), r.iterations, r.converged ? 1 : 0, r.final_metric,
                r.setup_ms, r.wall_ms, r.status.c_str());
}

std::pair<Index, Index> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("--sizes", "expected NUxNV, got " + s);
  return {std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"H2-MG: multigrid over the levels of an H2 matrix"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Convergence benchmarks against plain CG");
  bench->require_subcommand(1);

  CommonArgs kargs;
  double sigma = 0.1, c = 1e-3;
  std::vector<Index> sizes{1024, 4096};
  PointKernel kind = PointKernel::kGaussian;
  std::vector<CLI::App*> kernel_cmds;
  for (auto [name, k] : {std::pair{"gaussian", PointKernel::kGaussian},
                         std::pair{"exponential", PointKernel::kExponential}}) {
    auto* cmd = bench->add_subcommand(name, std::string(name) + " kernel on a 2D grid");
    cmd->add_option("--sigma", sigma, "Kernel width")->capture_default_str();
    cmd->add_option("--c", c, "Diagonal shift")->capture_default_str();
    cmd->add_option("--sizes", sizes, "Numbers of points")->delimiter(',')->capture_default_str();
    cmd->add_option("--dense-cap", kargs.opt.dense_cap, "Dense Cholesky row up to this N")
        ->capture_default_str();
    add_common(cmd, kargs);
    cmd->callback([&kind, k = k] { kind = k; });
    kernel_cmds.push_back(cmd);
  }

  CommonArgs bargs;
  BemSetup bem_setup;
  std::vector<std::string> grids{"32x16", "64x32"};
  std::string mesh_obj;
  std::vector<double> source{6.0, 0.0, 0.0};
  auto* bem = bench->add_subcommand("bem", "Single-layer BEM on a wavy torus");
  bem->add_option("--sizes", grids, "Torus grids NUxNV (2*NU*NV triangles)")
      ->delimiter(',')
      ->capture_default_str();
  bem->add_option("--mesh-obj", mesh_obj, "Triangle mesh to use instead of the torus");
  bem->add_option("--source", source, "Point source position")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  bem->add_option("--major-radius", bem_setup.torus.major_radius)->capture_default_str();
  bem->add_option("--minor-radius", bem_setup.torus.minor_radius)->capture_default_str();
  bem->add_option("--wave-count", bem_setup.torus.wave_count)->capture_default_str();
  bem->add_option("--wave-amp", bem_setup.torus.wave_amp)->capture_default_str();
  bem->add_flag("--plain", bem_setup.plain, "Solve the unsymmetrized collocation system");
  add_common(bem, bargs);

  CommonArgs aargs;
  Index an = 1024;
  double asigma = 0.01, ac = 1e-3;
  auto* analyze = app.add_subcommand("analyze", "Error components in the finest basis (1D)");
  analyze->add_option("--n", an, "Number of points")->capture_default_str();
  analyze->add_option("--sigma", asigma, "Kernel width")->capture_default_str();
  analyze->add_option("--c", ac, "Diagonal shift")->capture_default_str();
  add_common(analyze, aargs);

  CommonArgs vargs;
  Index vn = 512;
  double vsigma = 0.1, vc = 1e-3;
  vargs.opt.tol = 1e-8;  // limit for the matvec error
  std::string vkernel = "gaussian";
  auto* ver = app.add_subcommand("verify", "Compare against dense oracles; exit 1 on failure");
  ver->add_option("--kernel", vkernel)->check(CLI::IsMember({"gaussian", "exponential"}))
      ->capture_default_str();
  ver->add_option("--n", vn, "Number of points")->capture_default_str();
  ver->add_option("--sigma", vsigma)->capture_default_str();
  ver->add_option("--c", vc)->capture_default_str();
  add_common(ver, vargs);

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto* cmd : kernel_cmds) {
      if (!cmd->parsed()) continue;
      const BenchReport rep = bench_kernel(kind, sigma, c, sizes, kargs.opt);
      rep.write(kargs.out);
      print_rows(rep);
      return 0;
    }
    if (bem->parsed()) {
      bem_setup.source = Eigen::Vector3d(source[0], source[1], source[2]);
      BenchReport rep;
      if (!mesh_obj.empty()) {
        rep = bench_bem_mesh(mesh_obj, bem_setup, bargs.opt);
      } else {
        std::vector<std::pair<Index, Index>> parsed;
        for (const auto& g : grids) parsed.push_back(parse_grid(g));
        rep = bench_bem(bem_setup, parsed, bargs.opt);
      }
      rep.write(bargs.out);
      print_rows(rep);
      return 0;
    }
    if (analyze->parsed()) {
      const ErrorBasisReport rep = analyze_error_basis(an, asigma, ac, aargs.opt);
      rep.write(aargs.out);
      std::printf("run %s\n%5s %5s %14s %14s\n", rep.manifest.id.c_str(), "cycle", "leg",
                  "max|U^T e|", "max|Q^T e|");
      for (const auto& s : rep.snapshots)
        std::printf("%5d %5s %14.4e %14.4e\n", s.cycle, to_string(s.leg).c_str(),
                    s.coarse.cwiseAbs().maxCoeff(),
                    s.complement.size() ? s.complement.cwiseAbs().maxCoeff() : 0.0);
      return 0;
    }
    if (ver->parsed()) {
      const PointKernel vk =
          vkernel == "gaussian" ? PointKernel::kGaussian : PointKernel::kExponential;
      const VerifyReport rep = verify(vk, vsigma, vc, vn, vargs.opt.tol, vargs.opt);
      for (const auto& ch : rep.checks) {
        if (ch.skipped)
          std::printf("SKIP %-22s\n", ch.name.c_str());
        else
          std::printf("%s %-22s %.3e <= %.3e\n", ch.pass ? "PASS" : "FAIL", ch.name.c_str(),
                      ch.value, ch.limit);
      }
      return rep.pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

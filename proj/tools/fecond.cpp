// fecond: mesh generation, conditioning analysis, sweeps and calibration.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fecond/bounds.hpp"
#include "fecond/error.hpp"
#include "fecond/geometry.hpp"
#include "fecond/matrix_market.hpp"
#include "fecond/mesh_io.hpp"
#include "fecond/study.hpp"

namespace {

using namespace fecond;

constexpr int kOk = 0;
constexpr int kIo = 1;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct MeshFlags {
  std::string family = "uniform";
  int dim = 1;
  int n = 0;
  int n_core = 0;
  double aspect = 1.0;
  std::string mesh;
  std::string format = "json";

  void add(CLI::App* app, bool allow_import) {
    app->add_option("--family", family, "uniform | chebyshev | power2 | boundary_layer_2d | boundary_layer_3d")
        ->capture_default_str();
    app->add_option("--dim", dim, "dimension of a uniform mesh")->capture_default_str();
    app->add_option("--n", n, "elements (1D families) or cells per axis (uniform)");
    app->add_option("--n-core", n_core, "core vertices per axis (boundary layer)");
    app->add_option("--aspect", aspect, "layer aspect ratio (boundary layer)")->capture_default_str();
    app->add_option("--format", format, "mesh file format: json | triangle")->capture_default_str();
    if (allow_import) app->add_option("--mesh", mesh, "read the mesh from a file instead of generating it");
  }

  MeshSpec spec() const {
    MeshSpec s;
    s.family = mesh.empty() ? parse_family(family) : Family::imported;
    s.dim = dim;
    s.n = n;
    s.n_core = n_core;
    s.aspect = aspect;
    s.mesh_path = mesh;
    s.format = parse_mesh_format(format);
    return s;
  }
};

struct SolveFlags {
  double p = 2.9;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::string diffusion = "identity";
  std::string calibration;

  void add(CLI::App* app) {
    app->add_option("--p", p, "exponent p in (1, 3), used in 3D")->capture_default_str();
    app->add_option("--tol", tol, "relative eigen residual tolerance")->capture_default_str();
    app->add_option("--seed", seed, "Lanczos start vector seed")->capture_default_str();
    app->add_option("--diffusion", diffusion, "identity | const:a11,a12,...")->capture_default_str();
    app->add_option("--calibration", calibration, "calibration constants (JSON)");
  }

  EigenOptions eig() const {
    check_tolerance(tol);
    EigenOptions o;
    o.tol = tol;
    o.seed = seed;
    return o;
  }

  std::optional<Calibration> load_calibration() const {
    if (calibration.empty()) return std::nullopt;
    std::ifstream in(calibration);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", calibration));
    std::stringstream ss;
    ss << in.rdbuf();
    return Calibration::from_json(ss.str(), calibration);
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path));
  out << text;
}

std::string g(double x) { return std::isfinite(x) ? fmt::format("{:.10g}", x) : "nan"; }

void print_summary(const SimplicialMesh& mesh) {
  const MeshGeometry geo = compute_metrics(mesh);
  fmt::print("dim              {}\n", mesh.dim());
  fmt::print("elements         {}\n", mesh.num_elements());
  fmt::print("vertices         {}\n", mesh.num_vertices());
  fmt::print("interior         {}\n", mesh.num_interior());
  fmt::print("K_min volume     {}\n", g(geo.metrics.k_min_volume));
  fmt::print("K_avg volume     {}\n", g(geo.metrics.k_avg_volume));
  fmt::print("max aspect       {}\n", g(geo.metrics.max_aspect_ratio));
}

void print_report(const BoundReport& r) {
  fmt::print("dim {}  elements {}  interior {}  max aspect {}\n", r.dim, r.n_elements, r.n_interior,
             g(r.max_aspect_ratio));
  if (r.dim == 3) fmt::print("p {}\n", g(r.p));
  fmt::print("\n{:<8}{:>18}{:>18}{:>18}  {:<22}{:>12}\n", "matrix", "lambda_min", "lambda_max", "kappa", "method",
             "residual");
  auto row = [](const char* name, const SpectralResult& s) {
    fmt::print("{:<8}{:>18}{:>18}{:>18}  {:<22}{:>12}{}\n", name, g(s.lambda_min), g(s.lambda_max), g(s.kappa),
               to_string(s.method), fmt::format("{:.2e}", s.residual), s.converged ? "" : "  NOT CONVERGED");
  };
  row("A", r.exact.a);
  row("SAS", r.exact.scaled);
  fmt::print("\n{:<24}{:<16}{:<7}{:>18}{:>14}{:>18}{:>18}  {}\n", "bound", "target", "kind", "raw", "C", "value",
             "exact", "holds");
  for (const auto& e : r.entries) {
    const std::string c = e.constant_free ? "-" : e.constant ? g(*e.constant) : "1 (raw)";
    fmt::print("{:<24}{:<16}{:<7}{:>18}{:>14}{:>18}{:>18}  {}\n", e.id, e.target,
               e.kind == BoundKind::lower ? "lower" : "upper", g(e.raw), c, g(e.value()), g(e.exact),
               e.holds() ? "yes" : "no");
  }
  for (const auto& n : r.notes) fmt::print("note: {}\n", n);
}

std::vector<double> parse_values(const std::vector<std::string>& raw) {
  std::vector<double> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    for (std::string tok; std::getline(ss, tok, ',');) {
      if (tok.empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || used == 0) throw std::invalid_argument(fmt::format("'{}' is not a number", tok));
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditioning of linear finite element stiffness matrices on simplicial meshes"};
  app.require_subcommand(1);

  MeshFlags gen_mesh;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "generate a mesh and print its metrics");
  gen_mesh.add(gen, false);
  gen->add_option("-o,--output", gen_out, "output file (json) or stem (triangle)")->required();

  MeshFlags an_mesh;
  SolveFlags an_solve;
  std::string an_csv, an_json, an_matrix;
  auto* an = app.add_subcommand("analyze", "exact condition numbers and all bounds for one mesh");
  an_mesh.add(an, true);
  an_solve.add(an);
  an->add_option("--csv", an_csv, "write the report as a CSV row");
  an->add_option("--json", an_json, "write the report as JSON");
  an->add_option("--matrix-out", an_matrix, "write the stiffness matrix (MatrixMarket)");

  MeshFlags sw_mesh;
  SolveFlags sw_solve;
  std::string sw_vary = "n", sw_csv, sw_plot;
  std::vector<std::string> sw_values;
  auto* sw = app.add_subcommand("sweep", "sweep one parameter and fit log-log slopes");
  sw_mesh.add(sw, false);
  sw_solve.add(sw);
  sw->add_option("--vary", sw_vary, "n | aspect")->capture_default_str();
  sw->add_option("--values", sw_values, "strictly increasing values, comma separated")->required();
  sw->add_option("--csv", sw_csv, "write one CSV row per value");
  sw->add_option("--plot-dir", sw_plot, "write .dat curves, slopes.csv and plot.gp here");

  std::vector<int> cal_dims, cal_sizes;
  double cal_p = 2.9, cal_tol = 1e-8;
  std::string cal_out;
  auto* cal = app.add_subcommand("calibrate", "calibrate bound constants on uniform meshes");
  cal->add_option("--dim", cal_dims, "dimensions (default 1 2 3)");
  cal->add_option("--n", cal_sizes, "uniform sizes (default per dimension; needs a single --dim)");
  cal->add_option("--p", cal_p, "exponent p used in 3D")->capture_default_str();
  cal->add_option("--tol", cal_tol, "relative eigen residual tolerance")->capture_default_str();
  cal->add_option("-o,--output", cal_out, "output JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      const MeshSpec spec = gen_mesh.spec();
      const SimplicialMesh mesh = make_mesh(spec);
      export_mesh(mesh, gen_out, spec.format);
      print_summary(mesh);
      return kOk;
    }

    if (*an) {
      const EigenOptions eig = an_solve.eig();
      const auto calib = an_solve.load_calibration();
      const SimplicialMesh mesh = make_mesh(an_mesh.spec());
      const DiffusionField field = parse_diffusion(an_solve.diffusion, mesh.dim());
      if (!an_matrix.empty()) write_matrix_market(assemble_stiffness(mesh, field), std::filesystem::path(an_matrix));
      const BoundReport r = analyze(mesh, field, eig, an_solve.p, calib ? &*calib : nullptr);
      print_report(r);
      if (!an_csv.empty()) write_file(an_csv, BoundReport::csv_header() + "\n" + r.csv_row() + "\n");
      if (!an_json.empty()) write_file(an_json, r.to_json());
      return r.exact.a.converged && r.exact.scaled.converged ? kOk : kNumerical;
    }

    if (*sw) {
      SweepSpec spec;
      spec.base = sw_mesh.spec();
      spec.variable = parse_sweep_variable(sw_vary);
      spec.values = parse_values(sw_values);
      spec.diffusion = sw_solve.diffusion;
      spec.p = sw_solve.p;
      spec.eig = sw_solve.eig();
      if (spec.variable == SweepVariable::n) {
        // The swept field needs no value of its own.
        if (spec.base.family == Family::boundary_layer_2d || spec.base.family == Family::boundary_layer_3d)
          spec.base.n_core = std::max(spec.base.n_core, 2);
        else
          spec.base.n = std::max(spec.base.n, 2);
      }
      const auto calib = sw_solve.load_calibration();
      const SweepResult res = run_sweep(spec, calib ? &*calib : nullptr);
      for (const auto& row : res.rows)
        if (!row.report) fmt::print(stderr, "warning: value {} failed: {}\n", g(row.parameter), row.error);
      if (!sw_csv.empty()) write_file(sw_csv, res.csv());
      if (!sw_plot.empty()) res.write_plot_data(sw_plot);
      fmt::print("{:<26}{:>12}\n", "curve", "slope");
      for (const auto& c : res.curves) fmt::print("{:<26}{:>12}\n", c.name, g(c.slope));
      return res.failures() == res.rows.size() ? kNumerical : kOk;
    }

    if (*cal) {
      check_tolerance(cal_tol);
      if (cal_dims.empty()) cal_dims = {1, 2, 3};
      if (!cal_sizes.empty() && cal_dims.size() != 1)
        throw std::invalid_argument("--n needs exactly one --dim");
      EigenOptions eig;
      eig.tol = cal_tol;
      Calibration all;
      for (int d : cal_dims) {
        const std::vector<int> sizes = cal_sizes.empty() ? default_calibration_sizes(d) : cal_sizes;
        const Calibration c = calibrate_uniform(d, sizes, eig, cal_p);
        for (const auto& [dim, ids] : c.constants) all.constants[dim] = ids;
      }
      write_file(cal_out, all.to_json());
      for (const auto& [dim, ids] : all.constants)
        for (const auto& [id, c] : ids) fmt::print("{}D  {:<24}{}\n", dim, id, g(c));
      return kOk;
    }
  } catch (const NumericalError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  }
  return kUsage;
}

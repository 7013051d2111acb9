#include "fecond/study.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "fecond/generators.hpp"

namespace fecond {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::pair<Family, std::string_view> kFamilies[] = {
    {Family::uniform, "uniform"},
    {Family::chebyshev, "chebyshev"},
    {Family::power2, "power2"},
    {Family::boundary_layer_2d, "boundary_layer_2d"},
    {Family::boundary_layer_3d, "boundary_layer_3d"},
    {Family::imported, "imported"},
};

int as_int(double v, std::string_view what) {
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw std::invalid_argument(fmt::format("{} must be an integer, got {}", what, v));
  return static_cast<int>(v);
}

double parse_number(std::string_view s) {
  std::string text(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw std::invalid_argument(fmt::format("'{}' is not a number", s));
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace

Family parse_family(std::string_view name) {
  for (const auto& [f, s] : kFamilies)
    if (s == name) return f;
  throw std::invalid_argument(fmt::format("unknown family '{}'", name));
}

std::string_view to_string(Family f) {
  for (const auto& [g, s] : kFamilies)
    if (g == f) return s;
  return "unknown";
}

int MeshSpec::effective_dim() const {
  switch (family) {
    case Family::uniform:
      return dim;
    case Family::chebyshev:
    case Family::power2:
      return 1;
    case Family::boundary_layer_2d:
      return 2;
    case Family::boundary_layer_3d:
      return 3;
    case Family::imported:
      return 0;
  }
  return 0;
}

void validate(const MeshSpec& s) {
  switch (s.family) {
    case Family::uniform:
      if (s.dim < 1 || s.dim > 3) throw std::invalid_argument(fmt::format("--dim must be 1, 2 or 3, got {}", s.dim));
      if (s.n < 2) throw std::invalid_argument(fmt::format("--n must be at least 2 for a uniform mesh, got {}", s.n));
      break;
    case Family::chebyshev:
      if (s.n < 2) throw std::invalid_argument(fmt::format("--n must be at least 2, got {}", s.n));
      break;
    case Family::power2:
      if (s.n < 2 || s.n > 52) throw std::invalid_argument(fmt::format("--n must lie in [2, 52], got {}", s.n));
      break;
    case Family::boundary_layer_2d:
    case Family::boundary_layer_3d:
      if (s.n_core < 2) throw std::invalid_argument(fmt::format("--n-core must be at least 2, got {}", s.n_core));
      if (!(s.aspect >= 1.0) || !std::isfinite(s.aspect))
        throw std::invalid_argument(fmt::format("--aspect must be at least 1, got {}", s.aspect));
      break;
    case Family::imported:
      if (s.mesh_path.empty()) throw std::invalid_argument("an imported mesh needs --mesh <file>");
      break;
  }
}

SimplicialMesh make_mesh(const MeshSpec& s) {
  validate(s);
  switch (s.family) {
    case Family::uniform:
      return generate_uniform(s.dim, s.n);
    case Family::chebyshev:
      return generate_chebyshev_1d(s.n);
    case Family::power2:
      return generate_power2_1d(s.n);
    case Family::boundary_layer_2d:
      return generate_boundary_layer(2, s.n_core, s.aspect);
    case Family::boundary_layer_3d:
      return generate_boundary_layer(3, s.n_core, s.aspect);
    case Family::imported:
      return import_mesh(s.mesh_path, s.format);
  }
  throw std::invalid_argument("unknown family");
}

DiffusionField parse_diffusion(std::string_view spec, int dim) {
  if (spec == "identity") return DiffusionField::identity(dim);
  constexpr std::string_view prefix = "const:";
  if (spec.substr(0, prefix.size()) != prefix)
    throw std::invalid_argument(fmt::format("diffusion must be 'identity' or 'const:a11,a12,...', got '{}'", spec));
  std::vector<double> v;
  std::string_view rest = spec.substr(prefix.size());
  while (true) {
    const auto comma = rest.find(',');
    v.push_back(parse_number(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  Eigen::MatrixXd d(dim, dim);
  const auto n = static_cast<std::size_t>(dim);
  if (v.size() == n * n) {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) d(i, j) = v[static_cast<std::size_t>(i * dim + j)];
    if (!d.isApprox(d.transpose(), 0.0)) throw std::invalid_argument("constant diffusion matrix is not symmetric");
  } else if (v.size() == n * (n + 1) / 2) {
    std::size_t k = 0;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) d(i, j) = d(j, i) = v[k++];
  } else {
    throw std::invalid_argument(
        fmt::format("a {}D constant diffusion needs {} or {} entries, got {}", dim, n * n, n * (n + 1) / 2, v.size()));
  }
  return DiffusionField::constant(d);
}

BoundReport analyze(const SimplicialMesh& mesh, const DiffusionField& field, const EigenOptions& eig, double p,
                    const Calibration* cal) {
  const ConditionReport exact = condition_report(mesh, field, eig);
  BoundReport r = make_report(mesh, field, exact, p);
  if (cal) r.apply(*cal);
  return r;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_slope: x and y differ in length");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t i = x.size() / 2; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++m;
  }
  if (m < 2) return kNaN;
  const double den = m * sxx - sx * sx;
  if (den == 0.0) return kNaN;
  return (m * sxy - sx * sy) / den;
}

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "n" || name == "n-core" || name == "n_core") return SweepVariable::n;
  if (name == "aspect") return SweepVariable::aspect;
  throw std::invalid_argument(fmt::format("--vary must be 'n' or 'aspect', got '{}'", name));
}

void validate(const SweepSpec& s) {
  if (s.values.empty()) throw std::invalid_argument("sweep values are empty");
  for (std::size_t i = 1; i < s.values.size(); ++i)
    if (!(s.values[i] > s.values[i - 1])) throw std::invalid_argument("sweep values must be strictly increasing");
  const bool layer = s.base.family == Family::boundary_layer_2d || s.base.family == Family::boundary_layer_3d;
  if (s.base.family == Family::imported) throw std::invalid_argument("an imported mesh cannot be swept");
  if (s.variable == SweepVariable::aspect && !layer)
    throw std::invalid_argument("--vary aspect needs a boundary layer family");
  if (s.variable == SweepVariable::n)
    for (double v : s.values) as_int(v, layer ? "n-core" : "n");
  check_tolerance(s.eig.tol);
  check_p(s.base.effective_dim(), s.p);
}

const Curve& SweepResult::curve(std::string_view name) const {
  for (const auto& c : curves)
    if (c.name == name) return c;
  throw std::out_of_range(fmt::format("no curve '{}'", name));
}

std::size_t SweepResult::failures() const {
  std::size_t f = 0;
  for (const auto& r : rows) f += r.report ? 0 : 1;
  return f;
}

std::string SweepResult::csv() const {
  const std::string header = BoundReport::csv_header();
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  std::string out = "parameter," + header + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{:.17g}", r.parameter);
    if (r.report) {
      out += "," + r.report->csv_row();
    } else {
      for (std::size_t c = 0; c < columns; ++c) out += ",nan";
    }
    out += "\n";
  }
  return out;
}

void SweepResult::write_plot_data(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::string slopes = "curve,slope\n";
  std::string script = fmt::format(
      "set logscale xy\nset key left top\nset xlabel '{}'\nplot \\\n",
      variable == SweepVariable::n ? "number of elements N" : "aspect ratio");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Curve& c = curves[i];
    std::string dat = fmt::format("# {}\n", c.name);
    for (std::size_t k = 0; k < c.x.size(); ++k) dat += fmt::format("{:.17g} {:.17g}\n", c.x[k], c.y[k]);
    write_text(dir / (c.name + ".dat"), dat);
    slopes += fmt::format("{},{:.17g}\n", c.name, c.slope);
    script += fmt::format("  '{}.dat' using 1:2 with linespoints title '{}'{}\n", c.name, c.name,
                          i + 1 < curves.size() ? ", \\" : "");
  }
  write_text(dir / "slopes.csv", slopes);
  write_text(dir / "plot.gp", script);
}

SweepResult run_sweep(const SweepSpec& spec, const Calibration* cal) {
  validate(spec);
  SweepResult out;
  out.variable = spec.variable;
  for (double v : spec.values) {
    SweepRow row;
    row.parameter = v;
    try {
      MeshSpec ms = spec.base;
      const bool layer = ms.family == Family::boundary_layer_2d || ms.family == Family::boundary_layer_3d;
      if (spec.variable == SweepVariable::aspect)
        ms.aspect = v;
      else
        (layer ? ms.n_core : ms.n) = as_int(v, "n");
      const SimplicialMesh mesh = make_mesh(ms);
      const DiffusionField field = parse_diffusion(spec.diffusion, mesh.dim());
      row.report = analyze(mesh, field, spec.eig, spec.p, cal);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }

  std::vector<std::string> names = {"exact.kappa.A", "exact.kappa.SAS", "exact.lambda_min.A", "exact.lambda_min.SAS"};
  for (auto id : bound_ids()) names.emplace_back(id);
  for (const auto& name : names) {
    Curve c;
    c.name = name;
    for (const auto& r : out.rows) {
      if (!r.report) continue;
      const BoundReport& rep = *r.report;
      double y = kNaN;
      if (name == "exact.kappa.A") y = rep.exact.a.kappa;
      else if (name == "exact.kappa.SAS") y = rep.exact.scaled.kappa;
      else if (name == "exact.lambda_min.A") y = rep.exact.a.lambda_min;
      else if (name == "exact.lambda_min.SAS") y = rep.exact.scaled.lambda_min;
      else if (const BoundEntry* e = rep.find(name)) y = e->value();
      else continue;
      c.x.push_back(spec.variable == SweepVariable::n ? static_cast<double>(rep.n_elements) : r.parameter);
      c.y.push_back(y);
    }
    if (c.x.empty()) continue;
    c.slope = fit_slope(c.x, c.y);
    out.curves.push_back(std::move(c));
  }
  return out;
}

std::vector<int> default_calibration_sizes(int dim) {
  switch (dim) {
    case 1:
      return {8, 16, 32, 64};
    case 2:
      return {4, 8, 12, 16};
    case 3:
      return {2, 3, 4, 5};
  }
  throw std::invalid_argument(fmt::format("dimension must be 1, 2 or 3, got {}", dim));
}

Calibration calibrate_uniform(int dim, std::span<const int> sizes, const EigenOptions& eig, double p) {
  if (sizes.empty()) throw std::invalid_argument("calibration needs at least one mesh size");
  std::vector<BoundReport> series;
  for (int n : sizes) {
    const SimplicialMesh mesh = generate_uniform(dim, n);
    series.push_back(analyze(mesh, DiffusionField::identity(dim), eig, p));
  }
  return calibrate(series);
}

}  // namespace fecond

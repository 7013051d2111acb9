#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fecond/assembly.hpp"
#include "fecond/bounds.hpp"
#include "fecond/mesh.hpp"
#include "fecond/mesh_io.hpp"
#include "fecond/spectra.hpp"

namespace fecond {

enum class Family { uniform, chebyshev, power2, boundary_layer_2d, boundary_layer_3d, imported };

Family parse_family(std::string_view name);
std::string_view to_string(Family f);

struct MeshSpec {
  Family family = Family::uniform;
  int dim = 1;         ///< uniform only; implied by the other families
  int n = 0;           ///< elements (1D families) or cells per axis (uniform)
  int n_core = 0;      ///< core vertices per axis (boundary layer)
  double aspect = 1.0;  ///< boundary layer
  std::filesystem::path mesh_path;  ///< imported
  MeshFormat format = MeshFormat::native_json;

  /// Dimension of the generated mesh; 0 for imported meshes.
  int effective_dim() const;
};

/// Throws std::invalid_argument for an inconsistent spec.
void validate(const MeshSpec& spec);
SimplicialMesh make_mesh(const MeshSpec& spec);

/// "identity" or "const:a11,a12,..." with either all d*d entries row by row
/// or the d(d+1)/2 upper-triangle entries row by row.
DiffusionField parse_diffusion(std::string_view spec, int dim);

/// Exact spectra plus every bound, calibrated when `cal` is given.
BoundReport analyze(const SimplicialMesh& mesh, const DiffusionField& field, const EigenOptions& eig, double p,
                    const Calibration* cal = nullptr);

/// Least-squares slope of ln y against ln x over the upper half of the
/// points (from index size/2). Points with non-finite or non-positive
/// values are skipped; returns NaN if fewer than two remain.
double fit_slope(std::span<const double> x, std::span<const double> y);

enum class SweepVariable { n, aspect };

SweepVariable parse_sweep_variable(std::string_view name);

struct SweepSpec {
  MeshSpec base;
  SweepVariable variable = SweepVariable::n;
  std::vector<double> values;
  std::string diffusion = "identity";
  double p = 2.9;
  EigenOptions eig;
};

/// Throws std::invalid_argument unless the values are nonempty and strictly
/// increasing and the variable suits the family.
void validate(const SweepSpec& spec);

struct SweepRow {
  double parameter = 0.0;
  std::optional<BoundReport> report;
  std::string error;  ///< set when the instance failed
};

struct Curve {
  std::string name;
  std::vector<double> x;  ///< number of elements, or the aspect ratio
  std::vector<double> y;
  double slope = 0.0;
};

struct SweepResult {
  SweepVariable variable = SweepVariable::n;
  std::vector<SweepRow> rows;
  std::vector<Curve> curves;

  const Curve& curve(std::string_view name) const;
  std::size_t failures() const;
  /// "parameter" followed by BoundReport::csv_header(); failed rows are nan.
  std::string csv() const;
  /// Writes <curve>.dat (x y), slopes.csv and plot.gp into `dir`.
  void write_plot_data(const std::filesystem::path& dir) const;
};

/// Runs every instance in order. Failures are recorded per row, not thrown.
SweepResult run_sweep(const SweepSpec& spec, const Calibration* cal = nullptr);

/// Default uniform calibration sizes per dimension.
std::vector<int> default_calibration_sizes(int dim);

/// Calibrates all bounds on uniform meshes with D = I.
Calibration calibrate_uniform(int dim, std::span<const int> sizes, const EigenOptions& eig, double p);

}  // namespace fecond

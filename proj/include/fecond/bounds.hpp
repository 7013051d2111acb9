#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fecond/assembly.hpp"
#include "fecond/mesh.hpp"
#include "fecond/spectra.hpp"

namespace fecond {

/// Largest eigenvalue magnitude of a symmetric matrix of order 1 to 3, in
/// closed form.
double symmetric_norm2(const Eigen::MatrixXd& m);

struct AnisotropyMetrics {
  std::vector<double> beta;  ///< (1/d_min) ||F'^-1 D_K F'^-T||_2 per element
  double weighted_sum = 0.0;  ///< sum |K| beta_K
  double gamma_h = 0.0;       ///< max beta_K / weighted_sum
};

AnisotropyMetrics compute_beta(const SimplicialMesh& mesh, const DiffusionField& field);

/// Mesh quantities entering the bounds, gathered once per mesh.
struct BoundInputs {
  int dim = 0;
  double d_min = 1.0;
  std::vector<double> volume;             ///< |K|
  std::vector<double> d_k;                ///< max distance from K to the boundary
  std::vector<double> beta;               ///< beta_K
  std::vector<std::vector<int>> patches;  ///< element ids around each interior vertex
  double k_min = 0.0;                     ///< |K_min|
  double k_avg = 0.0;                     ///< |Omega| / N
  double total_volume = 0.0;              ///< |Omega|
  double h_domain = 0.0;                  ///< diameter of Omega
  double beta_volume_sum = 0.0;           ///< sum |K| beta_K
  double gamma_h = 0.0;

  static BoundInputs from(const SimplicialMesh& mesh, const DiffusionField& field);

  /// Copy with every d_K replaced by `distance`.
  BoundInputs with_distance(double distance) const;

  std::size_t num_elements() const noexcept { return volume.size(); }
  /// max_j sum over the patch of vertex j of |K| beta_K.
  double max_patch_beta() const;
};

/// Default exponent p: 2.9 in 3D (unused below 3D).
double default_p(int dim);

/// Throws std::invalid_argument unless p lies in (1, d/(d-2)) for d = 3.
void check_p(int dim, double p);

// Every bound below omits the unknown constant C (C = 1).

/// |omega_min|_rho / ((d+1)(d+2)), a lower bound for lambda_min(B_rho).
double bound_lambda_min_B(const SimplicialMesh& mesh, const DensityFunction& rho);

/// Lower bound for the smallest eigenvalue of -div grad u = lambda rho u.
double bound_lambda_rho(const BoundInputs& in, const DensityFunction& rho, double p);

/// New lower bound for lambda_min(A).
double bound_lambda_min_A(const BoundInputs& in, double p);

/// New lower bound for lambda_min(S^-1 A S^-1).
double bound_lambda_min_SAS(const BoundInputs& in, double p);

/// (max_j A_jj, (d+1) max_j A_jj), enclosing lambda_max(A).
std::pair<double, double> bound_lambda_max(const SparseSymmetric& a, int dim);

struct KappaBounds {
  double a = 0.0;    ///< bound for kappa(A)
  double sas = 0.0;  ///< bound for kappa(S^-1 A S^-1)
};

/// New condition number bounds.
KappaBounds bound_kappa(const BoundInputs& in, double p);

/// Earlier condition number bounds (no boundary distance).
KappaBounds bound_kappa_prior(const BoundInputs& in);

/// Fried's lower bound for lambda_min(A).
double bound_lambda_min_fried(const BoundInputs& in);

/// sum |K| beta_K log(1 + d_K / |K|); 2D only.
double bound_kappa_sas_conjectured(const BoundInputs& in);

enum class BoundKind { lower, upper };

struct BoundEntry {
  std::string id;                 ///< stable id such as "new.kappa.A"
  std::string target;             ///< exact quantity it bounds, e.g. "kappa.SAS"
  BoundKind kind = BoundKind::lower;
  bool constant_free = false;     ///< holds with C = 1, never calibrated
  double raw = 0.0;               ///< value with C = 1
  double exact = 0.0;             ///< the exact target value
  std::optional<double> constant;  ///< calibrated C, when known

  double value() const { return raw * constant.value_or(1.0); }
  /// True if value() is on the correct side of `exact`.
  bool holds() const { return kind == BoundKind::lower ? value() <= exact : value() >= exact; }
};

/// Bound ids in report order.
std::span<const std::string_view> bound_ids();

/// Constants per (dimension, bound id).
struct Calibration {
  std::map<int, std::map<std::string, double>> constants;

  std::optional<double> find(int dim, std::string_view id) const;
  std::string to_json() const;
  static Calibration from_json(std::string_view text, const std::string& name = "<calibration>");
};

struct BoundReport {
  int dim = 0;
  std::size_t n_elements = 0;
  std::size_t n_interior = 0;
  double p = 0.0;
  double max_aspect_ratio = 0.0;
  ConditionReport exact;
  std::vector<BoundEntry> entries;
  std::vector<std::string> notes;

  const BoundEntry* find(std::string_view id) const;
  const BoundEntry& at(std::string_view id) const;

  void apply(const Calibration& cal);

  /// Flat CSV: fixed columns, then "<id>.raw" and "<id>" for every id in
  /// bound_ids(); missing values print as nan.
  static std::string csv_header();
  std::string csv_row() const;
  std::string to_json() const;
};

/// Evaluates every bound against the exact spectra of the same mesh.
BoundReport make_report(const SimplicialMesh& mesh, const DiffusionField& field, const ConditionReport& exact,
                        double p);

/// C = min(exact / raw) for lower bounds and max(exact / raw) for upper
/// bounds over the series. Throws std::invalid_argument if the series is
/// empty or mixes dimensions.
Calibration calibrate(std::span<const BoundReport> series);

}  // namespace fecond

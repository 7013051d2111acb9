#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fecond/mesh.hpp"

namespace fecond {

/// Symmetric diffusion tensor D(x) with d_min I <= D(x) <= d_max I.
class DiffusionField {
 public:
  using Evaluator = std::function<Eigen::MatrixXd(const Point&)>;

  DiffusionField(int dim, Evaluator evaluator, double d_min, double d_max);

  static DiffusionField identity(int dim);
  /// Constant SPD tensor; d_min and d_max are its extreme eigenvalues.
  static DiffusionField constant(const Eigen::MatrixXd& d);

  int dim() const noexcept { return dim_; }
  double d_min() const noexcept { return d_min_; }
  double d_max() const noexcept { return d_max_; }
  bool is_constant() const noexcept { return constant_; }

  /// D(p). Throws std::invalid_argument if the value is not symmetric to
  /// 1e-12 or its spectrum leaves [d_min, d_max] by more than 1e-9 relative.
  Eigen::MatrixXd operator()(const Point& p) const;

 private:
  int dim_;
  Evaluator eval_;
  double d_min_;
  double d_max_;
  bool constant_ = false;
};

/// Immutable sparse symmetric matrix. Both triangles are stored, so
/// coefficient (i, j) and (j, i) are bit-identical; the diagonal is cached.
class SparseSymmetric {
 public:
  using Storage = Eigen::SparseMatrix<double>;

  /// Throws std::invalid_argument unless `m` is square and exactly symmetric.
  explicit SparseSymmetric(Storage m);

  std::size_t order() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  std::size_t nonzeros() const noexcept { return static_cast<std::size_t>(m_.nonZeros()); }
  const Storage& matrix() const noexcept { return m_; }
  const Eigen::VectorXd& diagonal() const noexcept { return diag_; }
  double coeff(std::size_t i, std::size_t j) const;
  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(m_); }
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const { return m_ * x; }

 private:
  Storage m_;
  Eigen::VectorXd diag_;
};

/// Piecewise-constant density, one value per element.
struct DensityFunction {
  std::vector<double> rho;
  double rho_max = 0.0;
};

enum class Dofs {
  interior,  ///< Dirichlet system: rows for interior vertices only
  all,       ///< every vertex, no boundary elimination
};

/// Average of D over element k by an order-2 simplex rule (exact for affine D).
/// Throws std::invalid_argument if the result is not SPD.
Eigen::MatrixXd average_diffusion(const SimplicialMesh& mesh, const DiffusionField& field, std::size_t element_id);

/// Linear finite element stiffness matrix. Elements are accumulated in index
/// order, so equal inputs give bit-identical output.
/// Throws MeshError if there are no degrees of freedom.
SparseSymmetric assemble_stiffness(const SimplicialMesh& mesh, const DiffusionField& field, Dofs dofs = Dofs::interior);

/// Mass matrix weighted by a piecewise-constant density, interior rows only.
SparseSymmetric assemble_mass_weighted(const SimplicialMesh& mesh, const DensityFunction& rho);

/// S^-1 A S^-1 with S = diag(sqrt(A_jj)). The result has unit diagonal.
/// Throws std::invalid_argument on a non-positive diagonal entry.
SparseSymmetric jacobi_scale(const SparseSymmetric& a);

/// rho_K = 1 / (N |K|).
DensityFunction density_equidistributed(const SimplicialMesh& mesh);

/// rho_K = beta_K / sum |K~| beta_K~.
DensityFunction density_beta_weighted(const SimplicialMesh& mesh, std::span<const double> beta);

/// Normalizes positive per-element weights to unit integral.
DensityFunction make_density(const SimplicialMesh& mesh, std::span<const double> weights);

}  // namespace fecond

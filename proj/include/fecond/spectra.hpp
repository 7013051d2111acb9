#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "fecond/assembly.hpp"

namespace fecond {

enum class EigenMethod { dense, lanczos_shift_invert };

std::string_view to_string(EigenMethod m);

/// Throws std::invalid_argument unless tol lies in (0, 1e-3].
void check_tolerance(double tol);

struct EigenOptions {
  double tol = 1e-8;                  ///< relative residual target, in (0, 1e-3]
  std::size_t dense_max_order = 2000;  ///< largest order solved densely
  std::optional<EigenMethod> force;    ///< override the order-based choice
  std::uint64_t seed = 0;              ///< Lanczos start vector
};

struct SpectralResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 0.0;
  EigenMethod method = EigenMethod::dense;
  /// Largest relative residual ||A v - lambda v|| / ||lambda v|| of the two pairs.
  double residual = 0.0;
  /// False if the residual target could not be met; the values are then the
  /// best estimates found.
  bool converged = false;
  Eigen::VectorXd v_min;  ///< unit eigenvector; lambda_min is its Rayleigh quotient
  Eigen::VectorXd v_max;  ///< unit eigenvector; lambda_max is its Rayleigh quotient
  int iterations = 0;     ///< Lanczos steps plus inverse iteration solves
};

/// Extreme eigenvalues of an SPD matrix.
///
/// Orders up to `dense_max_order` use a full symmetric eigensolve. Larger
/// orders use Lanczos with full reorthogonalization for lambda_max and
/// shift-invert Lanczos (sparse Cholesky of A) for lambda_min, capped at
/// 10 sqrt(order) steps. If a cap is hit the eigenvalue is bracketed by
/// Cholesky inertia tests and refined by inverse iteration. Either way the
/// final vector is polished by inverse iteration at a shift on the definite
/// side, so the returned eigenvalues are Rayleigh quotients.
///
/// Relative residuals below about 100 eps ||A|| / lambda cannot be measured
/// in double precision; the target is raised to that floor when needed.
/// Throws std::invalid_argument for a bad tolerance and NumericalError if
/// A is not positive definite.
SpectralResult extreme_eigenvalues(const SparseSymmetric& a, const EigenOptions& opts = {});

struct GeneralizedResult {
  double lambda = 0.0;
  double residual = 0.0;  ///< ||A u - lambda B u|| / ||lambda B u||
  bool converged = false;
  EigenMethod method = EigenMethod::dense;
  Eigen::VectorXd u;
};

/// Smallest lambda with A u = lambda B u, for SPD A and B of equal order.
GeneralizedResult generalized_min_eigenvalue(const SparseSymmetric& a, const SparseSymmetric& b,
                                             const EigenOptions& opts = {});

struct ConditionReport {
  SpectralResult a;       ///< stiffness matrix
  SpectralResult scaled;  ///< Jacobi-scaled stiffness matrix
};

/// Assembles A once, scales it and solves both. Throws NumericalError if
/// lambda_max of the scaled matrix leaves [1, d + 1].
ConditionReport condition_report(const SimplicialMesh& mesh, const DiffusionField& field,
                                 const EigenOptions& opts = {});

}  // namespace fecond

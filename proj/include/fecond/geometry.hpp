#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fecond/mesh.hpp"

namespace fecond {

class DiffusionField;

/// Per-element geometric data.
///
/// The reference element is the standard simplex scaled isotropically by
/// (d!)^(1/d), so it has unit volume and |det jacobian| = volume.
struct ElementGeometry {
  Eigen::MatrixXd jacobian;  ///< d x d, maps the reference element onto K
  double volume = 0.0;       ///< |K|
  double d_k = 0.0;          ///< approximate max distance from K to the boundary
  double diameter = 0.0;     ///< longest edge
  std::vector<int> patch_ids;  ///< interior row indices of the vertices of K
};

struct MeshMetrics {
  std::vector<double> patch_volumes;  ///< |omega_j| per interior row
  std::vector<int> patch_counts;      ///< element count per interior row
  int p_min = 0;                      ///< fewest elements in a patch (0 if no interior vertex)
  double k_min_volume = 0.0;          ///< |K_min|
  double k_avg_volume = 0.0;          ///< |Omega| / N
  double total_volume = 0.0;          ///< |Omega|
  double h_domain = 0.0;              ///< diameter of the domain
  double max_aspect_ratio = 0.0;      ///< max over elements of element_aspect_ratio
  std::optional<double> sigma_h;      ///< sum |K| det(D_K)^(-1/2), when a field is given
};

struct MeshGeometry {
  std::vector<ElementGeometry> elements;
  MeshMetrics metrics;
};

/// Distance from `point` to the boundary of the meshed domain.
/// Throws DomainError if the point lies outside every element.
double distance_to_boundary(const SimplicialMesh& mesh, const Point& point);

/// Maximum of the boundary distance over the vertices and centroid of the
/// element. Underestimates the true maximum over K by at most its diameter.
double element_d_k(const SimplicialMesh& mesh, std::size_t element_id);

/// Jacobian of the affine map from the unit-volume reference simplex to K.
Eigen::MatrixXd element_jacobian(const SimplicialMesh& mesh, std::size_t element_id);

MeshGeometry compute_metrics(const SimplicialMesh& mesh);
/// As above, additionally filling sigma_h from the element-averaged field.
MeshGeometry compute_metrics(const SimplicialMesh& mesh, const DiffusionField& field);

}  // namespace fecond

#include "fecond/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>
#include <fmt/format.h>

#include "fecond/assembly.hpp"
#include "fecond/error.hpp"

namespace fecond {

namespace {

double reference_scale(int dim) {
  // (d!)^(1/d): edge length of the unit-volume scaled standard simplex.
  const double fact = dim == 1 ? 1.0 : dim == 2 ? 2.0 : 6.0;
  return std::pow(fact, 1.0 / dim);
}

void check_element(const SimplicialMesh& mesh, std::size_t k) {
  if (k >= mesh.num_elements())
    throw std::out_of_range(fmt::format("element id {} out of range ({} elements)", k, mesh.num_elements()));
}

double d_k_unchecked(const SimplicialMesh& mesh, std::size_t k) {
  const auto ids = mesh.element(k);
  Point centroid{0.0, 0.0, 0.0};
  double best = 0.0;
  for (int v : ids) {
    const Point& p = mesh.vertex(static_cast<std::size_t>(v));
    // Boundary vertices sit at distance zero.
    if (!mesh.is_boundary(static_cast<std::size_t>(v))) best = std::max(best, mesh.boundary_distance(p));
    for (int c = 0; c < 3; ++c) centroid[c] += p[c] / static_cast<double>(ids.size());
  }
  return std::max(best, mesh.boundary_distance(centroid));
}

}  // namespace

double distance_to_boundary(const SimplicialMesh& mesh, const Point& point) {
  if (!mesh.locate(point))
    throw DomainError(fmt::format("point ({}, {}, {}) lies outside the meshed domain", point[0], point[1], point[2]));
  return mesh.boundary_distance(point);
}

double element_d_k(const SimplicialMesh& mesh, std::size_t element_id) {
  check_element(mesh, element_id);
  return d_k_unchecked(mesh, element_id);
}

Eigen::MatrixXd element_jacobian(const SimplicialMesh& mesh, std::size_t element_id) {
  check_element(mesh, element_id);
  const int d = mesh.dim();
  const auto ids = mesh.element(element_id);
  const Point& v0 = mesh.vertex(static_cast<std::size_t>(ids[0]));
  Eigen::MatrixXd edges(d, d);
  for (int i = 0; i < d; ++i) {
    const Point& vi = mesh.vertex(static_cast<std::size_t>(ids[static_cast<std::size_t>(i) + 1]));
    for (int r = 0; r < d; ++r) edges(r, i) = vi[r] - v0[r];
  }
  return edges / reference_scale(d);
}

MeshGeometry compute_metrics(const SimplicialMesh& mesh) {
  MeshGeometry out;
  const std::size_t n = mesh.num_elements();
  const std::size_t nvi = mesh.num_interior();
  out.elements.resize(n);
  auto& m = out.metrics;
  m.patch_volumes.assign(nvi, 0.0);
  m.patch_counts.assign(nvi, 0);
  m.k_min_volume = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < n; ++k) {
    auto& g = out.elements[k];
    g.jacobian = element_jacobian(mesh, k);
    g.volume = element_volume(mesh, k);
    if (!(g.volume > 0.0)) throw MeshError(fmt::format("element {} is degenerate", k));
    g.d_k = d_k_unchecked(mesh, k);
    g.diameter = element_diameter(mesh, k);
    for (int v : mesh.element(k)) {
      const int row = mesh.interior_index(static_cast<std::size_t>(v));
      if (row < 0) continue;
      g.patch_ids.push_back(row);
      m.patch_volumes[static_cast<std::size_t>(row)] += g.volume;
      ++m.patch_counts[static_cast<std::size_t>(row)];
    }
    m.total_volume += g.volume;
    m.k_min_volume = std::min(m.k_min_volume, g.volume);
    m.max_aspect_ratio = std::max(m.max_aspect_ratio, element_aspect_ratio(mesh, k));
  }
  m.k_avg_volume = m.total_volume / static_cast<double>(n);
  m.p_min = m.patch_counts.empty() ? 0 : *std::min_element(m.patch_counts.begin(), m.patch_counts.end());

  // The diameter of a polytope is attained between two boundary vertices.
  std::vector<Point> hull;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.is_boundary(v)) hull.push_back(mesh.vertex(v));
  double h2 = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      const double dx = hull[i][0] - hull[j][0];
      const double dy = hull[i][1] - hull[j][1];
      const double dz = hull[i][2] - hull[j][2];
      h2 = std::max(h2, dx * dx + dy * dy + dz * dz);
    }
  m.h_domain = std::sqrt(h2);
  return out;
}

MeshGeometry compute_metrics(const SimplicialMesh& mesh, const DiffusionField& field) {
  MeshGeometry out = compute_metrics(mesh);
  double sigma = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    sigma += out.elements[k].volume / std::sqrt(average_diffusion(mesh, field, k).determinant());
  out.metrics.sigma_h = sigma;
  return out;
}

}  // namespace fecond

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace fecond {

/// Coordinates of a vertex; components beyond the mesh dimension are zero.
using Point = std::array<double, 3>;

/// Vertex indices of a simplex; entries beyond `dim + 1` are -1.
using Cell = std::array<int, 4>;

/// Vertex indices of a boundary facet (a simplex of dimension `dim - 1`).
using Facet = std::array<int, 3>;

namespace detail {
struct SpatialIndex;
}

/// Conforming simplicial mesh of a polytope in 1, 2 or 3 dimensions.
///
/// Instances are immutable once built. `build` normalizes every element to
/// positive orientation, classifies facets by incidence and numbers the
/// interior vertices contiguously in increasing vertex order. Copies share
/// the read-only spatial index, so all const queries are safe to call from
/// several threads.
class SimplicialMesh {
 public:
  /// Validates and builds a mesh. Throws MeshError on zero-volume elements,
  /// facets shared by more than two elements or by two overlapping elements,
  /// an open boundary, or vertices not referenced by any element.
  static SimplicialMesh build(int dim, std::vector<Point> vertices, std::vector<Cell> elements);

  int dim() const noexcept { return dim_; }
  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_elements() const noexcept { return elements_.size(); }
  std::size_t num_interior() const noexcept { return interior_vertices_.size(); }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const Point& vertex(std::size_t v) const { return vertices_[v]; }

  const std::vector<Cell>& elements() const noexcept { return elements_; }
  /// The `dim + 1` vertex ids of element `k`.
  std::span<const int> element(std::size_t k) const {
    return {elements_[k].data(), static_cast<std::size_t>(dim_ + 1)};
  }

  bool is_boundary(std::size_t v) const { return boundary_flags_[v] != 0; }
  const std::vector<char>& boundary_flags() const noexcept { return boundary_flags_; }

  /// Row index of vertex `v` among the interior vertices, or -1 on the boundary.
  int interior_index(std::size_t v) const { return interior_index_[v]; }
  /// Interior vertex ids ordered by row index.
  const std::vector<int>& interior_vertices() const noexcept { return interior_vertices_; }

  const std::vector<Facet>& boundary_facets() const noexcept { return boundary_facets_; }
  std::span<const int> facet(std::size_t f) const {
    return {boundary_facets_[f].data(), static_cast<std::size_t>(dim_)};
  }

  /// Element containing `p` (closed, with a small relative tolerance).
  std::optional<std::size_t> locate(const Point& p) const;

  /// Distance from `p` to the nearest boundary facet. No containment check.
  double boundary_distance(const Point& p) const;

 private:
  SimplicialMesh() = default;

  int dim_ = 0;
  std::vector<Point> vertices_;
  std::vector<Cell> elements_;
  std::vector<char> boundary_flags_;
  std::vector<int> interior_index_;
  std::vector<int> interior_vertices_;
  std::vector<Facet> boundary_facets_;
  std::shared_ptr<const detail::SpatialIndex> index_;
};

/// Signed volume of the simplex spanned by `dim + 1` points.
double signed_volume(int dim, std::span<const Point> corners);

/// Signed volume of element `k` (positive for every element of a built mesh).
double element_volume(const SimplicialMesh& mesh, std::size_t k);

/// Longest edge length of element `k`.
double element_diameter(const SimplicialMesh& mesh, std::size_t k);

/// Ratio of longest to shortest edge of element `k`. Equals sqrt(1 + a^2)
/// for a right triangle with legs h and h/a.
double element_aspect_ratio(const SimplicialMesh& mesh, std::size_t k);

/// Euclidean distance from `p` to the simplex spanned by `corners`
/// (a point, segment or triangle).
double point_simplex_distance(const Point& p, std::span<const Point> corners);

}  // namespace fecond

#include "fecond/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <Eigen/Dense>
#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fecond/error.hpp"

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace fecond {

namespace detail {

using BoxPoint = bg::model::point<double, 3, bg::cs::cartesian>;
using Box = bg::model::box<BoxPoint>;
using BoxEntry = std::pair<Box, std::size_t>;
using Tree = bgi::rtree<BoxEntry, bgi::rstar<16>>;

struct SpatialIndex {
  Tree facets;
  Tree elements;
};

namespace {

Box bounding_box(std::span<const Point> pts) {
  Point lo = pts[0];
  Point hi = pts[0];
  for (const auto& p : pts.subspan(1)) {
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  return {BoxPoint(lo[0], lo[1], lo[2]), BoxPoint(hi[0], hi[1], hi[2])};
}

}  // namespace
}  // namespace detail

namespace {

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double norm(const Point& a) { return std::sqrt(dot(a, a)); }

Point lerp(const Point& a, const Point& d, double t) {
  return {a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]};
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = sub(b, a);
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(sub(p, a), ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(sub(p, lerp(a, ab, t)));
}

// Closest point on a triangle by Voronoi-region classification.
double triangle_distance(const Point& p, const Point& a, const Point& b, const Point& c) {
  const Point ab = sub(b, a);
  const Point ac = sub(c, a);
  const Point ap = sub(p, a);
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return norm(ap);

  const Point bp = sub(p, b);
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return norm(bp);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return norm(sub(p, lerp(a, ab, d1 / (d1 - d3))));

  const Point cp = sub(p, c);
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return norm(cp);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return norm(sub(p, lerp(a, ac, d2 / (d2 - d6))));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return norm(sub(p, lerp(b, sub(c, b), w)));
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  const Point q{a[0] + ab[0] * v + ac[0] * w, a[1] + ab[1] * v + ac[1] * w,
                a[2] + ab[2] * v + ac[2] * w};
  return norm(sub(p, q));
}

std::array<Point, 4> corners_of(const std::vector<Point>& vertices, std::span<const int> ids) {
  std::array<Point, 4> out{};
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = vertices[static_cast<std::size_t>(ids[i])];
  return out;
}

double max_edge(std::span<const Point> corners) {
  double h = 0.0;
  for (std::size_t i = 0; i < corners.size(); ++i)
    for (std::size_t j = i + 1; j < corners.size(); ++j)
      h = std::max(h, norm(sub(corners[i], corners[j])));
  return h;
}

struct FacetRecord {
  std::array<int, 3> key;  // sorted, padded with -1
  std::size_t element;
  int opposite;            // vertex id opposite the facet
};

std::string facet_name(int dim, const std::array<int, 3>& key) {
  return fmt::format("({})", fmt::join(key.begin(), key.begin() + dim, " "));
}

}  // namespace

double signed_volume(int dim, std::span<const Point> corners) {
  switch (dim) {
    case 1:
      return corners[1][0] - corners[0][0];
    case 2: {
      const Point e1 = sub(corners[1], corners[0]);
      const Point e2 = sub(corners[2], corners[0]);
      return 0.5 * (e1[0] * e2[1] - e1[1] * e2[0]);
    }
    case 3: {
      const Point e1 = sub(corners[1], corners[0]);
      const Point e2 = sub(corners[2], corners[0]);
      const Point e3 = sub(corners[3], corners[0]);
      return (e1[0] * (e2[1] * e3[2] - e2[2] * e3[1]) - e1[1] * (e2[0] * e3[2] - e2[2] * e3[0]) +
              e1[2] * (e2[0] * e3[1] - e2[1] * e3[0])) /
             6.0;
    }
    default:
      throw std::invalid_argument("dimension must be 1, 2 or 3");
  }
}

double point_simplex_distance(const Point& p, std::span<const Point> corners) {
  switch (corners.size()) {
    case 1:
      return norm(sub(p, corners[0]));
    case 2:
      return segment_distance(p, corners[0], corners[1]);
    case 3:
      return triangle_distance(p, corners[0], corners[1], corners[2]);
    default:
      throw std::invalid_argument("point_simplex_distance supports points, segments and triangles");
  }
}

double element_volume(const SimplicialMesh& mesh, std::size_t k) {
  const auto c = corners_of(mesh.vertices(), mesh.element(k));
  return signed_volume(mesh.dim(), std::span<const Point>(c.data(), mesh.dim() + 1));
}

double element_diameter(const SimplicialMesh& mesh, std::size_t k) {
  const auto c = corners_of(mesh.vertices(), mesh.element(k));
  return max_edge(std::span<const Point>(c.data(), mesh.dim() + 1));
}

double element_aspect_ratio(const SimplicialMesh& mesh, std::size_t k) {
  const auto c = corners_of(mesh.vertices(), mesh.element(k));
  const int n = mesh.dim() + 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double len = norm(sub(c[i], c[j]));
      lo = std::min(lo, len);
      hi = std::max(hi, len);
    }
  return hi / lo;
}

SimplicialMesh SimplicialMesh::build(int dim, std::vector<Point> vertices,
                                     std::vector<Cell> elements) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (elements.empty()) throw MeshError("mesh has no elements");

  const int nv = static_cast<int>(vertices.size());
  const int nloc = dim + 1;
  std::vector<char> referenced(vertices.size(), 0);

  for (std::size_t k = 0; k < elements.size(); ++k) {
    Cell& cell = elements[k];
    for (int i = 0; i < nloc; ++i) {
      if (cell[i] < 0 || cell[i] >= nv)
        throw MeshError(fmt::format("element {} references vertex {} out of range", k, cell[i]));
      referenced[static_cast<std::size_t>(cell[i])] = 1;
    }
    for (int i = nloc; i < 4; ++i) cell[i] = -1;
    for (int i = 0; i < nloc; ++i)
      for (int j = i + 1; j < nloc; ++j)
        if (cell[i] == cell[j])
          throw MeshError(fmt::format("element {} repeats vertex {}", k, cell[i]));

    auto c = corners_of(vertices, std::span<const int>(cell.data(), nloc));
    const std::span<const Point> cs(c.data(), nloc);
    const double vol = signed_volume(dim, cs);
    const double scale = std::pow(max_edge(cs), dim);
    if (!(std::abs(vol) > 1e-13 * scale))
      throw MeshError(fmt::format("element {} has zero volume", k));
    if (vol < 0.0) {
      if (dim == 1)
        std::swap(cell[0], cell[1]);
      else
        std::swap(cell[dim - 1], cell[dim]);
    }
  }
  for (int v = 0; v < nv; ++v)
    if (!referenced[static_cast<std::size_t>(v)])
      throw MeshError(fmt::format("vertex {} is not referenced by any element", v));

  // Facet incidence: sort all element facets by their sorted vertex key.
  std::vector<FacetRecord> records;
  records.reserve(elements.size() * static_cast<std::size_t>(nloc));
  for (std::size_t k = 0; k < elements.size(); ++k) {
    for (int skip = 0; skip < nloc; ++skip) {
      FacetRecord r{{-1, -1, -1}, k, elements[k][skip]};
      int m = 0;
      for (int i = 0; i < nloc; ++i)
        if (i != skip) r.key[m++] = elements[k][i];
      std::sort(r.key.begin(), r.key.begin() + dim);
      records.push_back(r);
    }
  }
  std::sort(records.begin(), records.end(), [](const FacetRecord& a, const FacetRecord& b) {
    return a.key != b.key ? a.key < b.key : a.element < b.element;
  });

  auto side_of = [&](const FacetRecord& r) {
    std::array<Point, 4> c{};
    for (int i = 0; i < dim; ++i) c[i] = vertices[static_cast<std::size_t>(r.key[i])];
    c[dim] = vertices[static_cast<std::size_t>(r.opposite)];
    return signed_volume(dim, std::span<const Point>(c.data(), nloc));
  };

  SimplicialMesh mesh;
  mesh.dim_ = dim;
  mesh.boundary_flags_.assign(vertices.size(), 0);

  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i + 1;
    while (j < records.size() && records[j].key == records[i].key) ++j;
    const std::size_t count = j - i;
    if (count == 1) {
      mesh.boundary_facets_.push_back(records[i].key);
      for (int m = 0; m < dim; ++m) mesh.boundary_flags_[static_cast<std::size_t>(records[i].key[m])] = 1;
    } else if (count == 2) {
      if ((side_of(records[i]) > 0.0) == (side_of(records[i + 1]) > 0.0))
        throw MeshError(fmt::format("non-conforming mesh: facet {} is shared by overlapping elements {} and {}",
                                    facet_name(dim, records[i].key), records[i].element,
                                    records[i + 1].element));
    } else {
      throw MeshError(fmt::format("non-conforming mesh: facet {} is shared by {} elements",
                                  facet_name(dim, records[i].key), count));
    }
    i = j;
  }

  // Watertightness: two boundary points in 1D; otherwise every ridge of the
  // boundary surface is shared by an even number of boundary facets.
  if (dim == 1) {
    if (mesh.boundary_facets_.size() != 2)
      throw MeshError(fmt::format("1D mesh must have exactly two boundary points, found {}",
                                  mesh.boundary_facets_.size()));
  } else {
    std::map<std::array<int, 2>, int> ridges;
    for (const auto& f : mesh.boundary_facets_) {
      if (dim == 2) {
        ++ridges[{f[0], -1}];
        ++ridges[{f[1], -1}];
      } else {
        ++ridges[{f[0], f[1]}];
        ++ridges[{f[0], f[2]}];
        ++ridges[{f[1], f[2]}];
      }
    }
    for (const auto& [ridge, n] : ridges)
      if (n % 2 != 0)
        throw MeshError(fmt::format("boundary is not closed at ridge ({}{})", ridge[0],
                                    ridge[1] >= 0 ? fmt::format(" {}", ridge[1]) : std::string{}));
  }

  mesh.interior_index_.assign(vertices.size(), -1);
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    if (!mesh.boundary_flags_[v]) {
      mesh.interior_index_[v] = static_cast<int>(mesh.interior_vertices_.size());
      mesh.interior_vertices_.push_back(static_cast<int>(v));
    }
  }

  auto index = std::make_shared<detail::SpatialIndex>();
  {
    std::vector<detail::BoxEntry> boxes;
    boxes.reserve(mesh.boundary_facets_.size());
    for (std::size_t f = 0; f < mesh.boundary_facets_.size(); ++f) {
      auto c = corners_of(vertices, std::span<const int>(mesh.boundary_facets_[f].data(), dim));
      boxes.emplace_back(detail::bounding_box(std::span<const Point>(c.data(), dim)), f);
    }
    index->facets = detail::Tree(boxes.begin(), boxes.end());
    boxes.clear();
    for (std::size_t k = 0; k < elements.size(); ++k) {
      auto c = corners_of(vertices, std::span<const int>(elements[k].data(), nloc));
      boxes.emplace_back(detail::bounding_box(std::span<const Point>(c.data(), nloc)), k);
    }
    index->elements = detail::Tree(boxes.begin(), boxes.end());
  }

  mesh.vertices_ = std::move(vertices);
  mesh.elements_ = std::move(elements);
  mesh.index_ = std::move(index);
  return mesh;
}

double SimplicialMesh::boundary_distance(const Point& p) const {
  const detail::BoxPoint q(p[0], p[1], p[2]);
  const std::size_t total = index_->facets.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<detail::BoxEntry> hits;
  // Boxes come back nearest first; every box past the k-th is at least as
  // far as the k-th, so stop once that bound cannot improve on `best`.
  for (std::size_t k = std::min<std::size_t>(8, total);; k = std::min(total, 4 * k)) {
    hits.clear();
    index_->facets.query(bgi::nearest(q, static_cast<unsigned>(k)), std::back_inserter(hits));
    double farthest = 0.0;
    for (const auto& hit : hits) {
      const double box = bg::distance(q, hit.first);
      farthest = std::max(farthest, box);
      if (box >= best) continue;
      const auto c = corners_of(vertices_, facet(hit.second));
      best = std::min(best, point_simplex_distance(p, std::span<const Point>(c.data(), dim_)));
    }
    if (k == total || farthest >= best) return best;
  }
}

std::optional<std::size_t> SimplicialMesh::locate(const Point& p) const {
  const detail::BoxPoint q(p[0], p[1], p[2]);
  std::vector<detail::BoxEntry> hits;
  // Slightly inflated query box so points on shared facets are not missed.
  double extent = 0.0;
  for (int c = 0; c < dim_; ++c) extent = std::max(extent, std::abs(p[c]));
  const double pad = 1e-12 * std::max(1.0, extent);
  const detail::Box probe(detail::BoxPoint(p[0] - pad, p[1] - pad, p[2] - pad),
                          detail::BoxPoint(p[0] + pad, p[1] + pad, p[2] + pad));
  index_->elements.query(bgi::intersects(probe), std::back_inserter(hits));
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.second < b.second; });

  for (const auto& hit : hits) {
    const auto ids = element(hit.second);
    const auto c = corners_of(vertices_, ids);
    Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (int i = 0; i < dim_; ++i) {
      for (int r = 0; r < dim_; ++r) e(r, i) = c[i + 1][r] - c[0][r];
      rhs(i) = p[i] - c[0][i];
    }
    const Eigen::VectorXd bary = e.topLeftCorner(dim_, dim_).partialPivLu().solve(rhs.head(dim_));
    const double tol = 1e-10;
    if (bary.minCoeff() >= -tol && bary.sum() <= 1.0 + tol) return hit.second;
  }
  return std::nullopt;
}

}  // namespace fecond

#include "fecond/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "fecond/error.hpp"

namespace fecond {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument(fmt::format("dimension {} is not in {{1, 2, 3}}", dim));
}

std::vector<double> linspace(double a, double b, int cells) {
  std::vector<double> x(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) x[static_cast<std::size_t>(i)] = a + (b - a) * i / cells;
  x.back() = b;
  return x;
}

SimplicialMesh interval_mesh(const std::vector<double>& nodes) {
  std::vector<Point> vertices;
  std::vector<Cell> elements;
  vertices.reserve(nodes.size());
  for (double x : nodes) vertices.push_back({x, 0.0, 0.0});
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    elements.push_back({static_cast<int>(i), static_cast<int>(i + 1), -1, -1});
  return SimplicialMesh::build(1, std::move(vertices), std::move(elements));
}

}  // namespace

SimplicialMesh generate_tensor_grid(int dim, const std::vector<std::vector<double>>& axes) {
  check_dim(dim);
  if (axes.size() < static_cast<std::size_t>(dim)) throw std::invalid_argument("missing axis coordinates");
  for (int a = 0; a < dim; ++a) {
    const auto& x = axes[static_cast<std::size_t>(a)];
    if (x.size() < 2) throw std::invalid_argument("each axis needs at least two nodes");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (!(x[i] > x[i - 1]))
        throw MeshError(fmt::format("axis {} coordinates are not strictly increasing at node {}", a, i));
  }

  if (dim == 1) return interval_mesh(axes[0]);

  const int nx = static_cast<int>(axes[0].size());
  const int ny = static_cast<int>(axes[1].size());
  const int nz = dim == 3 ? static_cast<int>(axes[2].size()) : 1;
  auto id = [&](int i, int j, int k) { return i + nx * (j + ny * k); };

  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        vertices.push_back({axes[0][i], axes[1][j], dim == 3 ? axes[2][k] : 0.0});

  std::vector<Cell> elements;
  if (dim == 2) {
    elements.reserve(2 * static_cast<std::size_t>(nx - 1) * (ny - 1));
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        const int v00 = id(i, j, 0), v10 = id(i + 1, j, 0), v01 = id(i, j + 1, 0), v11 = id(i + 1, j + 1, 0);
        elements.push_back({v00, v10, v11, -1});
        elements.push_back({v00, v11, v01, -1});
      }
  } else {
    // Kuhn split: one tetrahedron per axis permutation, walking from the
    // low corner to the high corner one unit step at a time.
    static constexpr std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    elements.reserve(6 * static_cast<std::size_t>(nx - 1) * (ny - 1) * (nz - 1));
    for (int k = 0; k + 1 < nz; ++k)
      for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i)
          for (const auto& perm : perms) {
            std::array<int, 3> c{i, j, k};
            Cell cell{id(i, j, k), -1, -1, -1};
            for (int s = 0; s < 3; ++s) {
              ++c[perm[s]];
              cell[s + 1] = id(c[0], c[1], c[2]);
            }
            elements.push_back(cell);
          }
  }
  return SimplicialMesh::build(dim, std::move(vertices), std::move(elements));
}

SimplicialMesh generate_uniform(int dim, int n_per_axis, const Box& domain) {
  check_dim(dim);
  if (n_per_axis < 1) throw std::invalid_argument("n_per_axis must be at least 1");
  std::vector<std::vector<double>> axes;
  for (int a = 0; a < dim; ++a) {
    if (!(domain.hi[a] > domain.lo[a])) throw std::invalid_argument("empty domain box");
    axes.push_back(linspace(domain.lo[a], domain.hi[a], n_per_axis));
  }
  return generate_tensor_grid(dim, axes);
}

SimplicialMesh generate_chebyshev_1d(int n) {
  if (n < 2) throw std::invalid_argument("chebyshev mesh needs n >= 2");
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  x.front() = 0.0;
  x.back() = 1.0;
  for (int j = 1; j < n; ++j) {
    const double xi = std::numbers::pi * (2.0 * j - 1.0) / (2.0 * (n - 1));
    x[static_cast<std::size_t>(j)] = 0.5 * (1.0 - std::cos(xi));
  }
  return interval_mesh(x);
}

SimplicialMesh generate_power2_1d(int n) {
  if (n < 2) throw std::invalid_argument("power2 mesh needs n >= 2");
  if (n > 52) throw std::invalid_argument("power2 mesh needs n <= 52 (element widths 2^-n underflow)");
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  x.front() = 0.0;
  x.back() = 1.0;
  for (int j = 1; j < n; ++j) x[static_cast<std::size_t>(j)] = std::ldexp(1.0, j - n);
  return interval_mesh(x);
}

std::vector<double> boundary_layer_axis(int n_core, double aspect) {
  if (n_core < 2) throw std::invalid_argument("boundary layer mesh needs n_core >= 2");
  if (!(aspect >= 1.0) || !std::isfinite(aspect))
    throw std::invalid_argument("boundary layer aspect must be a finite number >= 1");
  const double h = 1.0 / ((n_core - 1) + 2.0 / aspect);
  const double t = h / aspect;
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(n_core) + 2);
  x.push_back(0.0);
  for (int i = 0; i < n_core; ++i) x.push_back(t + i * h);
  x.push_back(1.0);
  // Last core node is 1 - t up to rounding; pin it for symmetry.
  x[static_cast<std::size_t>(n_core)] = 1.0 - t;
  return x;
}

SimplicialMesh generate_boundary_layer(int dim, int n_core, double aspect) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("boundary layer mesh is defined for dim 2 and 3");
  const auto axis = boundary_layer_axis(n_core, aspect);
  return generate_tensor_grid(dim, std::vector<std::vector<double>>(static_cast<std::size_t>(dim), axis));
}

}  // namespace fecond

#pragma once

#include <vector>

#include "fecond/mesh.hpp"

namespace fecond {

/// Axis-aligned box; only the first `dim` components are used.
struct Box {
  Point lo{0.0, 0.0, 0.0};
  Point hi{1.0, 1.0, 1.0};
};

/// Uniform mesh with `n_per_axis` cells per axis. Each square cell is split
/// into two right triangles along the (lo, hi) diagonal; each cube into the
/// six Kuhn tetrahedra sharing the main diagonal.
SimplicialMesh generate_uniform(int dim, int n_per_axis, const Box& domain = {});

/// Simplicial mesh of the tensor-product grid with the given strictly
/// increasing coordinates per axis, split as in generate_uniform.
SimplicialMesh generate_tensor_grid(int dim, const std::vector<std::vector<double>>& axes);

/// Unit interval with `n` elements whose interior nodes are the Chebyshev
/// points x_j = (1 - cos(pi (2j - 1) / (2 (n - 1)))) / 2, j = 1..n-1.
SimplicialMesh generate_chebyshev_1d(int n);

/// Unit interval with `n` elements and interior nodes x_j = 2^j / 2^n,
/// refining geometrically towards x = 0.
SimplicialMesh generate_power2_1d(int n);

/// Unit square or cube with a uniform core and one layer of thin cells
/// along the whole boundary.
///
/// The core has `n_core` vertices per axis with spacing h; the layer cells
/// have thickness h / aspect normal to the boundary, so h = 1 / (n_core - 1 + 2 / aspect).
/// Cells are split as in generate_uniform, giving 2 (n_core + 1)^2 triangles
/// or 6 (n_core + 1)^3 tetrahedra.
SimplicialMesh generate_boundary_layer(int dim, int n_core, double aspect);

/// Node coordinates along one axis of generate_boundary_layer.
std::vector<double> boundary_layer_axis(int n_core, double aspect);

}  // namespace fecond

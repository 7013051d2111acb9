#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fecond/assembly.hpp"
#include "fecond/generators.hpp"
#include "fecond/mesh.hpp"

namespace fecond::fixtures {

/// Moves every interior vertex by a uniform random offset of at most
/// `fraction * h` per coordinate, where h is the grid spacing.
inline SimplicialMesh perturb(const SimplicialMesh& mesh, double h, double fraction, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-fraction * h, fraction * h);
  std::vector<Point> pts = mesh.vertices();
  for (std::size_t v = 0; v < pts.size(); ++v) {
    if (mesh.is_boundary(v)) continue;
    for (int c = 0; c < mesh.dim(); ++c) pts[v][c] += u(rng);
  }
  return SimplicialMesh::build(mesh.dim(), std::move(pts), mesh.elements());
}

/// Random perturbed uniform mesh with n cells per axis.
inline SimplicialMesh random_mesh(int dim, int n, std::mt19937_64& rng) {
  const double fraction = dim == 1 ? 0.3 : dim == 2 ? 0.15 : 0.1;
  return perturb(generate_uniform(dim, n), 1.0 / n, fraction, rng);
}

inline SimplicialMesh scaled(const SimplicialMesh& mesh, double c) {
  std::vector<Point> pts = mesh.vertices();
  for (auto& p : pts)
    for (auto& x : p) x *= c;
  return SimplicialMesh::build(mesh.dim(), std::move(pts), mesh.elements());
}

/// Random SPD matrix with eigenvalues in [1, cond].
inline Eigen::MatrixXd random_spd(int dim, double cond, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = g(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  Eigen::VectorXd ev(dim);
  for (int i = 0; i < dim; ++i) ev[i] = std::pow(cond, u(rng));
  ev[0] = 1.0;
  if (dim > 1) ev[dim - 1] = cond;
  Eigen::MatrixXd d = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (d + d.transpose());
}

/// kappa of (1/h) tridiag(-1, 2, -1) of order N - 1.
inline double toeplitz_kappa(int n) {
  const double pi = std::acos(-1.0);
  return (1.0 - std::cos((n - 1) * pi / n)) / (1.0 - std::cos(pi / n));
}

}  // namespace fecond::fixtures

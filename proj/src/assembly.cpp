#include "fecond/assembly.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>

#include "fecond/error.hpp"

namespace fecond {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct QuadRule {
  std::vector<std::array<double, 4>> bary;
  double weight;
};

const QuadRule& order2_rule(int dim) {
  static const QuadRule r1 = [] {
    const double g = 0.5 / std::sqrt(3.0);
    return QuadRule{{{0.5 + g, 0.5 - g, 0, 0}, {0.5 - g, 0.5 + g, 0, 0}}, 0.5};
  }();
  static const QuadRule r2{{{2.0 / 3, 1.0 / 6, 1.0 / 6, 0}, {1.0 / 6, 2.0 / 3, 1.0 / 6, 0}, {1.0 / 6, 1.0 / 6, 2.0 / 3, 0}},
                           1.0 / 3};
  static const QuadRule r3 = [] {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    return QuadRule{{{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}}, 0.25};
  }();
  return dim == 1 ? r1 : dim == 2 ? r2 : r3;
}

void check_spectrum(const Eigen::MatrixXd& m, int dim, double lo, double hi) {
  if (m.rows() != dim || m.cols() != dim)
    throw std::invalid_argument(fmt::format("diffusion tensor must be {0}x{0}", dim));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("diffusion tensor is not symmetric");
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev.minCoeff() < lo * (1 - 1e-9) || ev.maxCoeff() > hi * (1 + 1e-9))
    throw std::invalid_argument(fmt::format("diffusion eigenvalues [{:.6g}, {:.6g}] leave the bounds [{:.6g}, {:.6g}]",
                                            ev.minCoeff(), ev.maxCoeff(), lo, hi));
}

// Rows of the result are the gradients of the barycentric coordinates.
Eigen::MatrixXd basis_gradients(const SimplicialMesh& mesh, std::size_t k, double& volume) {
  const int d = mesh.dim();
  const auto ids = mesh.element(k);
  const Point& x0 = mesh.vertex(static_cast<std::size_t>(ids[0]));
  Eigen::MatrixXd e(d, d);
  for (int i = 0; i < d; ++i) {
    const Point& xi = mesh.vertex(static_cast<std::size_t>(ids[static_cast<std::size_t>(i) + 1]));
    for (int r = 0; r < d; ++r) e(r, i) = xi[r] - x0[r];
  }
  volume = element_volume(mesh, k);
  if (!(volume > 0.0)) throw MeshError(fmt::format("element {} is degenerate", k));
  const Eigen::MatrixXd inv = e.inverse();
  Eigen::MatrixXd g(d + 1, d);
  g.bottomRows(d) = inv;
  g.row(0) = -inv.colwise().sum();
  return g;
}

SparseSymmetric from_triplets(std::size_t n, const Triplets& t) {
  SparseSymmetric::Storage m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return SparseSymmetric(std::move(m));
}

void push_pair(Triplets& t, int i, int j, double v) {
  t.emplace_back(i, j, v);
  if (i != j) t.emplace_back(j, i, v);
}

}  // namespace

DiffusionField::DiffusionField(int dim, Evaluator evaluator, double d_min, double d_max)
    : dim_(dim), eval_(std::move(evaluator)), d_min_(d_min), d_max_(d_max) {
  if (dim < 1 || dim > 3) throw std::invalid_argument(fmt::format("dimension must be 1, 2 or 3, got {}", dim));
  if (!eval_) throw std::invalid_argument("diffusion evaluator is empty");
  if (!(d_min > 0.0) || !(d_max >= d_min))
    throw std::invalid_argument(fmt::format("need 0 < d_min <= d_max, got {} and {}", d_min, d_max));
}

DiffusionField DiffusionField::identity(int dim) {
  DiffusionField f(dim, [dim](const Point&) { return Eigen::MatrixXd::Identity(dim, dim).eval(); }, 1.0, 1.0);
  f.constant_ = true;
  return f;
}

DiffusionField DiffusionField::constant(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols() || d.rows() < 1 || d.rows() > 3)
    throw std::invalid_argument("constant diffusion must be a square matrix of order 1, 2 or 3");
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev.minCoeff() > 0.0)) throw std::invalid_argument("constant diffusion is not positive definite");
  const int dim = static_cast<int>(d.rows());
  check_spectrum(d, dim, ev.minCoeff(), ev.maxCoeff());
  DiffusionField f(dim, [d](const Point&) { return d; }, ev.minCoeff(), ev.maxCoeff());
  f.constant_ = true;
  return f;
}

Eigen::MatrixXd DiffusionField::operator()(const Point& p) const {
  Eigen::MatrixXd m = eval_(p);
  check_spectrum(m, dim_, d_min_, d_max_);
  return m;
}

SparseSymmetric::SparseSymmetric(Storage m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("matrix is not square");
  m_.makeCompressed();
  const Storage t = m_.transpose();
  for (Eigen::Index c = 0; c < m_.outerSize(); ++c) {
    Storage::InnerIterator a(m_, c), b(t, c);
    for (; a && b; ++a, ++b)
      if (a.index() != b.index() || a.value() != b.value()) throw std::invalid_argument("matrix is not symmetric");
    if (a || b) throw std::invalid_argument("matrix is not symmetric");
  }
  diag_ = m_.diagonal();
}

double SparseSymmetric::coeff(std::size_t i, std::size_t j) const {
  if (i >= order() || j >= order())
    throw std::out_of_range(fmt::format("index ({}, {}) out of range for order {}", i, j, order()));
  return m_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

Eigen::MatrixXd average_diffusion(const SimplicialMesh& mesh, const DiffusionField& field, std::size_t element_id) {
  if (element_id >= mesh.num_elements())
    throw std::out_of_range(fmt::format("element id {} out of range ({} elements)", element_id, mesh.num_elements()));
  const int d = mesh.dim();
  if (field.dim() != d)
    throw std::invalid_argument(fmt::format("field dimension {} does not match mesh dimension {}", field.dim(), d));
  const auto ids = mesh.element(element_id);
  Eigen::MatrixXd avg;
  if (field.is_constant()) {
    avg = field(mesh.vertex(static_cast<std::size_t>(ids[0])));
  } else {
    const QuadRule& rule = order2_rule(d);
    avg = Eigen::MatrixXd::Zero(d, d);
    for (const auto& b : rule.bary) {
      Point x{0.0, 0.0, 0.0};
      for (int i = 0; i <= d; ++i)
        for (int c = 0; c < 3; ++c) x[c] += b[static_cast<std::size_t>(i)] * mesh.vertex(static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]))[c];
      avg += rule.weight * field(x);
    }
    avg = 0.5 * (avg + avg.transpose()).eval();
  }
  if (Eigen::LLT<Eigen::MatrixXd>(avg).info() != Eigen::Success)
    throw std::invalid_argument(fmt::format("averaged diffusion on element {} is not positive definite", element_id));
  return avg;
}

SparseSymmetric assemble_stiffness(const SimplicialMesh& mesh, const DiffusionField& field, Dofs dofs) {
  const int d = mesh.dim();
  const bool all = dofs == Dofs::all;
  const std::size_t n = all ? mesh.num_vertices() : mesh.num_interior();
  if (n == 0) throw MeshError("mesh has no interior vertices; the stiffness matrix would be empty");

  Triplets t;
  t.reserve(mesh.num_elements() * static_cast<std::size_t>((d + 1) * (d + 1)));
  std::array<int, 4> row{};
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto ids = mesh.element(k);
    for (int i = 0; i <= d; ++i) {
      const auto v = static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]);
      row[static_cast<std::size_t>(i)] = all ? static_cast<int>(v) : mesh.interior_index(v);
    }
    double vol = 0.0;
    const Eigen::MatrixXd g = basis_gradients(mesh, k, vol);
    const Eigen::MatrixXd local = vol * g * average_diffusion(mesh, field, k) * g.transpose();
    for (int i = 0; i <= d; ++i) {
      const int ri = row[static_cast<std::size_t>(i)];
      if (ri < 0) continue;
      for (int j = i; j <= d; ++j) {
        const int rj = row[static_cast<std::size_t>(j)];
        if (rj < 0) continue;
        push_pair(t, ri, rj, 0.5 * (local(i, j) + local(j, i)));
      }
    }
  }
  return from_triplets(n, t);
}

SparseSymmetric assemble_mass_weighted(const SimplicialMesh& mesh, const DensityFunction& rho) {
  const int d = mesh.dim();
  const std::size_t n = mesh.num_interior();
  if (n == 0) throw MeshError("mesh has no interior vertices; the mass matrix would be empty");
  if (rho.rho.size() != mesh.num_elements())
    throw std::invalid_argument(
        fmt::format("density has {} values for {} elements", rho.rho.size(), mesh.num_elements()));
  const double denom = static_cast<double>((d + 1) * (d + 2));

  Triplets t;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const double vol = element_volume(mesh, k);
    if (!(vol > 0.0)) throw MeshError(fmt::format("element {} is degenerate", k));
    if (!(rho.rho[k] > 0.0)) throw std::invalid_argument(fmt::format("density on element {} is not positive", k));
    const double off = rho.rho[k] * vol / denom;
    const auto ids = mesh.element(k);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int ri = mesh.interior_index(static_cast<std::size_t>(ids[i]));
      if (ri < 0) continue;
      for (std::size_t j = i; j < ids.size(); ++j) {
        const int rj = mesh.interior_index(static_cast<std::size_t>(ids[j]));
        if (rj < 0) continue;
        push_pair(t, ri, rj, i == j ? 2.0 * off : off);
      }
    }
  }
  return from_triplets(n, t);
}

SparseSymmetric jacobi_scale(const SparseSymmetric& a) {
  const Eigen::VectorXd& diag = a.diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (!(diag[i] > 0.0))
      throw std::invalid_argument(fmt::format("diagonal entry {} is {}, not positive", i, diag[i]));
  const Eigen::VectorXd s = diag.cwiseSqrt();
  SparseSymmetric::Storage m = a.matrix();
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseSymmetric::Storage::InnerIterator it(m, c); it; ++it)
      it.valueRef() = it.row() == it.col() ? 1.0 : it.value() / (s[it.row()] * s[it.col()]);
  return SparseSymmetric(std::move(m));
}

DensityFunction make_density(const SimplicialMesh& mesh, std::span<const double> weights) {
  if (weights.size() != mesh.num_elements())
    throw std::invalid_argument(fmt::format("{} weights for {} elements", weights.size(), mesh.num_elements()));
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] > 0.0) || !std::isfinite(weights[k]))
      throw std::invalid_argument(fmt::format("weight on element {} is not a positive number", k));
    total += weights[k] * element_volume(mesh, k);
  }
  DensityFunction out;
  out.rho.resize(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.rho[k] = weights[k] / total;
    out.rho_max = std::max(out.rho_max, out.rho[k]);
  }
  return out;
}

DensityFunction density_equidistributed(const SimplicialMesh& mesh) {
  const double n = static_cast<double>(mesh.num_elements());
  DensityFunction out;
  out.rho.resize(mesh.num_elements());
  for (std::size_t k = 0; k < out.rho.size(); ++k) {
    out.rho[k] = 1.0 / (n * element_volume(mesh, k));
    out.rho_max = std::max(out.rho_max, out.rho[k]);
  }
  return out;
}

DensityFunction density_beta_weighted(const SimplicialMesh& mesh, std::span<const double> beta) {
  return make_density(mesh, beta);
}

}  // namespace fecond

#include "fecond/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "fecond/error.hpp"

namespace fecond {

namespace {

using Vec = Eigen::VectorXd;
using Sparse = SparseSymmetric::Storage;
using Cholesky = Eigen::SimplicialLLT<Sparse>;

constexpr double kEps = std::numeric_limits<double>::epsilon();

enum class Side { min, max };

struct Pair {
  double lambda = 0.0;
  Vec v;
  double residual = std::numeric_limits<double>::infinity();
  bool ok = false;
  int steps = 0;
};

double max_row_sum(const Sparse& m) {
  Vec s = Vec::Zero(m.rows());
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (Sparse::InnerIterator it(m, c); it; ++it) s[it.row()] += std::abs(it.value());
  return s.size() ? s.maxCoeff() : 0.0;
}

// The pencil (A, B); B == nullptr stands for the identity.
class Pencil {
 public:
  Pencil(const Sparse& a, const Sparse* b, double tol)
      : a_(a), b_(b), tol_(tol), anorm_(max_row_sum(a)), bnorm_(b ? max_row_sum(*b) : 1.0) {}

  Eigen::Index order() const { return a_.rows(); }
  const Sparse& a() const { return a_; }
  Vec bmul(const Vec& x) const { return b_ ? Vec(*b_ * x) : x; }
  double rayleigh(const Vec& v) const { return v.dot(a_ * v) / v.dot(bmul(v)); }

  /// Side::min: A - sigma B; Side::max: sigma B - A.
  Sparse shifted(Side side, double sigma) const {
    Sparse bs;
    if (b_) {
      bs = *b_;
    } else {
      bs.resize(a_.rows(), a_.cols());
      bs.setIdentity();
    }
    Sparse m = side == Side::min ? Sparse(a_ - sigma * bs) : Sparse(sigma * bs - a_);
    m.makeCompressed();
    return m;
  }

  bool definite(Side side, double sigma) const {
    Cholesky llt(shifted(side, sigma));
    return llt.info() == Eigen::Success;
  }

  /// Fills residual and ok for a unit vector v with Rayleigh quotient lambda.
  void assess(Pair& p) const {
    const Vec bv = bmul(p.v);
    const double denom = std::abs(p.lambda) * bv.norm();
    p.residual = (a_ * p.v - p.lambda * bv).norm() / denom;
    const double floor = 100.0 * kEps * (anorm_ + std::abs(p.lambda) * bnorm_) * p.v.norm() / denom;
    p.ok = std::isfinite(p.residual) && p.residual <= std::max(tol_, floor);
  }

  Pair pair_from(const Vec& x) const {
    Pair p;
    p.v = x / x.norm();
    p.lambda = rayleigh(p.v);
    assess(p);
    return p;
  }

 private:
  const Sparse& a_;
  const Sparse* b_;
  double tol_;
  double anorm_;
  double bnorm_;
};

Vec random_unit(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v / v.norm();
}

// Inverse iteration at a shift on the definite side of the extreme
// eigenvalue. Returns ok == false with an empty vector if the shifted matrix
// is not definite.
Pair inverse_iteration(const Pencil& p, Side side, double sigma, Vec v, int max_steps = 60) {
  Cholesky llt(p.shifted(side, sigma));
  if (llt.info() != Eigen::Success) return {};
  Pair best;
  for (int it = 1; it <= max_steps; ++it) {
    Vec x = llt.solve(p.bmul(v));
    if (!x.allFinite() || x.norm() == 0.0) break;
    Pair cur = p.pair_from(x);
    cur.steps = it;
    v = cur.v;
    const bool better = cur.residual < best.residual;
    if (better) best = cur;
    if (cur.ok) return cur;
    if (!better && it > 8) break;
  }
  return best;
}

// Finds a definite-side shift near `estimate` and polishes there.
Pair polish(const Pencil& p, Side side, double estimate, const Vec& v0) {
  double delta = 1e-10;
  for (int k = 0; k < 12; ++k, delta *= 10.0) {
    const double sigma = side == Side::min ? estimate * (1.0 - delta) : estimate * (1.0 + delta);
    Pair r = inverse_iteration(p, side, sigma, v0);
    if (!r.v.size()) continue;
    return r;
  }
  return {};
}

// Brackets the extreme eigenvalue by Cholesky inertia tests, starting from a
// Rayleigh quotient (an upper bound for lambda_min, a lower bound for
// lambda_max), then polishes at the definite end of the bracket.
Pair bisection_fallback(const Pencil& p, Side side, double estimate, const Vec& v0) {
  int steps = 0;
  double inside = estimate, beyond = estimate;
  const double factor = side == Side::min ? 0.5 : 2.0;
  for (;; ++steps) {
    if (p.definite(side, beyond)) break;
    inside = beyond;
    beyond *= factor;
    if (steps > 2000 || !std::isfinite(beyond) || beyond == 0.0)
      throw NumericalError("could not bracket the extreme eigenvalue; matrix is not positive definite");
  }
  while (std::abs(inside - beyond) > 1e-10 * std::abs(beyond) && steps < 4000) {
    const double mid = std::sqrt(inside * beyond);
    if (mid == inside || mid == beyond) break;
    (p.definite(side, mid) ? beyond : inside) = mid;
    ++steps;
  }
  Pair r = inverse_iteration(p, side, beyond, v0);
  r.steps += steps;
  return r;
}

// LAPACK-style elimination with partial pivoting on the tridiagonal matrix
// T - theta I, where T has diagonal alpha and off-diagonal beta.
Vec tridiagonal_solve(const std::vector<double>& alpha, const std::vector<double>& beta, double theta, Vec r) {
  const std::size_t m = alpha.size();
  std::vector<double> a(m), b(m, 0.0), c(m, 0.0), sub(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) a[i] = alpha[i] - theta;
  for (std::size_t i = 0; i + 1 < m; ++i) b[i] = sub[i] = beta[i];
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(alpha[i]) + (i + 1 < m ? std::abs(beta[i]) : 0.0));
  const double tiny = std::max(scale, 1.0) * kEps;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double next_b = i + 2 < m ? b[i + 1] : 0.0;
    double p0, p1, p2, o0, o1, o2;
    if (std::abs(sub[i]) > std::abs(a[i])) {
      p0 = sub[i], p1 = a[i + 1], p2 = next_b;
      o0 = a[i], o1 = b[i], o2 = 0.0;
      std::swap(r[static_cast<Eigen::Index>(i)], r[static_cast<Eigen::Index>(i + 1)]);
    } else {
      p0 = a[i], p1 = b[i], p2 = 0.0;
      o0 = sub[i], o1 = a[i + 1], o2 = next_b;
    }
    if (p0 == 0.0) p0 = tiny;
    const double f = o0 / p0;
    a[i] = p0, b[i] = p1, c[i] = p2;
    a[i + 1] = o1 - f * p1;
    if (i + 2 < m) b[i + 1] = o2 - f * p2;
    r[static_cast<Eigen::Index>(i + 1)] -= f * r[static_cast<Eigen::Index>(i)];
  }
  if (a[m - 1] == 0.0) a[m - 1] = tiny;
  Vec x(static_cast<Eigen::Index>(m));
  for (std::size_t k = m; k-- > 0;) {
    double s = r[static_cast<Eigen::Index>(k)];
    if (k + 1 < m) s -= b[k] * x[static_cast<Eigen::Index>(k + 1)];
    if (k + 2 < m) s -= c[k] * x[static_cast<Eigen::Index>(k + 2)];
    x[static_cast<Eigen::Index>(k)] = s / a[k];
  }
  return x;
}

struct LanczosOutcome {
  Pair pair;
  int steps = 0;
};

// Lanczos with two-pass full reorthogonalization for the largest eigenvalue
// of the symmetric operator `op`. Each converged Ritz vector is mapped back
// by `accept`, which returns the candidate pair in the original problem.
LanczosOutcome lanczos_top(const std::function<Vec(const Vec&)>& op, Eigen::Index n, std::uint64_t seed,
                           double tol, const std::function<Pair(const Vec&)>& accept) {
  const auto cap = static_cast<Eigen::Index>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));
  const Eigen::Index limit = std::min(n, std::max<Eigen::Index>(cap, 1));
  Eigen::MatrixXd q(n, limit + 1);
  q.col(0) = random_unit(n, seed);
  std::vector<double> alpha, beta;
  LanczosOutcome out;
  double threshold = tol;

  for (Eigen::Index j = 0; j < limit; ++j) {
    Vec w = op(q.col(j));
    alpha.push_back(q.col(j).dot(w));
    w -= alpha.back() * q.col(j);
    if (j > 0) w -= beta.back() * q.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    const double b = w.norm();
    out.steps = static_cast<int>(j + 1);

    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Vec diag = Eigen::Map<const Vec>(alpha.data(), m);
    Vec off = m > 1 ? Vec(Eigen::Map<const Vec>(beta.data(), m - 1)) : Vec();
    tri.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    const double theta = tri.eigenvalues()[m - 1];
    Vec s = Vec::Ones(m) / std::sqrt(static_cast<double>(m));
    for (int it = 0; it < 3; ++it) {
      s = tridiagonal_solve(alpha, beta, theta, s);
      s /= s.norm();
    }
    const double estimate = std::abs(b * s[m - 1]);
    const bool exhausted = b <= 1e-14 * std::abs(theta) || j + 1 == limit;
    if (estimate <= threshold * std::abs(theta) || exhausted) {
      Pair cand = accept(q.leftCols(m) * s);
      if (cand.residual < out.pair.residual || !out.pair.v.size()) out.pair = cand;
      if (cand.ok || exhausted) return out;
      threshold *= 0.1;
    }
    beta.push_back(b);
    q.col(j + 1) = w / b;
  }
  return out;
}

bool is_tridiagonal(const Sparse& m) {
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (Sparse::InnerIterator it(m, c); it; ++it)
      if (std::abs(it.row() - it.col()) > 1) return false;
  return true;
}

// All eigenvalues of A (B == identity) or of the pencil, ascending.
Vec dense_eigenvalues(const Sparse& a, const Sparse* b) {
  if (b) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Eigen::MatrixXd(a), Eigen::MatrixXd(*b),
                                                                  Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (ges.info() != Eigen::Success) throw NumericalError("dense generalized eigensolve failed");
    return ges.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if (is_tridiagonal(a)) {
    const Vec diag = a.diagonal();
    Vec off(std::max<Eigen::Index>(a.rows() - 1, 0));
    for (Eigen::Index i = 0; i + 1 < a.rows(); ++i) off[i] = a.coeff(i + 1, i);
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  } else {
    es.compute(Eigen::MatrixXd(a), Eigen::EigenvaluesOnly);
  }
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
  return es.eigenvalues();
}

Pair finish(const Pencil& p, Side side, double estimate, const Vec& v0) {
  Pair r = polish(p, side, estimate, v0);
  if (!r.ok) {
    Pair alt = bisection_fallback(p, side, r.v.size() ? r.lambda : estimate, r.v.size() ? r.v : v0);
    alt.steps += r.steps;
    if (alt.residual < r.residual || !r.v.size()) r = alt;
  }
  return r;
}

Pair dense_side(const Pencil& p, Side side, double lambda, std::uint64_t seed) {
  if (side == Side::min && !(lambda > 0.0)) throw NumericalError("matrix is not positive definite");
  return finish(p, side, lambda, random_unit(p.order(), seed));
}

Pair lanczos_max(const Pencil& p, std::uint64_t seed, double tol) {
  const Sparse& a = p.a();
  auto out = lanczos_top([&](const Vec& x) { return Vec(a * x); }, p.order(), seed, tol,
                         [&](const Vec& y) { return p.pair_from(y); });
  Pair r = out.pair;
  if (!r.ok) {
    Pair alt = bisection_fallback(p, Side::max, r.lambda, r.v);
    if (alt.residual < r.residual) r = alt;
    r.steps = alt.steps;
  }
  r.steps += out.steps;
  return r;
}

// Shift-invert Lanczos at zero. For a pencil with B = P^T L L^T P the
// operator is M^T A^-1 M with M = P^T L, whose top eigenvalue is 1/lambda_min.
Pair lanczos_min(const Pencil& p, const Sparse* b, std::uint64_t seed, double tol) {
  Cholesky la(p.a());
  if (la.info() != Eigen::Success) throw NumericalError("sparse Cholesky failed: matrix is not positive definite");
  std::function<Vec(const Vec&)> op;
  std::function<Vec(const Vec&)> back;
  Cholesky lb;
  Sparse lower;
  if (b) {
    lb.compute(*b);
    if (lb.info() != Eigen::Success) throw NumericalError("sparse Cholesky of B failed: B is not positive definite");
    lower = lb.matrixL();
    op = [&](const Vec& x) {
      const Vec y = lb.permutationPinv() * Vec(lower * x);
      const Vec z = la.solve(y);
      return Vec(lower.transpose() * Vec(lb.permutationP() * z));
    };
    back = [&](const Vec& w) {
      const Vec t = lower.transpose().triangularView<Eigen::Upper>().solve(w);
      return Vec(lb.permutationPinv() * t);
    };
  } else {
    op = [&](const Vec& x) { return Vec(la.solve(x)); };
    back = [](const Vec& w) { return w; };
  }
  auto out = lanczos_top(op, p.order(), seed, tol, [&](const Vec& y) { return p.pair_from(back(y)); });
  Pair r = out.pair;
  if (!r.ok) {
    Pair alt = bisection_fallback(p, Side::min, r.lambda, r.v);
    if (alt.residual < r.residual) r = alt;
    r.steps = alt.steps;
  }
  r.steps += out.steps;
  return r;
}

EigenMethod choose(std::size_t order, const EigenOptions& opts) {
  if (opts.force) return *opts.force;
  return order <= opts.dense_max_order ? EigenMethod::dense : EigenMethod::lanczos_shift_invert;
}

}  // namespace

void check_tolerance(double tol) {
  if (!(tol > 0.0) || tol > 1e-3) throw std::invalid_argument(fmt::format("tolerance must lie in (0, 1e-3], got {}", tol));
}

std::string_view to_string(EigenMethod m) {
  return m == EigenMethod::dense ? "dense" : "lanczos_shift_invert";
}

SpectralResult extreme_eigenvalues(const SparseSymmetric& a, const EigenOptions& opts) {
  check_tolerance(opts.tol);
  if (a.order() == 0) throw std::invalid_argument("matrix is empty");
  const Pencil p(a.matrix(), nullptr, opts.tol);
  SpectralResult out;
  out.method = choose(a.order(), opts);
  Pair lo, hi;
  if (out.method == EigenMethod::dense) {
    const Vec ev = dense_eigenvalues(a.matrix(), nullptr);
    lo = dense_side(p, Side::min, ev[0], opts.seed);
    hi = dense_side(p, Side::max, ev[ev.size() - 1], opts.seed + 1);
  } else {
    lo = lanczos_min(p, nullptr, opts.seed, opts.tol);
    hi = lanczos_max(p, opts.seed + 1, opts.tol);
  }
  if (!lo.v.size() || !hi.v.size() || !(lo.lambda > 0.0))
    throw NumericalError("eigensolve failed: matrix is not positive definite");
  out.lambda_min = lo.lambda;
  out.lambda_max = hi.lambda;
  out.kappa = hi.lambda / lo.lambda;
  out.residual = std::max(lo.residual, hi.residual);
  out.converged = lo.ok && hi.ok;
  out.v_min = std::move(lo.v);
  out.v_max = std::move(hi.v);
  out.iterations = lo.steps + hi.steps;
  return out;
}

GeneralizedResult generalized_min_eigenvalue(const SparseSymmetric& a, const SparseSymmetric& b,
                                             const EigenOptions& opts) {
  check_tolerance(opts.tol);
  if (a.order() != b.order())
    throw std::invalid_argument(fmt::format("orders differ: {} and {}", a.order(), b.order()));
  if (a.order() == 0) throw std::invalid_argument("matrix is empty");
  const Pencil p(a.matrix(), &b.matrix(), opts.tol);
  GeneralizedResult out;
  out.method = choose(a.order(), opts);
  Pair r;
  if (out.method == EigenMethod::dense) {
    Cholesky lb(b.matrix());
    if (lb.info() != Eigen::Success) throw NumericalError("B is not positive definite");
    const Vec ev = dense_eigenvalues(a.matrix(), &b.matrix());
    r = dense_side(p, Side::min, ev[0], opts.seed);
  } else {
    r = lanczos_min(p, &b.matrix(), opts.seed, opts.tol);
  }
  if (!r.v.size() || !(r.lambda > 0.0)) throw NumericalError("generalized eigensolve failed");
  out.lambda = r.lambda;
  out.residual = r.residual;
  out.converged = r.ok;
  out.u = std::move(r.v);
  return out;
}

ConditionReport condition_report(const SimplicialMesh& mesh, const DiffusionField& field, const EigenOptions& opts) {
  const SparseSymmetric a = assemble_stiffness(mesh, field);
  const SparseSymmetric s = jacobi_scale(a);
  ConditionReport out{extreme_eigenvalues(a, opts), extreme_eigenvalues(s, opts)};
  const double top = out.scaled.lambda_max;
  const double d1 = static_cast<double>(mesh.dim() + 1);
  if (top < 1.0 - 1e-10 || top > d1 * (1.0 + 1e-10))
    throw NumericalError(fmt::format("lambda_max of the scaled matrix is {:.17g}, outside [1, {}]", top, d1));
  return out;
}

}  // namespace fecond

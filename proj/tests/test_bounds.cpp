#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "fecond/assembly.hpp"
#include "fecond/bounds.hpp"
#include "fecond/error.hpp"
#include "fecond/generators.hpp"
#include "fecond/geometry.hpp"
#include "fecond/spectra.hpp"
#include "support.hpp"

using namespace fecond;

namespace {

BoundInputs inputs(const SimplicialMesh& m, int d) { return BoundInputs::from(m, DiffusionField::identity(d)); }

BoundReport report(const SimplicialMesh& m, double p = 2.9) {
  const auto f = DiffusionField::identity(m.dim());
  return make_report(m, f, condition_report(m, f), p);
}

// Unit interval with random graded interior nodes.
SimplicialMesh random_graded_1d(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double power = 1.0 + 4.0 * u(rng);
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) x[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i) / n, power);
  for (int i = 1; i < n; ++i) {
    const double lo = x[static_cast<std::size_t>(i - 1)], hi = x[static_cast<std::size_t>(i + 1)];
    auto& xi = x[static_cast<std::size_t>(i)];
    xi += 0.2 * (u(rng) - 0.5) * std::min(xi - lo, hi - xi);
  }
  return generate_tensor_grid(1, {x});
}

}  // namespace

TEST(Beta, OneDimensional) {
  const auto m = generate_chebyshev_1d(6);
  const auto b = compute_beta(m, DiffusionField::identity(1));
  double top = 0.0;
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    const double h = element_volume(m, k);
    EXPECT_NEAR(b.beta[k], 1.0 / (h * h), 1e-12 * b.beta[k]);
    top = std::max(top, b.beta[k]);
  }
  EXPECT_EQ(b.gamma_h * b.weighted_sum, top);
  EXPECT_NEAR(compute_beta(generate_uniform(1, 8), DiffusionField::identity(1)).gamma_h, 1.0, 1e-14);
}

TEST(Beta, ScaledDiffusionUnchanged) {
  std::mt19937_64 rng(2);
  const auto m = fixtures::random_mesh(3, 3, rng);
  const auto a = compute_beta(m, DiffusionField::identity(3)).beta;
  const auto b = compute_beta(m, DiffusionField::constant(5.0 * Eigen::MatrixXd::Identity(3, 3))).beta;
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-13 * a[k]);
}

TEST(Beta, RightTriangle) {
  const double h = 0.1, a = 20.0;
  const auto m = SimplicialMesh::build(
      2, {{0, 0, 0}, {h, 0, 0}, {0, h / a, 0}, {h, h / a, 0}}, {{0, 1, 2, -1}, {1, 3, 2, -1}});
  const auto b = compute_beta(m, DiffusionField::identity(2));
  // F = diag(h, h/a) / sqrt(2), so ||F^-1 F^-T|| = 2 a^2 / h^2.
  EXPECT_NEAR(b.beta[0], 2 * a * a / (h * h), 1e-10 * b.beta[0]);
}

TEST(Beta, ScaleLaw) {
  std::mt19937_64 rng(12);
  for (int d = 1; d <= 3; ++d) {
    const auto m = fixtures::random_mesh(d, 3, rng);
    const double c = 2.5;
    const auto a = compute_beta(m, DiffusionField::identity(d)).beta;
    const auto b = compute_beta(fixtures::scaled(m, c), DiffusionField::identity(d)).beta;
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(b[k], a[k] / (c * c), 1e-12 * a[k]) << d;
  }
}

TEST(SymmetricNorm, MatchesEigenSolver) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 3;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
    const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
    const double expect = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
    EXPECT_NEAR(symmetric_norm2(m), expect, 1e-12 * expect);
  }
  EXPECT_EQ(symmetric_norm2(Eigen::Matrix3d::Identity() * 2.0), 2.0);
}

TEST(MassBound, Examples) {
  const auto m = generate_uniform(1, 4);
  const DensityFunction one{std::vector<double>(4, 1.0), 1.0};
  const double b = bound_lambda_min_B(m, one);
  EXPECT_NEAR(b, 0.5 / 6.0, 1e-15);
  const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(assemble_mass_weighted(m, one).to_dense()).eigenvalues();
  EXPECT_LE(b, ev(0));
  const DensityFunction two{std::vector<double>(4, 2.0), 2.0};
  EXPECT_DOUBLE_EQ(bound_lambda_min_B(m, two), 2 * b);
}

TEST(MassBound, EquidistributedPatchMinimum) {
  for (const auto& m : {generate_power2_1d(10), generate_chebyshev_1d(20), generate_boundary_layer(2, 6, 30.0)}) {
    const auto g = compute_metrics(m);
    const int d = m.dim();
    const double omega_min = bound_lambda_min_B(m, density_equidistributed(m)) * (d + 1) * (d + 2);
    EXPECT_GE(omega_min, g.metrics.p_min / static_cast<double>(m.num_elements()) * (1 - 1e-14));
  }
}

TEST(LambdaRho, Examples) {
  const auto m = generate_uniform(1, 4);
  const auto in = inputs(m, 1);
  EXPECT_NEAR(bound_lambda_rho(in, DensityFunction{std::vector<double>(4, 1.0), 1.0}, 0.0), 1.0 / 0.375, 1e-14);

  auto thin = inputs(generate_uniform(2, 4), 2).with_distance(0.0);
  EXPECT_DOUBLE_EQ(bound_lambda_rho(thin, density_equidistributed(generate_uniform(2, 4)), 0.0), 1.0);

  const auto cube = generate_uniform(3, 3);
  const auto in3 = inputs(cube, 3);
  const auto rho = density_equidistributed(cube);
  EXPECT_LT(bound_lambda_rho(in3, rho, 3.0 - 1e-12), 1e-3 * bound_lambda_rho(in3, rho, 2.9));
  EXPECT_THROW(bound_lambda_rho(in3, rho, 3.0), std::invalid_argument);
  EXPECT_THROW(bound_lambda_rho(in3, rho, 1.0), std::invalid_argument);
}

TEST(LambdaMinA, Examples) {
  const auto in = inputs(generate_uniform(1, 4), 1);
  EXPECT_NEAR(bound_lambda_min_A(in, 0.0), 1.0 / 1.5, 1e-15);
  const double exact = 4 * (2 - std::sqrt(2.0));
  EXPECT_NEAR(exact / bound_lambda_min_A(in, 0.0), 3.51, 0.01);
}

TEST(LambdaMinA, UniformSlope2D) {
  std::vector<double> n, v;
  for (int k : {8, 16, 32, 64}) {
    const auto m = generate_uniform(2, k);
    n.push_back(static_cast<double>(m.num_elements()));
    v.push_back(bound_lambda_min_A(inputs(m, 2), 0.0));
  }
  const double slope = std::log(v[3] / v[2]) / std::log(n[3] / n[2]);
  EXPECT_NEAR(slope, -1.0, 0.05);
}

TEST(LambdaMinA, ContinuousInP) {
  const auto in = inputs(generate_uniform(3, 3), 3);
  for (double p : {1.1, 1.5, 2.0, 2.5, 2.9, 2.99}) {
    const double a = bound_lambda_min_A(in, p), b = bound_lambda_min_A(in, p + 1e-7);
    EXPECT_GT(a, 0.0);
    EXPECT_NEAR(a, b, 1e-5 * a) << p;
  }
  EXPECT_LT(bound_lambda_min_A(in, 3.0 - 1e-12), 1e-3 * bound_lambda_min_A(in, 2.9));
  EXPECT_DOUBLE_EQ(default_p(3), 2.9);
}

TEST(LambdaMinSAS, Examples) {
  EXPECT_NEAR(bound_lambda_min_SAS(inputs(generate_uniform(1, 4), 1), 0.0), 1.0 / 6.0, 1e-15);
  for (int d = 2; d <= 3; ++d) {
    const double a = bound_lambda_min_SAS(inputs(generate_boundary_layer(d, 5, 1.0), d), 2.9);
    const double b = bound_lambda_min_SAS(inputs(generate_uniform(d, 6), d), 2.9);
    EXPECT_NEAR(a, b, 1e-10 * b) << d;
  }
}

TEST(LambdaMinSAS, UniformScaling) {
  for (int d = 1; d <= 3; ++d) {
    const std::vector<int> sizes = d == 3 ? std::vector<int>{4, 8} : d == 2 ? std::vector<int>{16, 32} : std::vector<int>{512, 1024};
    std::vector<double> n, v;
    for (int k : sizes) {
      const auto m = generate_uniform(d, k);
      n.push_back(static_cast<double>(m.num_elements()));
      v.push_back(bound_lambda_min_SAS(inputs(m, d), 2.9));
    }
    const double slope = std::log(v[1] / v[0]) / std::log(n[1] / n[0]);
    // The boundary distance sum adds a slowly varying correction.
    EXPECT_NEAR(slope, -2.0 / d, d == 1 ? 0.01 : 0.15) << d;
  }
}

TEST(LambdaMax, Examples) {
  const auto a = assemble_stiffness(generate_uniform(1, 4), DiffusionField::identity(1));
  const auto [lo, hi] = bound_lambda_max(a, 1);
  EXPECT_EQ(lo, 8.0);
  EXPECT_EQ(hi, 16.0);
  Eigen::SparseMatrix<double> one(1, 1);
  one.insert(0, 0) = 4.0;
  EXPECT_EQ(bound_lambda_max(SparseSymmetric(one), 1), std::make_pair(4.0, 8.0));
  Eigen::SparseMatrix<double> tripled = a.matrix() * 3.0;
  const auto [lo3, hi3] = bound_lambda_max(SparseSymmetric(tripled), 1);
  EXPECT_EQ(lo3, 3 * lo);
  EXPECT_EQ(hi3, 3 * hi);
}

TEST(Kappa, OneDimensionalSpecialization) {
  std::mt19937_64 rng(41);
  std::vector<SimplicialMesh> meshes{generate_chebyshev_1d(37), generate_power2_1d(12), generate_uniform(1, 9)};
  for (int i = 0; i < 5; ++i) meshes.push_back(random_graded_1d(20 + i, rng));
  for (const auto& m : meshes) {
    const auto in = inputs(m, 1);
    const double n = static_cast<double>(m.num_elements());
    double sum_d = 0.0, sum_d_over = 0.0, sum_inv = 0.0;
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
      sum_d += in.d_k[k];
      sum_d_over += in.d_k[k] / in.volume[k];
      sum_inv += 1.0 / in.volume[k];
    }
    double patch_inv = 0.0;
    for (const auto& patch : in.patches) {
      double s = 0.0;
      for (int k : patch) s += 1.0 / in.volume[static_cast<std::size_t>(k)];
      patch_inv = std::max(patch_inv, s);
    }
    const auto fresh = bound_kappa(in, 0.0);
    const auto prior = bound_kappa_prior(in);
    EXPECT_NEAR(fresh.a, sum_d * patch_inv, 1e-12 * fresh.a);
    EXPECT_NEAR(fresh.sas, sum_d_over, 1e-12 * fresh.sas);
    EXPECT_NEAR(prior.a, n * patch_inv, 1e-12 * prior.a);
    EXPECT_NEAR(prior.sas, sum_inv, 1e-12 * prior.sas);
  }
}

TEST(Kappa, Uniform1DExample) {
  const auto in = inputs(generate_uniform(1, 4), 1);
  const auto k = bound_kappa(in, 0.0);
  EXPECT_NEAR(k.a, 12.0, 1e-12);
  EXPECT_NEAR(k.sas, 6.0, 1e-12);
  const auto p = bound_kappa_prior(in);
  EXPECT_NEAR(p.a, 32.0, 1e-12);
  EXPECT_NEAR(p.sas, 16.0, 1e-12);
}

TEST(Kappa, Power2Orders) {
  // New kappa(SAS) grows like N, the prior one like 2^N.
  const auto a = inputs(generate_power2_1d(20), 1), b = inputs(generate_power2_1d(21), 1);
  EXPECT_NEAR(bound_kappa(b, 0.0).sas / bound_kappa(a, 0.0).sas, 21.0 / 20.0, 0.05);
  EXPECT_NEAR(bound_kappa_prior(b).sas / bound_kappa_prior(a).sas, 2.0, 0.01);
  EXPECT_NEAR(bound_kappa(b, 0.0).a / bound_kappa(a, 0.0).a, 2.0, 0.05);
}

TEST(Kappa, DistanceMonotonicity) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 3;
    const auto m = fixtures::random_mesh(d, d == 3 ? 3 : 7, rng);
    const auto field = DiffusionField::constant(fixtures::random_spd(d, 100.0, rng));
    const auto in = BoundInputs::from(m, field);
    const auto orig = bound_kappa(in, 2.9);
    const auto wide = bound_kappa(in.with_distance(in.h_domain), 2.9);
    EXPECT_GE(wide.a, orig.a);
    EXPECT_GE(wide.sas, orig.sas);
  }
}

TEST(Prior, UniformComparableToNew) {
  for (int d = 1; d <= 2; ++d) {
    std::vector<double> ratio;
    for (int k : {4, 8, 16, 32}) {
      const auto in = inputs(generate_uniform(d, k), d);
      ratio.push_back(bound_kappa_prior(in).sas / bound_kappa(in, 0.0).sas);
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    EXPECT_LT(*hi / *lo, 2.0) << d;
  }
}

TEST(Fried, Examples) {
  const auto in = inputs(generate_uniform(2, 4), 2);
  EXPECT_DOUBLE_EQ(bound_lambda_min_fried(in), 1.0 / 32);
  EXPECT_DOUBLE_EQ(bound_lambda_min_fried(inputs(generate_uniform(3, 2), 3)), 1.0 / 48);
  EXPECT_DOUBLE_EQ(bound_lambda_min_fried(inputs(generate_power2_1d(10), 1)), 0.1);
}

TEST(Fried, NewBoundSharperIn1D) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = trial % 10 == 0 ? generate_power2_1d(4 + trial / 10) : random_graded_1d(4 + trial % 40, rng);
    const auto in = inputs(m, 1);
    EXPECT_GE(bound_lambda_min_A(in, 0.0), bound_lambda_min_fried(in)) << trial;
  }
}

TEST(Fried, TwoDimensionalOrdering) {
  // On uniform 2D meshes the Fried form has no log factor and exceeds the new
  // bound; on strongly graded boundary-layer meshes the new bound is larger.
  const auto uni = inputs(generate_uniform(2, 16), 2);
  EXPECT_LT(bound_lambda_min_A(uni, 0.0), bound_lambda_min_fried(uni));
  for (double aspect : {10.0, 100.0, 1000.0, 10000.0}) {
    const auto in = inputs(generate_boundary_layer(2, 16, aspect), 2);
    EXPECT_GT(bound_lambda_min_A(in, 0.0), bound_lambda_min_fried(in)) << aspect;
  }
}

TEST(Conjectured, Examples) {
  EXPECT_THROW(bound_kappa_sas_conjectured(inputs(generate_uniform(1, 4), 1)), std::invalid_argument);
  EXPECT_THROW(bound_kappa_sas_conjectured(inputs(generate_uniform(3, 2), 3)), std::invalid_argument);
  const auto in = inputs(generate_uniform(2, 8), 2);
  EXPECT_EQ(bound_kappa_sas_conjectured(in.with_distance(0.0)), 0.0);
  EXPECT_GT(bound_kappa_sas_conjectured(in), 0.0);
}

TEST(Conjectured, AspectGrowthAtMostLinear) {
  // Layer elements contribute |K| beta_K ~ aspect each, with d_K / |K| fixed.
  std::vector<double> v;
  for (double aspect : {5.0, 25.0, 125.0}) v.push_back(bound_kappa_sas_conjectured(inputs(generate_boundary_layer(2, 20, aspect), 2)));
  for (std::size_t i = 1; i < v.size(); ++i) {
    EXPECT_GT(v[i], v[i - 1]);
    EXPECT_LT(v[i] / v[i - 1], 5.0);
  }
}

TEST(Report, UniformOneDimensional) {
  const auto r = report(generate_uniform(1, 4));
  EXPECT_EQ(r.entries.size(), bound_ids().size() - 1);
  EXPECT_NEAR(r.at("new.lambda_min.A").raw, 1.0 / 1.5, 1e-15);
  EXPECT_NEAR(r.at("new.lambda_min.SAS").raw, 1.0 / 6.0, 1e-15);
  EXPECT_EQ(r.at("lambda_max.A.lower").raw, 8.0);
  EXPECT_EQ(r.at("lambda_max.A.upper").raw, 16.0);
  EXPECT_TRUE(r.at("lambda_max.A.lower").holds());
  EXPECT_TRUE(r.at("lambda_max.A.upper").holds());
  EXPECT_TRUE(r.at("lambda_max.A.upper").constant_free);
  EXPECT_EQ(r.find("conjectured.kappa.SAS"), nullptr);
  EXPECT_TRUE(std::isnan(r.p));
  EXPECT_THROW(r.at("nope"), std::out_of_range);
}

TEST(Report, CsvAndJson) {
  const auto r = report(generate_uniform(2, 4));
  const auto header = BoundReport::csv_header();
  const auto row = r.csv_row();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row, report(generate_uniform(2, 4)).csv_row());
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("dim").get<int>(), 2);
  EXPECT_NEAR(j.at("exact").at("A").at("kappa").get<double>(), r.exact.a.kappa, 1e-12 * r.exact.a.kappa);
}

TEST(Report, DomainVolumeNote) {
  const auto r = report(fixtures::scaled(generate_uniform(2, 4), 2.0));
  EXPECT_FALSE(r.notes.empty());
  EXPECT_TRUE(report(generate_uniform(2, 4)).notes.empty());
}

TEST(Calibration, EqualToExactGivesOne) {
  auto r = report(generate_uniform(1, 4));
  for (auto& e : r.entries) e.raw = e.exact;
  const auto cal = calibrate(std::span<const BoundReport>(&r, 1));
  for (const auto& e : r.entries)
    if (!e.constant_free) EXPECT_EQ(cal.find(1, e.id).value(), 1.0) << e.id;
}

TEST(Calibration, OrderInvariantAndValid) {
  std::vector<BoundReport> series;
  for (int n : {8, 16, 32, 64}) series.push_back(report(generate_uniform(1, n)));
  const auto cal = calibrate(series);
  std::vector<BoundReport> reversed(series.rbegin(), series.rend());
  EXPECT_EQ(calibrate(reversed).to_json(), cal.to_json());
  const double c = cal.find(1, "new.lambda_min.SAS").value();
  bool attained = false;
  for (auto& r : series) {
    r.apply(cal);
    for (const auto& e : r.entries) EXPECT_TRUE(e.holds()) << e.id;
    const auto& e = r.at("new.lambda_min.SAS");
    attained = attained || e.exact / e.raw == c;
  }
  EXPECT_TRUE(attained);
}

TEST(Calibration, JsonRoundTrip) {
  std::vector<BoundReport> series;
  for (int n : {2, 3, 4}) series.push_back(report(generate_uniform(2, n)));
  const auto cal = calibrate(series);
  const auto back = Calibration::from_json(cal.to_json());
  EXPECT_EQ(back.constants, cal.constants);
  EXPECT_THROW(Calibration::from_json("{\"version\": 1"), FormatError);
  EXPECT_THROW(calibrate(std::span<const BoundReport>{}), std::invalid_argument);
  std::vector<BoundReport> mixed{report(generate_uniform(1, 4)), report(generate_uniform(2, 3))};
  EXPECT_THROW(calibrate(mixed), std::invalid_argument);
}

TEST(P, Validation) {
  EXPECT_THROW(check_p(3, 1.0), std::invalid_argument);
  EXPECT_THROW(check_p(3, 3.5), std::invalid_argument);
  EXPECT_NO_THROW(check_p(3, 2.0));
  EXPECT_NO_THROW(check_p(2, 0.0));
}

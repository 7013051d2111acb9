#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "fecond/assembly.hpp"
#include "fecond/error.hpp"
#include "fecond/generators.hpp"
#include "fecond/geometry.hpp"
#include "fecond/mesh.hpp"
#include "fecond/mesh_io.hpp"
#include "support.hpp"

using namespace fecond;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fecond_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::vector<double> nodes_1d(const SimplicialMesh& m) {
  std::vector<double> x;
  for (const auto& p : m.vertices()) x.push_back(p[0]);
  std::sort(x.begin(), x.end());
  return x;
}

SimplicialMesh two_triangle_square() {
  return SimplicialMesh::build(2, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2, -1}, {0, 2, 3, -1}});
}

}  // namespace

TEST(Uniform, OneDimensionalTwoCells) {
  const auto m = generate_uniform(1, 2);
  EXPECT_EQ(nodes_1d(m), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(m.num_interior(), 1u);
}

TEST(Uniform, SquareCounts) {
  const auto m = generate_uniform(2, 2);
  EXPECT_EQ(m.num_vertices(), 9u);
  EXPECT_EQ(m.num_elements(), 8u);
  EXPECT_EQ(m.num_interior(), 1u);
}

TEST(Uniform, CubeCounts) {
  const auto m = generate_uniform(3, 2);
  EXPECT_EQ(m.num_vertices(), 27u);
  EXPECT_EQ(m.num_elements(), 48u);
  EXPECT_EQ(m.num_interior(), 1u);
}

TEST(Uniform, RejectsBadDimension) {
  EXPECT_THROW(generate_uniform(4, 2), std::invalid_argument);
  EXPECT_THROW(generate_uniform(0, 2), std::invalid_argument);
}

TEST(Uniform, VolumesSumToDomain) {
  for (int d = 1; d <= 3; ++d) {
    const auto m = generate_uniform(d, 5);
    const auto g = compute_metrics(m);
    EXPECT_NEAR(g.metrics.total_volume, 1.0, 1e-12) << d;
    for (std::size_t k = 0; k < m.num_elements(); ++k) EXPECT_GT(element_volume(m, k), 0.0);
  }
}

TEST(Uniform, ReflectionKeepsMetrics) {
  for (int d = 1; d <= 3; ++d) {
    const auto m = generate_uniform(d, 4);
    std::vector<Point> pts = m.vertices();
    for (auto& p : pts) p[0] = 1.0 - p[0];
    const auto r = SimplicialMesh::build(d, pts, m.elements());
    const auto a = compute_metrics(m).metrics;
    const auto b = compute_metrics(r).metrics;
    EXPECT_NEAR(a.k_avg_volume, b.k_avg_volume, 1e-15);
    EXPECT_NEAR(a.k_min_volume, b.k_min_volume, 1e-15);
    EXPECT_EQ(a.p_min, b.p_min);
  }
}

TEST(Chebyshev, FourElements) {
  const auto x = nodes_1d(generate_chebyshev_1d(4));
  ASSERT_EQ(x.size(), 5u);
  EXPECT_NEAR(x[1], 0.066987298107780646, 1e-15);
  EXPECT_NEAR(x[2], 0.5, 1e-15);
  EXPECT_NEAR(x[3], 0.93301270189221941, 1e-15);
}

TEST(Chebyshev, TwoElements) {
  const auto x = nodes_1d(generate_chebyshev_1d(2));
  EXPECT_NEAR(x[1], 0.5, 1e-16);
}

TEST(Chebyshev, StrictlyIncreasing) {
  const auto m = generate_chebyshev_1d(8);
  const auto x = nodes_1d(m);
  for (std::size_t i = 1; i < x.size(); ++i) EXPECT_LT(x[i - 1], x[i]);
  EXPECT_EQ(x.front(), 0.0);
  EXPECT_EQ(x.back(), 1.0);
  EXPECT_THROW(generate_chebyshev_1d(1), std::invalid_argument);
}

TEST(Power2, Nodes) {
  EXPECT_EQ(nodes_1d(generate_power2_1d(4)), (std::vector<double>{0.0, 0.125, 0.25, 0.5, 1.0}));
  EXPECT_EQ(nodes_1d(generate_power2_1d(2)), (std::vector<double>{0.0, 0.5, 1.0}));
  const auto g = compute_metrics(generate_power2_1d(10));
  EXPECT_DOUBLE_EQ(g.metrics.k_min_volume, std::ldexp(1.0, -9));
  EXPECT_THROW(generate_power2_1d(1), std::invalid_argument);
  EXPECT_THROW(generate_power2_1d(53), std::invalid_argument);
}

TEST(BoundaryLayer, AspectOneIsUniform) {
  for (int d = 2; d <= 3; ++d) {
    const auto bl = generate_boundary_layer(d, 5, 1.0);
    const auto u = generate_uniform(d, 6);
    ASSERT_EQ(bl.num_elements(), u.num_elements());
    ASSERT_EQ(bl.num_vertices(), u.num_vertices());
    for (std::size_t v = 0; v < u.num_vertices(); ++v)
      for (int c = 0; c < d; ++c) EXPECT_NEAR(bl.vertex(v)[c], u.vertex(v)[c], 1e-15);
  }
}

TEST(BoundaryLayer, SquareAspect125) {
  const int n = 20;
  const double aspect = 125.0;
  const auto m = generate_boundary_layer(2, n, aspect);
  const auto g = compute_metrics(m);
  EXPECT_GE(g.metrics.max_aspect_ratio, aspect);
  EXPECT_LE(g.metrics.max_aspect_ratio, 2 * aspect);
  int thin = 0;
  for (std::size_t k = 0; k < m.num_elements(); ++k) thin += element_aspect_ratio(m, k) >= aspect / 2 ? 1 : 0;
  EXPECT_GE(thin, 4 * (n - 1));
  EXPECT_LE(thin, 8 * (n - 1));
  EXPECT_NEAR(g.metrics.total_volume, 1.0, 1e-12);
}

TEST(BoundaryLayer, CubeAspect25) {
  const auto m = generate_boundary_layer(3, 8, 25.0);
  const auto g = compute_metrics(m);
  EXPECT_GE(g.metrics.max_aspect_ratio, 25.0);
  EXPECT_LE(g.metrics.max_aspect_ratio, 50.0);
  EXPECT_NEAR(g.metrics.total_volume, 1.0, 1e-12);
}

TEST(BoundaryLayer, RejectsBadParameters) {
  EXPECT_THROW(generate_boundary_layer(2, 10, 0.5), std::invalid_argument);
  EXPECT_THROW(generate_boundary_layer(2, 1, 5.0), std::invalid_argument);
  EXPECT_THROW(generate_boundary_layer(1, 10, 5.0), std::invalid_argument);
}

TEST(BoundaryLayer, LargeElementCounts) {
  EXPECT_EQ(generate_boundary_layer(2, 99, 5.0).num_elements(), 20000u);
  EXPECT_EQ(generate_boundary_layer(3, 16, 5.0).num_elements(), 29478u);
}

TEST(Build, FacetClassification) {
  for (int d = 1; d <= 3; ++d) {
    const auto m = generate_uniform(d, 3);
    // Count element facets by sorted vertex set and compare with the
    // boundary classification.
    std::map<std::vector<int>, int> count;
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
      const auto ids = m.element(k);
      for (std::size_t skip = 0; skip < ids.size(); ++skip) {
        std::vector<int> f;
        for (std::size_t i = 0; i < ids.size(); ++i)
          if (i != skip) f.push_back(ids[i]);
        std::sort(f.begin(), f.end());
        ++count[f];
      }
    }
    std::size_t boundary = 0;
    for (const auto& [f, c] : count) {
      EXPECT_LE(c, 2);
      boundary += c == 1 ? 1 : 0;
    }
    EXPECT_EQ(boundary, m.boundary_facets().size()) << d;
  }
}

TEST(Build, InteriorIndexIsBijection) {
  const auto m = generate_uniform(2, 5);
  std::vector<int> seen(m.num_interior(), 0);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const int r = m.interior_index(v);
    EXPECT_EQ(r < 0, m.is_boundary(v));
    if (r >= 0) ++seen[static_cast<std::size_t>(r)];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Build, NormalizesOrientation) {
  const auto m = SimplicialMesh::build(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 2, 1, -1}});
  EXPECT_NEAR(element_volume(m, 0), 0.5, 1e-15);
}

TEST(Build, RejectsZeroVolume) {
  EXPECT_THROW(SimplicialMesh::build(2, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2, -1}}), MeshError);
}

TEST(Build, RejectsDuplicatedElement) {
  try {
    SimplicialMesh::build(2, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2, -1}, {0, 2, 3, -1}, {0, 1, 2, -1}});
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_NE(std::string(e.what()).find("facet"), std::string::npos);
  }
}

TEST(Build, RejectsOpenBoundaryAndStrayVertices) {
  EXPECT_THROW(SimplicialMesh::build(1, {{0, 0, 0}, {1, 0, 0}, {5, 0, 0}}, {{0, 1, -1, -1}}), MeshError);
  EXPECT_THROW(SimplicialMesh::build(2, {{0, 0, 0}, {1, 0, 0}}, {{0, 1, 7, -1}}), MeshError);
}

TEST(Build, SmallestSquare) {
  const auto m = two_triangle_square();
  EXPECT_EQ(m.num_vertices(), 4u);
  EXPECT_EQ(m.num_elements(), 2u);
  EXPECT_EQ(m.num_interior(), 0u);
}

TEST(Distance, Examples) {
  EXPECT_NEAR(distance_to_boundary(generate_uniform(2, 4), {0.3, 0.4, 0}), 0.3, 1e-15);
  EXPECT_NEAR(distance_to_boundary(generate_uniform(1, 4), {0.5, 0, 0}), 0.5, 1e-15);
  EXPECT_NEAR(distance_to_boundary(generate_uniform(3, 3), {0.5, 0.5, 0.5}), 0.5, 1e-15);
}

TEST(Distance, OutsideThrows) {
  EXPECT_THROW(distance_to_boundary(generate_uniform(2, 4), {1.5, 0.5, 0}), DomainError);
  EXPECT_THROW(distance_to_boundary(generate_uniform(1, 4), {-0.1, 0, 0}), DomainError);
}

TEST(Distance, MatchesBoxFormula) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto m = fixtures::random_mesh(3, 4, rng);
  for (int i = 0; i < 200; ++i) {
    const Point p{u(rng), u(rng), u(rng)};
    const double expect = std::min({p[0], p[1], p[2], 1 - p[0], 1 - p[1], 1 - p[2]});
    EXPECT_NEAR(distance_to_boundary(m, p), expect, 1e-14);
  }
}

TEST(Distance, Lipschitz) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto m = fixtures::random_mesh(2, 6, rng);
  for (int i = 0; i < 1000; ++i) {
    const Point a{u(rng), u(rng), 0}, b{u(rng), u(rng), 0};
    const double gap = std::hypot(a[0] - b[0], a[1] - b[1]);
    EXPECT_LE(std::abs(distance_to_boundary(m, a) - distance_to_boundary(m, b)), gap + 1e-15);
  }
}

TEST(ElementDistance, Examples) {
  const auto m = generate_uniform(1, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const double lo = std::min(m.vertex(m.element(k)[0])[0], m.vertex(m.element(k)[1])[0]);
    if (lo == 0.0) EXPECT_NEAR(element_d_k(m, k), 0.25, 1e-15);
  }
  EXPECT_NEAR(element_d_k(generate_uniform(1, 1), 0), 0.5, 1e-15);
  EXPECT_THROW(element_d_k(m, 4), std::out_of_range);
}

TEST(ElementDistance, ThinLayerElement) {
  const double aspect = 50.0;
  const auto m = generate_boundary_layer(2, 10, aspect);
  const double thickness = boundary_layer_axis(10, aspect)[1];
  int seen = 0;
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    const auto ids = m.element(k);
    Point c{};
    for (int v : ids)
      for (int r = 0; r < 2; ++r) c[r] += m.vertex(v)[r] / 3;
    if (c[1] > thickness || c[0] < 0.3 || c[0] > 0.7) continue;
    double best = 0.0;
    for (int i = 0; i <= 60; ++i)
      for (int j = 0; i + j <= 60; ++j) {
        const double a = i / 60.0, b = j / 60.0, w = 1 - a - b;
        Point p{};
        for (int r = 0; r < 2; ++r)
          p[r] = a * m.vertex(ids[0])[r] + b * m.vertex(ids[1])[r] + w * m.vertex(ids[2])[r];
        best = std::max(best, m.boundary_distance(p));
      }
    EXPECT_NEAR(element_d_k(m, k), best, 1e-14);
    EXPECT_NEAR(element_d_k(m, k), thickness, 1e-14);
    ++seen;
  }
  EXPECT_GT(seen, 0);
}

TEST(ElementDistance, Sandwich) {
  std::mt19937_64 rng(3);
  for (int d = 1; d <= 3; ++d) {
    const auto m = fixtures::random_mesh(d, d == 3 ? 3 : 6, rng);
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
      const double dk = element_d_k(m, k);
      const double diam = element_diameter(m, k);
      for (int v : m.element(k)) {
        const double dv = m.boundary_distance(m.vertex(v));
        EXPECT_GE(dk, dv - 1e-15);
        EXPECT_LE(dk, dv + diam + 1e-15);
      }
    }
  }
}

TEST(Geometry, JacobianDeterminantIsVolume) {
  std::mt19937_64 rng(5);
  for (int d = 1; d <= 3; ++d) {
    const auto m = fixtures::random_mesh(d, 3, rng);
    for (std::size_t k = 0; k < m.num_elements(); ++k)
      EXPECT_NEAR(std::abs(element_jacobian(m, k).determinant()), element_volume(m, k), 1e-14);
  }
}

TEST(Geometry, MetricsExamples) {
  const auto u = compute_metrics(generate_uniform(1, 4)).metrics;
  EXPECT_DOUBLE_EQ(u.k_avg_volume, 0.25);
  EXPECT_DOUBLE_EQ(u.k_min_volume, 0.25);
  EXPECT_EQ(u.p_min, 2);
  const auto p = compute_metrics(generate_power2_1d(4)).metrics;
  EXPECT_DOUBLE_EQ(p.k_min_volume, 0.125);
  EXPECT_DOUBLE_EQ(p.k_avg_volume, 0.25);
  const auto c = compute_metrics(generate_chebyshev_1d(4)).metrics;
  EXPECT_NEAR(c.k_min_volume, 0.066987298107780646, 1e-15);
  EXPECT_FALSE(c.sigma_h.has_value());
}

TEST(Geometry, PatchVolumesAndDiameter) {
  const auto m = generate_uniform(2, 4);
  const auto g = compute_metrics(m);
  for (std::size_t j = 0; j < m.num_interior(); ++j) {
    EXPECT_NEAR(g.metrics.patch_volumes[j], 6 * (1.0 / 32), 1e-15);
    EXPECT_EQ(g.metrics.patch_counts[j], 6);
  }
  EXPECT_NEAR(g.metrics.h_domain, std::sqrt(2.0), 1e-15);
  for (const auto& e : g.elements) {
    EXPECT_GE(e.d_k, 0.0);
    EXPECT_LE(e.d_k, g.metrics.h_domain);
  }
}

TEST(Geometry, SigmaWithField) {
  Eigen::Matrix2d d;
  d << 4, 0, 0, 1;
  const auto g = compute_metrics(generate_uniform(2, 3), DiffusionField::constant(d));
  ASSERT_TRUE(g.metrics.sigma_h.has_value());
  EXPECT_NEAR(*g.metrics.sigma_h, 0.5, 1e-14);
}

TEST(MeshIo, NativeJsonRoundTripIsExact) {
  std::mt19937_64 rng(9);
  for (int d = 1; d <= 3; ++d) {
    const auto m = fixtures::random_mesh(d, 3, rng);
    const auto path = temp_path("round" + std::to_string(d) + ".json");
    export_mesh(m, path, MeshFormat::native_json);
    const auto r = import_mesh(path, MeshFormat::native_json);
    EXPECT_EQ(r.vertices(), m.vertices());
    EXPECT_EQ(r.elements(), m.elements());
  }
}

TEST(MeshIo, TriangleRoundTripMatchesGenerator) {
  const auto m = generate_uniform(2, 2);
  const auto stem = temp_path("square8");
  export_mesh(m, stem, MeshFormat::triangle_node_ele);
  const auto r = import_mesh(stem.string() + ".ele", MeshFormat::triangle_node_ele);
  const auto a = compute_metrics(m).metrics;
  const auto b = compute_metrics(r).metrics;
  EXPECT_EQ(r.num_elements(), 8u);
  EXPECT_EQ(r.num_interior(), 1u);
  EXPECT_DOUBLE_EQ(a.k_min_volume, b.k_min_volume);
  EXPECT_EQ(a.p_min, b.p_min);
  EXPECT_DOUBLE_EQ(a.h_domain, b.h_domain);
}

TEST(MeshIo, TriangleZeroBasedWithComments) {
  const auto stem = temp_path("zero_based");
  write(stem.string() + ".node",
        "# unit square\n4 2 1 1\n0 0 0 7.5 1\n1 1 0 7.5 1\n2 1 1 7.5 1  # corner\n3 0 1 7.5 1\n");
  write(stem.string() + ".ele", "2 3 0\n0 0 1 2\n1 0 2 3\n");
  const auto m = import_mesh(stem.string() + ".node", MeshFormat::triangle_node_ele);
  EXPECT_EQ(m.num_vertices(), 4u);
  EXPECT_EQ(m.num_elements(), 2u);
  EXPECT_EQ(m.num_interior(), 0u);
}

TEST(MeshIo, TriangleErrorsCarryLineNumbers) {
  const auto stem = temp_path("bad_node");
  write(stem.string() + ".node", "3 2 0 0\n1 0 0\n2 1 zero\n3 0 1\n");
  write(stem.string() + ".ele", "1 3 0\n1 1 2 3\n");
  try {
    import_mesh(stem, MeshFormat::triangle_node_ele);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  write(stem.string() + ".node", "3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n");
  write(stem.string() + ".ele", "1 3 0\n\n1 1 2 9\n");
  try {
    import_mesh(stem, MeshFormat::triangle_node_ele);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(MeshIo, JsonErrors) {
  std::istringstream bad("{\n  \"version\": 1,\n  \"dim\": 2,\n  \"vertices\": [[0, 0], [1, 0]],, \n}");
  try {
    read_native_json(bad);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  std::istringstream wrong_version(R"({"version": 2, "dim": 1, "vertices": [[0],[1]], "elements": [[0,1]]})");
  EXPECT_THROW(read_native_json(wrong_version), FormatError);
  std::istringstream dup(R"({"version": 1, "dim": 1, "vertices": [[0],[1]], "elements": [[0,1],[1,0]]})");
  EXPECT_THROW(read_native_json(dup), MeshError);
}

TEST(MeshIo, FormatNames) {
  EXPECT_EQ(parse_mesh_format("json"), MeshFormat::native_json);
  EXPECT_EQ(parse_mesh_format("triangle"), MeshFormat::triangle_node_ele);
  EXPECT_THROW(parse_mesh_format("vtk"), std::invalid_argument);
}

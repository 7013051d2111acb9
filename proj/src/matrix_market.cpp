#include "fecond/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "fecond/error.hpp"

namespace fecond {

void write_matrix_market(const SparseSymmetric& a, std::ostream& out) {
  const auto& m = a.matrix();
  std::size_t lower = 0;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseSymmetric::Storage::InnerIterator it(m, c); it; ++it)
      if (it.row() >= it.col()) ++lower;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << fmt::format("{} {} {}\n", a.order(), a.order(), lower);
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseSymmetric::Storage::InnerIterator it(m, c); it; ++it)
      if (it.row() >= it.col()) out << fmt::format("{} {} {:.17g}\n", it.row() + 1, it.col() + 1, it.value());
}

void write_matrix_market(const SparseSymmetric& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  write_matrix_market(a, out);
}

SparseSymmetric read_matrix_market(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError(name, 1, "empty file");
  ++line_no;
  std::string lowered = line;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char ch) { return std::tolower(ch); });
  std::istringstream hs(lowered);
  std::string banner, object, layout, field, symmetry;
  hs >> banner >> object >> layout >> field >> symmetry;
  if (banner != "%%matrixmarket" || object != "matrix" || layout != "coordinate")
    throw FormatError(name, line_no, "expected '%%MatrixMarket matrix coordinate ...' header");
  if (field != "real" && field != "double" && field != "integer")
    throw FormatError(name, line_no, fmt::format("unsupported field type '{}'", field));
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw FormatError(name, line_no, fmt::format("unsupported symmetry '{}'", symmetry));

  long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows < 1 || cols != rows || nnz < 0)
      throw FormatError(name, line_no, "expected '<rows> <cols> <entries>' of a square matrix");
    break;
  }
  if (rows < 0) throw FormatError(name, line_no, "missing size line");

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(nnz) * (symmetric ? 2 : 1));
  long seen = 0;
  while (seen < nnz && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    long i = 0, j = 0;
    double v = 0.0;
    if (!(ss >> i >> j >> v)) throw FormatError(name, line_no, "expected '<row> <col> <value>'");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw FormatError(name, line_no, fmt::format("index ({}, {}) out of range", i, j));
    if (symmetric && j > i) throw FormatError(name, line_no, "symmetric file has an entry above the diagonal");
    t.emplace_back(i - 1, j - 1, v);
    if (symmetric && i != j) t.emplace_back(j - 1, i - 1, v);
    ++seen;
  }
  if (seen < nnz) throw FormatError(name, line_no, fmt::format("expected {} entries, found {}", nnz, seen));

  SparseSymmetric::Storage m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  try {
    return SparseSymmetric(std::move(m));
  } catch (const std::invalid_argument& e) {
    throw FormatError(name, e.what());
  }
}

SparseSymmetric read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  return read_matrix_market(in, path.string());
}

}  // namespace fecond

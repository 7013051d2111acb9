#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fecond/assembly.hpp"

namespace fecond {

/// Writes `%%MatrixMarket matrix coordinate real symmetric`: lower triangle,
/// 1-based indices, 17 significant digits.
void write_matrix_market(const SparseSymmetric& a, std::ostream& out);
void write_matrix_market(const SparseSymmetric& a, const std::filesystem::path& path);

/// Reads a real symmetric or general coordinate file. General files must be
/// exactly symmetric. Throws FormatError with the offending line.
SparseSymmetric read_matrix_market(std::istream& in, const std::string& name = "<stream>");
SparseSymmetric read_matrix_market(const std::filesystem::path& path);

}  // namespace fecond

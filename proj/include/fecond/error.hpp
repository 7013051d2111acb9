#pragma once

#include <stdexcept>
#include <string>

namespace fecond {

/// Invalid mesh data: degenerate elements, non-conforming facets, open boundary.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed mesh or matrix file. The message carries the file and line number.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  /// Structural error not tied to a particular line.
  FormatError(const std::string& file, const std::string& what)
      : std::runtime_error(file + ": " + what), line_(0) {}

  /// 1-based line number, or 0 when unknown.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A query point outside the meshed domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Factorization failure or an eigen solve that did not reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fecond

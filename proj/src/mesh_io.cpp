#include "fecond/mesh_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "fecond/error.hpp"

namespace fecond {

namespace {

using nlohmann::json;

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SimplicialMesh parse_native_json(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(name, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  try {
    if (!doc.is_object()) throw FormatError(name, "top level must be an object");
    if (!doc.contains("version") || doc.at("version").get<int>() != 1)
      throw FormatError(name, "unsupported or missing \"version\" (expected 1)");
    const int dim = doc.at("dim").get<int>();
    if (dim < 1 || dim > 3) throw FormatError(name, fmt::format("\"dim\" must be 1, 2 or 3, got {}", dim));

    std::vector<Point> vertices;
    for (const auto& row : doc.at("vertices")) {
      if (!row.is_array() || row.size() != static_cast<std::size_t>(dim))
        throw FormatError(name, fmt::format("vertex {} must have {} coordinates", vertices.size(), dim));
      Point p{0.0, 0.0, 0.0};
      for (int c = 0; c < dim; ++c) p[c] = row[static_cast<std::size_t>(c)].get<double>();
      vertices.push_back(p);
    }
    std::vector<Cell> elements;
    for (const auto& row : doc.at("elements")) {
      if (!row.is_array() || row.size() != static_cast<std::size_t>(dim + 1))
        throw FormatError(name, fmt::format("element {} must have {} vertex ids", elements.size(), dim + 1));
      Cell c{-1, -1, -1, -1};
      for (int i = 0; i <= dim; ++i) c[i] = row[static_cast<std::size_t>(i)].get<int>();
      elements.push_back(c);
    }
    return SimplicialMesh::build(dim, std::move(vertices), std::move(elements));
  } catch (const json::exception& e) {
    throw FormatError(name, e.what());
  }
}

// Line-oriented reader for the Triangle/TetGen formats: skips blank lines
// and '#' comments, tracks the physical line number.
class TokenLines {
 public:
  TokenLines(const std::string& text, std::string name) : in_(text), name_(std::move(name)) {}

  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      tokens.clear();
      for (std::string t; ls >> t;) tokens.push_back(t);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(name_, line_no_, what); }

  template <class T>
  T number(const std::string& token) const {
    T value{};
    std::istringstream ts(token);
    ts >> value;
    if (!ts || !ts.eof()) fail(fmt::format("expected a number, got '{}'", token));
    return value;
  }

  void expect(bool ok, const std::string& what) const {
    if (!ok) fail(what);
  }

 private:
  std::istringstream in_;
  std::string name_;
  std::size_t line_no_ = 0;
};

std::filesystem::path with_ext(std::filesystem::path p, const char* ext) {
  const auto e = p.extension();
  if (e == ".node" || e == ".ele") p.replace_extension();
  p += ext;
  return p;
}

SimplicialMesh read_node_ele(const std::filesystem::path& path) {
  const auto node_path = with_ext(path, ".node");
  const auto ele_path = with_ext(path, ".ele");
  std::vector<std::string> tok;

  TokenLines nodes(read_file(node_path), node_path.string());
  nodes.expect(nodes.next(tok), "missing .node header");
  nodes.expect(tok.size() >= 2, "header must be '<count> <dim> <attributes> <boundary markers>'");
  const long count = nodes.number<long>(tok[0]);
  const int dim = nodes.number<int>(tok[1]);
  const int nattr = tok.size() > 2 ? nodes.number<int>(tok[2]) : 0;
  const int nmark = tok.size() > 3 ? nodes.number<int>(tok[3]) : 0;
  nodes.expect(count >= 1, "vertex count must be positive");
  nodes.expect(dim >= 1 && dim <= 3, fmt::format("dimension must be 1, 2 or 3, got {}", dim));
  nodes.expect(nattr >= 0 && (nmark == 0 || nmark == 1), "bad attribute or boundary marker count");

  std::vector<Point> vertices(static_cast<std::size_t>(count));
  std::vector<char> seen(static_cast<std::size_t>(count), 0);
  long base = -1;
  for (long i = 0; i < count; ++i) {
    nodes.expect(nodes.next(tok), fmt::format("expected {} vertices, file ended after {}", count, i));
    const std::size_t want = 1 + static_cast<std::size_t>(dim + nattr);
    nodes.expect(tok.size() == want || tok.size() == want + static_cast<std::size_t>(nmark),
                 fmt::format("vertex row must have {} fields", want + static_cast<std::size_t>(nmark)));
    const long id = nodes.number<long>(tok[0]);
    if (base < 0) {
      nodes.expect(id == 0 || id == 1, "first vertex id must be 0 or 1");
      base = id;
    }
    const long idx = id - base;
    nodes.expect(idx >= 0 && idx < count && !seen[static_cast<std::size_t>(idx)],
                 fmt::format("vertex id {} out of range or repeated", id));
    seen[static_cast<std::size_t>(idx)] = 1;
    Point p{0.0, 0.0, 0.0};
    for (int c = 0; c < dim; ++c) p[c] = nodes.number<double>(tok[1 + static_cast<std::size_t>(c)]);
    vertices[static_cast<std::size_t>(idx)] = p;
  }

  TokenLines eles(read_file(ele_path), ele_path.string());
  eles.expect(eles.next(tok), "missing .ele header");
  eles.expect(tok.size() >= 2, "header must be '<count> <nodes per element> <attributes>'");
  const long ne = eles.number<long>(tok[0]);
  const int npe = eles.number<int>(tok[1]);
  const int eattr = tok.size() > 2 ? eles.number<int>(tok[2]) : 0;
  eles.expect(ne >= 1, "element count must be positive");
  eles.expect(npe == dim + 1, fmt::format("expected {} nodes per element for dimension {}", dim + 1, dim));

  std::vector<Cell> elements;
  elements.reserve(static_cast<std::size_t>(ne));
  for (long e = 0; e < ne; ++e) {
    eles.expect(eles.next(tok), fmt::format("expected {} elements, file ended after {}", ne, e));
    eles.expect(tok.size() == 1 + static_cast<std::size_t>(npe + eattr),
                fmt::format("element row must have {} fields", 1 + npe + eattr));
    Cell c{-1, -1, -1, -1};
    for (int i = 0; i < npe; ++i) {
      const long v = eles.number<long>(tok[1 + static_cast<std::size_t>(i)]) - base;
      eles.expect(v >= 0 && v < count, fmt::format("vertex reference {} out of range", v + base));
      c[i] = static_cast<int>(v);
    }
    elements.push_back(c);
  }
  return SimplicialMesh::build(dim, std::move(vertices), std::move(elements));
}

void write_node_ele(const SimplicialMesh& mesh, const std::filesystem::path& path) {
  const int d = mesh.dim();
  std::ofstream node(with_ext(path, ".node"));
  std::ofstream ele(with_ext(path, ".ele"));
  if (!node || !ele) throw std::runtime_error(fmt::format("cannot write {}", path.string()));

  node << fmt::format("{} {} 0 1\n", mesh.num_vertices(), d);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    node << v + 1;
    for (int c = 0; c < d; ++c) node << fmt::format(" {:.17g}", mesh.vertex(v)[c]);
    node << ' ' << (mesh.is_boundary(v) ? 1 : 0) << '\n';
  }
  ele << fmt::format("{} {} 0\n", mesh.num_elements(), d + 1);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    ele << k + 1;
    for (int v : mesh.element(k)) ele << ' ' << v + 1;
    ele << '\n';
  }
}

}  // namespace

MeshFormat parse_mesh_format(std::string_view name) {
  if (name == "json" || name == "native_json") return MeshFormat::native_json;
  if (name == "triangle" || name == "triangle_node_ele" || name == "node") return MeshFormat::triangle_node_ele;
  throw std::invalid_argument(fmt::format("unknown mesh format '{}'", name));
}

void write_native_json(const SimplicialMesh& mesh, std::ostream& out) {
  const int d = mesh.dim();
  out << "{\n  \"version\": 1,\n  \"dim\": " << d << ",\n  \"vertices\": [";
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    out << (v ? ",\n    [" : "\n    [");
    for (int c = 0; c < d; ++c) out << (c ? ", " : "") << fmt::format("{:.17g}", mesh.vertex(v)[c]);
    out << ']';
  }
  out << "\n  ],\n  \"elements\": [";
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    out << (k ? ",\n    [" : "\n    [");
    const auto ids = mesh.element(k);
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? ", " : "") << ids[i];
    out << ']';
  }
  out << "\n  ]\n}\n";
}

SimplicialMesh read_native_json(std::istream& in, const std::string& name) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_native_json(ss.str(), name);
}

SimplicialMesh import_mesh(const std::filesystem::path& path, MeshFormat format) {
  switch (format) {
    case MeshFormat::native_json:
      return parse_native_json(read_file(path), path.string());
    case MeshFormat::triangle_node_ele:
      return read_node_ele(path);
  }
  throw std::invalid_argument("unknown mesh format");
}

void export_mesh(const SimplicialMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  if (format == MeshFormat::triangle_node_ele) {
    write_node_ele(mesh, path);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  write_native_json(mesh, out);
}

}  // namespace fecond

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "fecond/mesh.hpp"

namespace fecond {

enum class MeshFormat {
  native_json,        ///< {"version": 1, "dim": d, "vertices": [...], "elements": [...]}
  triangle_node_ele,  ///< Triangle / TetGen .node + .ele pair
};

MeshFormat parse_mesh_format(std::string_view name);

/// Reads a mesh. For triangle_node_ele `path` may name the .node file, the
/// .ele file or the common stem. Boundary flags are always recomputed from
/// facet incidence; any boundary markers in the file are ignored.
/// Throws FormatError (with line number) or MeshError.
SimplicialMesh import_mesh(const std::filesystem::path& path, MeshFormat format);

/// Writes a mesh. Coordinates are printed with 17 significant digits so a
/// native_json round trip is bit-exact. For triangle_node_ele, `path` is the
/// stem (or .node name) and both files are written with 1-based ids.
void export_mesh(const SimplicialMesh& mesh, const std::filesystem::path& path, MeshFormat format);

void write_native_json(const SimplicialMesh& mesh, std::ostream& out);
SimplicialMesh read_native_json(std::istream& in, const std::string& name = "<stream>");

}  // namespace fecond

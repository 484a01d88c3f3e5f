#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "h2mg/geometry.hpp"

namespace h2mg {

namespace {

// "12", "12/4", "12//7", "12/4/7" -> 12
Index parse_face_index(const std::string& token, Index num_vertices, Index line_no) {
  const auto slash = token.find('/');
  const std::string head = token.substr(0, slash);
  Index idx = 0;
  try {
    idx = std::stoll(head);
  } catch (const std::exception&) {
    throw std::invalid_argument("read_obj: bad face index '" + token + "' on line " +
                                std::to_string(line_no));
  }
  // negative indices are relative to the vertices seen so far
  if (idx < 0) idx = num_vertices + idx + 1;
  return idx - 1;
}

}  // namespace

SurfaceMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_obj: cannot open " + path.string());

  std::vector<std::array<double, 3>> verts;
  std::vector<SurfaceMesh::Triangle> tris;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::array<double, 3> v{};
      if (!(ls >> v[0] >> v[1] >> v[2]))
        throw std::invalid_argument("read_obj: malformed vertex on line " +
                                    std::to_string(line_no));
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<Index> face;
      std::string tok;
      while (ls >> tok)
        face.push_back(parse_face_index(tok, static_cast<Index>(verts.size()), line_no));
      if (face.size() != 3)
        throw std::invalid_argument("read_obj: only triangular faces are supported (line " +
                                    std::to_string(line_no) + ")");
      tris.push_back({face[0], face[1], face[2]});
    }
  }
  Matrix v(static_cast<Index>(verts.size()), 3);
  for (Index i = 0; i < v.rows(); ++i) v.row(i) << verts[i][0], verts[i][1], verts[i][2];
  return SurfaceMesh(std::move(v), std::move(tris));
}

void write_centroid_csv(const SurfaceMesh& mesh, const std::filesystem::path& path,
                        const Vector* values, const std::string& value_name) {
  if (values && values->size() != mesh.num_triangles())
    throw std::invalid_argument("write_centroid_csv: value count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_centroid_csv: cannot open " + path.string());
  out << "x,y,z,area";
  if (values) out << ',' << value_name;
  out << '\n' << std::scientific << std::setprecision(16);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto c = mesh.centroids().row(t);
    out << c(0) << ',' << c(1) << ',' << c(2) << ',' << mesh.areas()[t];
    if (values) out << ',' << (*values)[t];
    out << '\n';
  }
}

}  // namespace h2mg

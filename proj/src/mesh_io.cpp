#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "foldlab/errors.hpp"
#include "foldlab/geometry.hpp"

namespace foldlab::geometry {

namespace {

// Yields non-empty, comment-stripped lines with their 1-based numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::istringstream& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fields.clear();
      fields.str(line);
      return true;
    }
    return false;
  }
  int line() const { return number_; }

 private:
  std::istream& in_;
  int number_ = 0;
};

template <class T>
void read_fields(std::istringstream& fields, int line, const char* what, T* out, int n) {
  for (int k = 0; k < n; ++k) {
    if (!(fields >> out[k])) throw ParseError(std::string("malformed ") + what, line);
  }
  std::string extra;
  if (fields >> extra) throw ParseError(std::string("trailing data after ") + what, line);
}

}  // namespace

void export_mesh(const Mesh& mesh, std::ostream& out) {
  out << "# foldlab mesh, h = " << std::setprecision(17) << mesh.h << "\n";
  out << "mesh2d " << mesh.num_vertices() << " " << mesh.num_triangles() << " "
      << mesh.boundary_edges.size() << "\n";
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& e : mesh.boundary_edges) out << e[0] << " " << e[1] << "\n";
}

void export_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  export_mesh(mesh, out);
  if (!out) throw Error("write to '" + path + "' failed");
}

Mesh import_mesh(std::istream& in) {
  LineReader reader(in);
  std::istringstream fields;
  if (!reader.next(fields)) throw ParseError("missing mesh2d header", reader.line() + 1);
  std::string tag;
  long nv = -1, nt = -1, nb = -1;
  if (!(fields >> tag >> nv >> nt >> nb) || tag != "mesh2d" || nv < 0 || nt < 0 || nb < 0) {
    throw ParseError("expected header 'mesh2d <nv> <nt> <nb>'", reader.line());
  }
  Mesh mesh;
  mesh.vertices.resize(nv);
  for (long i = 0; i < nv; ++i) {
    if (!reader.next(fields)) throw ParseError("unexpected end of file in vertices", reader.line() + 1);
    double xy[2];
    read_fields(fields, reader.line(), "vertex", xy, 2);
    mesh.vertices[i] = Eigen::Vector2d(xy[0], xy[1]);
  }
  mesh.triangles.resize(nt);
  for (long i = 0; i < nt; ++i) {
    if (!reader.next(fields)) throw ParseError("unexpected end of file in triangles", reader.line() + 1);
    long ijk[3];
    read_fields(fields, reader.line(), "triangle", ijk, 3);
    for (long v : ijk) {
      if (v < 0 || v >= nv) throw ParseError("triangle references vertex " + std::to_string(v) +
                                                 " outside [0, " + std::to_string(nv) + ")",
                                             reader.line());
    }
    mesh.triangles[i] = {static_cast<int>(ijk[0]), static_cast<int>(ijk[1]), static_cast<int>(ijk[2])};
    if (!(mesh.triangle_area(static_cast<int>(i)) > 0.0)) {
      throw ParseError("triangle " + std::to_string(i) + " has non-positive signed area", reader.line());
    }
  }
  mesh.boundary_edges.resize(nb);
  for (long i = 0; i < nb; ++i) {
    if (!reader.next(fields)) throw ParseError("unexpected end of file in boundary edges", reader.line() + 1);
    long ij[2];
    read_fields(fields, reader.line(), "boundary edge", ij, 2);
    for (long v : ij) {
      if (v < 0 || v >= nv) throw ParseError("boundary edge references vertex " + std::to_string(v),
                                             reader.line());
    }
    mesh.boundary_edges[i] = {static_cast<int>(ij[0]), static_cast<int>(ij[1])};
  }
  if (reader.next(fields)) throw ParseError("trailing data after mesh", reader.line());
  const auto given = mesh.boundary_edges;
  finalize_mesh(mesh);
  auto sorted = given;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != mesh.boundary_edges) {
    throw ParseError("boundary edges do not match the triangulation", reader.line());
  }
  mesh.boundary_edges = given;
  return mesh;
}

Mesh import_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return import_mesh(in);
}

}  // namespace foldlab::geometry

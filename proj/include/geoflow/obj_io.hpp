#pragma once

// Wavefront OBJ I/O: ASCII `v`/`f` records only, triangles only, 1-indexed.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "geoflow/errors.hpp"
#include "geoflow/mesh.hpp"

namespace geoflow {

// Coordinates are printed with 17 significant digits so that a write/read
// round trip is bit-identical.
inline void write_obj(const SurfaceMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  char buf[96];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(),
                  v.z());
    out << buf;
  }
  for (const auto& tri : mesh.triangles) {
    out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1
        << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

inline SurfaceMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");

  SurfaceMesh mesh;
  std::string line;
  long line_number = 0;
  bool saw_record = false;
  while (std::getline(in, line)) {
    ++line_number;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;  // blank line
    if (tag == "#" || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw ParseError("malformed vertex record", line_number);
      }
      mesh.vertices.push_back(v);
      saw_record = true;
    } else if (tag == "f") {
      std::array<int, 3> tri;
      int count = 0;
      std::string item;
      while (ss >> item) {
        // Accept v, v/vt, v//vn forms; only the vertex index is used.
        size_t slash = item.find('/');
        std::string head = (slash == std::string::npos) ? item
                                                        : item.substr(0, slash);
        int index = 0;
        try {
          index = std::stoi(head);
        } catch (const std::exception&) {
          throw ParseError("malformed face index '" + item + "'", line_number);
        }
        if (count >= 3) {
          throw ParseError("non-triangle face (only triangles are supported)",
                           line_number);
        }
        if (index < 1 || index > mesh.vertex_count()) {
          throw ParseError("face index out of range", line_number);
        }
        tri[count++] = index - 1;
      }
      if (count != 3) {
        throw ParseError("face with fewer than three vertices", line_number);
      }
      mesh.triangles.push_back(tri);
      saw_record = true;
    } else if (tag == "vn" || tag == "vt" || tag == "o" || tag == "g" ||
               tag == "s" || tag == "mtllib" || tag == "usemtl") {
      continue;  // ignored records
    } else {
      throw ParseError("unrecognized record '" + tag + "'", line_number);
    }
  }
  if (!saw_record) throw ParseError("no mesh records found", line_number);
  return mesh;
}

}  // namespace geoflow

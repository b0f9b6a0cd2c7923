#pragma once

// Closed oriented triangle meshes: generators, validation, measurement.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "geoflow/errors.hpp"

namespace geoflow {

using Vec3 = Eigen::Vector3d;

// Closed, consistently oriented triangulated surface. Triangles are index
// triples into `vertices`, counter-clockwise as seen from outside.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
};

struct MeshReport {
  bool is_closed = false;
  bool is_oriented = false;
  double min_area = 0.0;
  int euler_characteristic = 0;
  int genus = -1;  // derived only when closed and oriented
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

inline MeshReport validate(const SurfaceMesh& mesh) {
  MeshReport report;

  // Undirected edge -> (count, directed-orientation balance).
  std::map<std::pair<int, int>, std::pair<int, int>> edges;
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int u = tri[e];
      int v = tri[(e + 1) % 3];
      auto key = std::minmax(u, v);
      auto& entry = edges[{key.first, key.second}];
      entry.first += 1;
      entry.second += (u < v) ? 1 : -1;
    }
  }

  report.is_closed = !edges.empty();
  report.is_oriented = !edges.empty();
  for (const auto& [key, entry] : edges) {
    if (entry.first != 2) report.is_closed = false;
    // A consistently oriented interior edge is traversed once each way.
    if (entry.first == 2 && entry.second != 0) report.is_oriented = false;
  }

  report.min_area = mesh.triangles.empty()
                        ? 0.0
                        : std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.triangles) {
    report.min_area =
        std::min(report.min_area,
                 triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                               mesh.vertices[tri[2]]));
  }

  report.euler_characteristic = mesh.vertex_count() -
                                static_cast<int>(edges.size()) +
                                mesh.triangle_count();
  if (report.is_closed && report.is_oriented) {
    report.genus = (2 - report.euler_characteristic) / 2;
  }
  return report;
}

// h := max_j sqrt(|sigma_j|).
inline double mesh_size(const SurfaceMesh& mesh) {
  double h = 0.0;
  for (const auto& tri : mesh.triangles) {
    h = std::max(h, std::sqrt(triangle_area(mesh.vertices[tri[0]],
                                            mesh.vertices[tri[1]],
                                            mesh.vertices[tri[2]])));
  }
  return h;
}

inline double total_area(const SurfaceMesh& mesh) {
  double area = 0.0;
  for (const auto& tri : mesh.triangles) {
    area += triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                          mesh.vertices[tri[2]]);
  }
  return area;
}

// Signed volume via the divergence theorem; positive for outward orientation.
inline double enclosed_volume(const SurfaceMesh& mesh) {
  MeshReport report = validate(mesh);
  if (!report.is_closed || !report.is_oriented) {
    throw PreconditionError("enclosed_volume requires a closed, oriented mesh");
  }
  double six_vol = 0.0;
  for (const auto& tri : mesh.triangles) {
    six_vol += mesh.vertices[tri[0]].dot(
        mesh.vertices[tri[1]].cross(mesh.vertices[tri[2]]));
  }
  return six_vol / 6.0;
}

namespace detail {

inline SurfaceMesh icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double s = 1.0 / std::sqrt(1.0 + phi * phi);
  const double a = s;
  const double b = s * phi;
  SurfaceMesh mesh;
  mesh.vertices = {
      {-a, b, 0},  {a, b, 0},  {-a, -b, 0}, {a, -b, 0}, {0, -a, b},
      {0, a, b},   {0, -a, -b}, {0, a, -b}, {b, 0, -a}, {b, 0, a},
      {-b, 0, -a}, {-b, 0, a}};
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10},
                    {0, 10, 11}, {1, 5, 9},  {5, 11, 4},  {11, 10, 2},
                    {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
                    {3, 2, 6},   {3, 6, 8},  {3, 8, 9},   {4, 9, 5},
                    {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  return mesh;
}

// The tangential constraint frame at a vertex is the pair of area-weighted
// sums of per-face edge tangents (q2-q1)/|..| and (q3-q1)/|..| over incident
// faces. On meshes with centrally symmetric vertex stars, opposite-edge
// contributions cancel exactly and the pair degenerates to a parallel
// (radial) pair, which makes the constraint rows singular. A cyclic rotation
// of a triangle's corner order is orientation-preserving and otherwise free,
// so choose rotations that keep every vertex's frame away from degeneracy:
// seeded random rotations first, then local greedy repair.
inline void condition_corner_order(SurfaceMesh& mesh,
                                   double good_enough = 1e-5) {
  const int K = mesh.vertex_count();
  const int J = mesh.triangle_count();
  if (J == 0) return;

  std::vector<double> area(J);
  std::vector<std::vector<int>> incident(K);
  for (int j = 0; j < J; ++j) {
    const auto& tri = mesh.triangles[j];
    area[j] = triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                            mesh.vertices[tri[2]]);
    for (int c = 0; c < 3; ++c) incident[tri[c]].push_back(j);
  }

  // Both averaged tangents at each corner get the same face contribution.
  auto contribution = [&](int j, std::array<Vec3, 2>& out) {
    const auto& tri = mesh.triangles[j];
    const Vec3& qa = mesh.vertices[tri[0]];
    out[0] = area[j] * (mesh.vertices[tri[1]] - qa).normalized();
    out[1] = area[j] * (mesh.vertices[tri[2]] - qa).normalized();
  };
  auto rotate = [&](int j, int r) {
    auto& tri = mesh.triangles[j];
    tri = {tri[r % 3], tri[(r + 1) % 3], tri[(r + 2) % 3]};
  };

  std::vector<Vec3> t1(K, Vec3::Zero()), t2(K, Vec3::Zero());
  std::vector<double> star_area(K, 0.0);
  std::mt19937 rng(0x5eedu);
  std::uniform_int_distribution<int> pick(0, 2);
  std::array<Vec3, 2> c;
  for (int j = 0; j < J; ++j) {
    rotate(j, pick(rng));
    contribution(j, c);
    for (int k : mesh.triangles[j]) {
      t1[k] += c[0];
      t2[k] += c[1];
      star_area[k] += area[j];
    }
  }

  // Gram determinant of the averaged pair, normalized by the incident-area
  // scale so that a vanishing sum registers as degenerate too (an angular
  // sin^2 alone is blind to |t_i| -> 0).
  auto quality = [&](int k) {
    double n1 = t1[k].squaredNorm(), n2 = t2[k].squaredNorm();
    double dot = t1[k].dot(t2[k]);
    double scale = star_area[k] * star_area[k];
    return (n1 * n2 - dot * dot) / (1e-300 + scale * scale);
  };

  for (int pass = 0; pass < 32; ++pass) {
    bool changed = false;
    for (int k = 0; k < K; ++k) {
      if (quality(k) >= good_enough) continue;
      // Re-rotate one incident face, keeping the worst affected vertex as
      // high as possible.
      int best_face = -1, best_rot = 0;
      double best_score = -1.0;
      for (int j : incident[k]) {
        std::array<Vec3, 2> old_c;
        contribution(j, old_c);
        for (int r = 1; r <= 2; ++r) {
          rotate(j, r);
          contribution(j, c);
          for (int v : mesh.triangles[j]) {
            t1[v] += c[0] - old_c[0];
            t2[v] += c[1] - old_c[1];
          }
          double score = quality(k);
          for (int v : mesh.triangles[j]) {
            score = std::min(score, quality(v));
          }
          if (score > best_score) {
            best_score = score;
            best_face = j;
            best_rot = (r == 1) ? 1 : 2;  // net rotation applied so far
          }
          for (int v : mesh.triangles[j]) {
            t1[v] -= c[0] - old_c[0];
            t2[v] -= c[1] - old_c[1];
          }
          rotate(j, 3 - r);  // undo
        }
      }
      if (best_face >= 0 && best_score > quality(k)) {
        std::array<Vec3, 2> old_c;
        contribution(best_face, old_c);
        rotate(best_face, best_rot);
        contribution(best_face, c);
        for (int v : mesh.triangles[best_face]) {
          t1[v] += c[0] - old_c[0];
          t2[v] += c[1] - old_c[1];
        }
        changed = true;
      }
    }
    if (!changed) break;
  }
}

}  // namespace detail

// Loop-style midpoint subdivision of the icosahedron, midpoints reprojected
// to the sphere at each level.
inline SurfaceMesh make_icosphere(int subdivisions, double radius,
                                  int subdivision_cap = 7) {
  if (subdivisions < 0) throw PreconditionError("subdivisions must be >= 0");
  if (radius <= 0.0) throw PreconditionError("radius must be positive");
  if (subdivisions > subdivision_cap) {
    throw SizeError("icosphere subdivisions exceed cap of " +
                    std::to_string(subdivision_cap));
  }

  SurfaceMesh mesh = detail::icosahedron();
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto midpoint_index = [&](int u, int v) {
      auto key = std::minmax(u, v);
      auto it = midpoint.find({key.first, key.second});
      if (it != midpoint.end()) return it->second;
      Vec3 m = (mesh.vertices[u] + mesh.vertices[v]).normalized();
      mesh.vertices.push_back(m);
      int index = mesh.vertex_count() - 1;
      midpoint[{key.first, key.second}] = index;
      return index;
    };

    std::vector<std::array<int, 3>> refined;
    refined.reserve(mesh.triangles.size() * 4);
    for (const auto& tri : mesh.triangles) {
      int ab = midpoint_index(tri[0], tri[1]);
      int bc = midpoint_index(tri[1], tri[2]);
      int ca = midpoint_index(tri[2], tri[0]);
      refined.push_back({tri[0], ab, ca});
      refined.push_back({tri[1], bc, ab});
      refined.push_back({tri[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(refined);
  }

  for (auto& v : mesh.vertices) v *= radius;
  detail::condition_corner_order(mesh);
  return mesh;
}

// Vertices satisfy x^2/a + y^2/b + z^2 = 1: unit-sphere vertices mapped by
// (x, y, z) -> (sqrt(a) x, sqrt(b) y, z).
inline SurfaceMesh make_ellipsoid(double a, double b, int subdivisions,
                                  int subdivision_cap = 7) {
  if (a <= 0.0 || b <= 0.0) {
    throw PreconditionError("ellipsoid axes must be positive");
  }
  SurfaceMesh mesh = make_icosphere(subdivisions, 1.0, subdivision_cap);
  const double sa = std::sqrt(a);
  const double sb = std::sqrt(b);
  for (auto& v : mesh.vertices) {
    v.x() *= sa;
    v.y() *= sb;
  }
  detail::condition_corner_order(mesh);
  return mesh;
}

// Structured n_major x n_minor grid on (R - sqrt(x^2+y^2))^2 + z^2 = r^2,
// each quad split along the (i+j)-consistent diagonal.
inline SurfaceMesh make_torus(double R, double r, int n_major, int n_minor) {
  if (r <= 0.0) throw PreconditionError("torus minor radius must be positive");
  if (R <= r) {
    throw PreconditionError("torus requires R > r (embedded, no self-intersection)");
  }
  if (n_major < 3 || n_minor < 3) {
    throw PreconditionError("torus grid dimensions must be >= 3");
  }

  SurfaceMesh mesh;
  mesh.vertices.reserve(static_cast<size_t>(n_major) * n_minor);
  const double two_pi = 2.0 * M_PI;
  for (int i = 0; i < n_major; ++i) {
    double u = two_pi * i / n_major;
    for (int j = 0; j < n_minor; ++j) {
      double v = two_pi * j / n_minor;
      double ring = R + r * std::cos(v);
      mesh.vertices.push_back(
          {ring * std::cos(u), ring * std::sin(u), r * std::sin(v)});
    }
  }

  auto vid = [&](int i, int j) {
    return ((i % n_major + n_major) % n_major) * n_minor +
           ((j % n_minor + n_minor) % n_minor);
  };
  mesh.triangles.reserve(static_cast<size_t>(2) * n_major * n_minor);
  for (int i = 0; i < n_major; ++i) {
    for (int j = 0; j < n_minor; ++j) {
      int v00 = vid(i, j), v10 = vid(i + 1, j);
      int v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      } else {
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      }
    }
  }
  detail::condition_corner_order(mesh);
  return mesh;
}

}  // namespace geoflow

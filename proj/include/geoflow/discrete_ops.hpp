#pragma once

// Discrete differential geometry on piecewise-linear fields over a fixed
// polygonal surface: face frames, mass-lumped inner products, surface
// gradients, vertex normals, the discrete Weingarten map, and the initial
// curvature projection.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/mesh.hpp"

namespace geoflow {

using VertexScalarField = Eigen::VectorXd;
using VertexVectorField = std::vector<Vec3>;
using FaceMatrixField = std::vector<Eigen::Matrix3d>;

// Per-triangle geometry cache: direction vector J{sigma}, unit normal
// J/|J|, area |J|/2, and the two non-parallel unit edge tangents.
struct FaceFrame {
  Vec3 direction;
  Vec3 normal;
  double area;
  Vec3 tangent1;  // along q2 - q1
  Vec3 tangent2;  // along q3 - q1
};

using FaceFrames = std::vector<FaceFrame>;

inline FaceFrames face_frames(const SurfaceMesh& mesh) {
  FaceFrames frames;
  frames.reserve(mesh.triangles.size());
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const auto& tri = mesh.triangles[j];
    const Vec3& q1 = mesh.vertices[tri[0]];
    const Vec3& q2 = mesh.vertices[tri[1]];
    const Vec3& q3 = mesh.vertices[tri[2]];
    FaceFrame frame;
    frame.direction = (q2 - q1).cross(q3 - q1);
    double jnorm = frame.direction.norm();
    double scale = std::max({(q2 - q1).norm(), (q3 - q1).norm(), 1e-300});
    if (jnorm <= 1e-14 * scale * scale) {
      throw DegenerateElementError("degenerate (zero-area) face " +
                                   std::to_string(j));
    }
    frame.normal = frame.direction / jnorm;
    frame.area = 0.5 * jnorm;
    frame.tangent1 = (q2 - q1).normalized();
    frame.tangent2 = (q3 - q1).normalized();
    frames.push_back(frame);
  }
  return frames;
}

namespace detail {

inline void check_scalar_shape(const SurfaceMesh& mesh,
                               const VertexScalarField& field) {
  if (field.size() != mesh.vertex_count()) {
    throw ShapeError("scalar field length does not match vertex count");
  }
}

inline void check_vector_shape(const SurfaceMesh& mesh,
                               const VertexVectorField& field) {
  if (static_cast<int>(field.size()) != mesh.vertex_count()) {
    throw ShapeError("vector field length does not match vertex count");
  }
}

}  // namespace detail

// Gradients of the three hat functions on face j; the surface gradient of a
// piecewise-linear field on this face is the corner-value-weighted sum.
//   grad(hat_c) = (q_{c+1} - q_{c+2}) x n / |J|
inline std::array<Vec3, 3> hat_gradients(const SurfaceMesh& mesh,
                                         const FaceFrames& frames, int j) {
  const auto& tri = mesh.triangles[j];
  const Vec3& q1 = mesh.vertices[tri[0]];
  const Vec3& q2 = mesh.vertices[tri[1]];
  const Vec3& q3 = mesh.vertices[tri[2]];
  const Vec3& n = frames[j].normal;
  double inv_jnorm = 1.0 / (2.0 * frames[j].area);
  return {(q2 - q3).cross(n) * inv_jnorm, (q3 - q1).cross(n) * inv_jnorm,
          (q1 - q2).cross(n) * inv_jnorm};
}

// Per-face constant surface gradient of a piecewise-linear scalar field.
inline std::vector<Vec3> surface_gradient_scalar(
    const SurfaceMesh& mesh, const FaceFrames& frames,
    const VertexScalarField& field) {
  detail::check_scalar_shape(mesh, field);
  std::vector<Vec3> grad(mesh.triangles.size());
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    auto g = hat_gradients(mesh, frames, j);
    const auto& tri = mesh.triangles[j];
    grad[j] = field[tri[0]] * g[0] + field[tri[1]] * g[1] + field[tri[2]] * g[2];
  }
  return grad;
}

// Row i of the per-face matrix is the surface gradient of component i.
inline FaceMatrixField surface_gradient_vector(const SurfaceMesh& mesh,
                                               const FaceFrames& frames,
                                               const VertexVectorField& field) {
  detail::check_vector_shape(mesh, field);
  FaceMatrixField grad(mesh.triangles.size());
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    auto g = hat_gradients(mesh, frames, j);
    const auto& tri = mesh.triangles[j];
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int c = 0; c < 3; ++c) m += field[tri[c]] * g[c].transpose();
    grad[j] = m;
  }
  return grad;
}

// Area-weighted average of incident face normals, normalized to unit length.
inline VertexVectorField vertex_normals(const SurfaceMesh& mesh,
                                        const FaceFrames& frames) {
  VertexVectorField normals(mesh.vertex_count(), Vec3::Zero());
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    for (int c = 0; c < 3; ++c) {
      normals[mesh.triangles[j][c]] += frames[j].area * frames[j].normal;
    }
  }
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    double len = normals[k].norm();
    if (len <= 1e-14) {
      throw DegenerateElementError(
          "vanishing averaged normal at vertex " + std::to_string(k));
    }
    normals[k] /= len;
  }
  return normals;
}

// Discrete Weingarten map A = grad_Gamma(w) built from vertex unit normals.
inline FaceMatrixField weingarten(const SurfaceMesh& mesh,
                                  const FaceFrames& frames,
                                  const VertexVectorField& w) {
  return surface_gradient_vector(mesh, frames, w);
}

// Mass-lumped inner product (u, v)^h = (1/3) sum_j |sigma_j| sum_c u_c v_c.
inline double inner_lumped_scalar(const SurfaceMesh& mesh,
                                  const FaceFrames& frames,
                                  const VertexScalarField& u,
                                  const VertexScalarField& v) {
  detail::check_scalar_shape(mesh, u);
  detail::check_scalar_shape(mesh, v);
  double sum = 0.0;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const auto& tri = mesh.triangles[j];
    double corner = 0.0;
    for (int c = 0; c < 3; ++c) corner += u[tri[c]] * v[tri[c]];
    sum += frames[j].area / 3.0 * corner;
  }
  return sum;
}

inline double inner_lumped_vector(const SurfaceMesh& mesh,
                                  const FaceFrames& frames,
                                  const VertexVectorField& u,
                                  const VertexVectorField& v) {
  detail::check_vector_shape(mesh, u);
  detail::check_vector_shape(mesh, v);
  double sum = 0.0;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const auto& tri = mesh.triangles[j];
    double corner = 0.0;
    for (int c = 0; c < 3; ++c) corner += u[tri[c]].dot(v[tri[c]]);
    sum += frames[j].area / 3.0 * corner;
  }
  return sum;
}

// Hilbert-Schmidt variant for piecewise-constant matrix fields.
inline double inner_lumped_matrix(const SurfaceMesh& mesh,
                                  const FaceFrames& frames,
                                  const FaceMatrixField& u,
                                  const FaceMatrixField& v) {
  if (u.size() != mesh.triangles.size() || v.size() != mesh.triangles.size()) {
    throw ShapeError("matrix field length does not match triangle count");
  }
  double sum = 0.0;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    sum += frames[j].area * u[j].cwiseProduct(v[j]).sum();
  }
  return sum;
}

// Lumped-mass projection of Tr(A) onto vertices:
//   H0(q_k) = sum_{sigma ni k} |sigma| Tr(A|_sigma) / sum_{sigma ni k} |sigma|
inline VertexScalarField initial_curvature(const SurfaceMesh& mesh,
                                           const FaceFrames& frames,
                                           const FaceMatrixField& A0) {
  if (A0.size() != mesh.triangles.size()) {
    throw ShapeError("Weingarten field length does not match triangle count");
  }
  VertexScalarField numerator = VertexScalarField::Zero(mesh.vertex_count());
  VertexScalarField weight = VertexScalarField::Zero(mesh.vertex_count());
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    double trace = A0[j].trace();
    for (int c = 0; c < 3; ++c) {
      int k = mesh.triangles[j][c];
      numerator[k] += frames[j].area * trace;
      weight[k] += frames[j].area;
    }
  }
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    if (weight[k] <= 0.0) {
      throw PreconditionError("isolated vertex " + std::to_string(k));
    }
    numerator[k] /= weight[k];
  }
  return numerator;
}

// Identity parameterization X^m as a vertex vector field.
inline VertexVectorField identity_field(const SurfaceMesh& mesh) {
  return mesh.vertices;
}

}  // namespace geoflow

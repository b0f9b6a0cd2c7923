#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "geoflow/discrete_ops.hpp"
#include "geoflow/mesh.hpp"

using namespace geoflow;

namespace {

// Two stacked reference triangles forming a closed (degenerate-thickness-free)
// tetrahedron for single-face checks.
SurfaceMesh tetrahedron() {
  SurfaceMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  mesh.triangles = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  return mesh;
}

SurfaceMesh octahedron(double radius = 1.0) {
  SurfaceMesh mesh;
  mesh.vertices = {{radius, 0, 0},  {-radius, 0, 0}, {0, radius, 0},
                   {0, -radius, 0}, {0, 0, radius},  {0, 0, -radius}};
  mesh.triangles = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                    {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return mesh;
}

}  // namespace

TEST_CASE("face frames on the reference triangle") {
  SurfaceMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.triangles = {{0, 1, 2}};
  auto frames = face_frames(mesh);
  REQUIRE(frames.size() == 1);
  CHECK((frames[0].normal - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK(frames[0].area == Catch::Approx(0.5));
  CHECK((frames[0].tangent1 - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((frames[0].tangent2 - Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("face frames are orthogonal unit frames") {
  auto mesh = make_ellipsoid(2.0, 1.0, 2);
  for (const auto& frame : face_frames(mesh)) {
    CHECK(frame.area > 0.0);
    CHECK(std::abs(frame.normal.norm() - 1.0) < 1e-12);
    CHECK(std::abs(frame.tangent1.norm() - 1.0) < 1e-12);
    CHECK(std::abs(frame.tangent2.norm() - 1.0) < 1e-12);
    CHECK(std::abs(frame.normal.dot(frame.tangent1)) < 1e-12);
    CHECK(std::abs(frame.normal.dot(frame.tangent2)) < 1e-12);
  }
}

TEST_CASE("degenerate faces are rejected") {
  SurfaceMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  mesh.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(face_frames(mesh), DegenerateElementError);
}

TEST_CASE("hat gradients reproduce linear interpolation exactly") {
  auto mesh = tetrahedron();
  auto frames = face_frames(mesh);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  Vec3 a{coef(rng), coef(rng), coef(rng)};

  VertexScalarField field(mesh.vertex_count());
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    field[k] = a.dot(mesh.vertices[k]);
  }
  auto grad = surface_gradient_scalar(mesh, frames, field);
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const Vec3& n = frames[j].normal;
    Vec3 expected = a - n * n.dot(a);  // (I - n n^T) a
    CHECK((grad[j] - expected).norm() < 1e-12);
    CHECK(std::abs(grad[j].dot(n)) < 1e-12);
  }
}

TEST_CASE("surface gradient of the identity is the tangential projector") {
  auto mesh = make_icosphere(2, 1.3);
  auto frames = face_frames(mesh);
  auto grad = surface_gradient_vector(mesh, frames, identity_field(mesh));
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const Vec3& n = frames[j].normal;
    Eigen::Matrix3d projector =
        Eigen::Matrix3d::Identity() - n * n.transpose();
    CHECK((grad[j] - projector).norm() < 1e-12);
    CHECK((grad[j] * n).norm() < 1e-12);             // annihilates normal
    CHECK((grad[j].transpose() * n).norm() < 1e-12);  // rows tangential
  }
}

TEST_CASE("surface gradients are linear in the field") {
  auto mesh = make_icosphere(1, 1.0);
  auto frames = face_frames(mesh);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  VertexScalarField u(mesh.vertex_count()), v(mesh.vertex_count());
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    u[k] = coef(rng);
    v[k] = coef(rng);
  }
  auto gu = surface_gradient_scalar(mesh, frames, u);
  auto gv = surface_gradient_scalar(mesh, frames, v);
  auto gsum = surface_gradient_scalar(mesh, frames, 2.0 * u + 3.0 * v);
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    CHECK((gsum[j] - 2.0 * gu[j] - 3.0 * gv[j]).norm() < 1e-12);
  }
}

TEST_CASE("octahedron vertex normals point along the axes") {
  auto mesh = octahedron();
  auto normals = vertex_normals(mesh, face_frames(mesh));
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    Vec3 expected = mesh.vertices[k].normalized();
    CHECK((normals[k] - expected).norm() < 1e-12);
  }
}

TEST_CASE("sphere Weingarten trace and initial curvature approach 2/R") {
  double radius = 1.5;
  auto mesh = make_icosphere(3, radius);
  auto frames = face_frames(mesh);
  auto A = weingarten(mesh, frames, vertex_normals(mesh, frames));
  double expected = 2.0 / radius;
  // Pointwise the discrete operator stalls near the twelve valence-5
  // vertices (~6-8% there regardless of refinement); the mean converges.
  double trace_mean = 0.0, trace_worst = 0.0;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    double err = std::abs(A[j].trace() / expected - 1.0);
    trace_mean += err;
    trace_worst = std::max(trace_worst, err);
  }
  CHECK(trace_mean / mesh.triangle_count() < 0.05);
  CHECK(trace_worst < 0.10);

  auto H0 = initial_curvature(mesh, frames, A);
  double h_mean = 0.0, h_worst = 0.0;
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    double err = std::abs(H0[k] / expected - 1.0);
    h_mean += err;
    h_worst = std::max(h_worst, err);
    CHECK(H0[k] > 0.0);  // convex body, outward normals
  }
  CHECK(h_mean / mesh.vertex_count() < 0.05);
  CHECK(h_worst < 0.08);
}

TEST_CASE("vertex normals of the icosphere are nearly radial") {
  auto mesh = make_icosphere(3, 1.0);
  auto normals = vertex_normals(mesh, face_frames(mesh));
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    double cosine = normals[k].dot(mesh.vertices[k].normalized());
    CHECK(std::acos(std::min(1.0, cosine)) < 1.0 * M_PI / 180.0);
  }
}

TEST_CASE("Weingarten sphere error shrinks under refinement") {
  double worst_coarse = 0.0, worst_fine = 0.0;
  for (auto [sub, worst] :
       {std::pair<int, double*>{2, &worst_coarse}, {3, &worst_fine}}) {
    auto mesh = make_icosphere(sub, 1.0);
    auto frames = face_frames(mesh);
    auto A = weingarten(mesh, frames, vertex_normals(mesh, frames));
    for (const auto& a : A) *worst = std::max(*worst, std::abs(a.trace() - 2.0));
  }
  CHECK(worst_fine < worst_coarse);
}

TEST_CASE("lumped inner products: symmetry, positivity, area identity") {
  auto mesh = make_icosphere(2, 1.0);
  auto frames = face_frames(mesh);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  VertexScalarField u(mesh.vertex_count()), v(mesh.vertex_count());
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    u[k] = coef(rng);
    v[k] = coef(rng);
  }
  CHECK(inner_lumped_scalar(mesh, frames, u, v) ==
        Catch::Approx(inner_lumped_scalar(mesh, frames, v, u)));
  CHECK(inner_lumped_scalar(mesh, frames, u, u) > 0.0);

  VertexScalarField ones = VertexScalarField::Ones(mesh.vertex_count());
  CHECK(inner_lumped_scalar(mesh, frames, ones, ones) ==
        Catch::Approx(total_area(mesh)).epsilon(1e-12));

  VertexVectorField w(mesh.vertex_count());
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    w[k] = Vec3(u[k], v[k], u[k] - v[k]);
  }
  CHECK(inner_lumped_vector(mesh, frames, w, w) >= 0.0);

  FaceMatrixField M(mesh.triangle_count(), Eigen::Matrix3d::Identity());
  CHECK(inner_lumped_matrix(mesh, frames, M, M) ==
        Catch::Approx(3.0 * total_area(mesh)).epsilon(1e-12));
}

TEST_CASE("field shape mismatches are rejected") {
  auto mesh = make_icosphere(1, 1.0);
  auto frames = face_frames(mesh);
  VertexScalarField wrong = VertexScalarField::Zero(mesh.vertex_count() + 1);
  CHECK_THROWS_AS(surface_gradient_scalar(mesh, frames, wrong), ShapeError);
  VertexVectorField wrong_vec(mesh.vertex_count() - 1, Vec3::Zero());
  CHECK_THROWS_AS(surface_gradient_vector(mesh, frames, wrong_vec),
                  ShapeError);
  FaceMatrixField wrong_mat(3, Eigen::Matrix3d::Zero());
  CHECK_THROWS_AS(inner_lumped_matrix(mesh, frames, wrong_mat, wrong_mat),
                  ShapeError);
}

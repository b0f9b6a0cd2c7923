#include "catch_amalgamated.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "geoflow/mesh.hpp"
#include "geoflow/obj_io.hpp"

using namespace geoflow;

namespace {
const double kPi = 3.14159265358979323846;

std::string temp_path(const std::string& name) {
  return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
         "/" + name;
}
}  // namespace

TEST_CASE("icosphere vertex/triangle counts follow 4-to-1 subdivision") {
  auto level0 = make_icosphere(0, 1.0);
  CHECK(level0.vertex_count() == 12);
  CHECK(level0.triangle_count() == 20);

  auto level1 = make_icosphere(1, 1.0);
  CHECK(level1.vertex_count() == 42);
  CHECK(level1.triangle_count() == 80);

  auto level2 = make_icosphere(2, 1.0);
  CHECK(level2.vertex_count() == 162);
  CHECK(level2.triangle_count() == 320);
}

TEST_CASE("generated meshes validate as closed oriented surfaces") {
  for (const auto& mesh :
       {make_icosphere(2, 1.0), make_ellipsoid(2.0, 1.0, 2),
        make_torus(std::sqrt(2.0), std::sqrt(2.0) / 2.0, 16, 8)}) {
    auto report = validate(mesh);
    CHECK(report.is_closed);
    CHECK(report.is_oriented);
    CHECK(report.min_area > 0.0);
  }
  CHECK(validate(make_icosphere(2, 1.0)).genus == 0);
  CHECK(validate(make_torus(2.0, 0.5, 16, 8)).genus == 1);
}

TEST_CASE("icosphere vertices lie on the sphere and volume converges") {
  double radius = 1.7;
  double exact = 4.0 / 3.0 * kPi * radius * radius * radius;
  double previous_error = 1e300;
  for (int sub : {1, 2, 3}) {
    auto mesh = make_icosphere(sub, radius);
    for (const auto& v : mesh.vertices) {
      CHECK(std::abs(v.norm() - radius) < 1e-12 * radius);
    }
    double vol = enclosed_volume(mesh);
    CHECK(vol > 0.0);
    CHECK(vol < exact);  // inscribed polyhedron
    double error = exact - vol;
    CHECK(error < previous_error / 3.0);  // ~4x per level
    previous_error = error;
  }
  CHECK(std::abs(enclosed_volume(make_icosphere(3, radius)) - exact) <
        0.01 * exact);
}

TEST_CASE("ellipsoid and torus volumes approach the analytic values") {
  // x^2/a + y^2/b + z^2 = 1 has semi-axes sqrt(a), sqrt(b), 1.
  double a = 2.0, b = 1.0;
  double exact_ell = 4.0 / 3.0 * kPi * std::sqrt(a * b);
  double vol_ell = enclosed_volume(make_ellipsoid(a, b, 3));
  CHECK(std::abs(vol_ell - exact_ell) < 0.01 * exact_ell);

  double R = std::sqrt(2.0), r = std::sqrt(2.0) / 2.0;
  double exact_torus = 2.0 * kPi * kPi * R * r * r;
  double vol_torus = enclosed_volume(make_torus(R, r, 48, 24));
  CHECK(std::abs(vol_torus - exact_torus) < 0.02 * exact_torus);
}

TEST_CASE("closed-surface area vectors sum to zero") {
  for (const auto& mesh :
       {make_icosphere(3, 1.0), make_torus(2.0, 0.7, 24, 12)}) {
    Vec3 sum = Vec3::Zero();
    double total = 0.0;
    for (const auto& tri : mesh.triangles) {
      Vec3 cross = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                       .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
      sum += 0.5 * cross;
      total += 0.5 * cross.norm();
    }
    CHECK(sum.norm() < 1e-10 * total);
  }
}

TEST_CASE("mesh_size is the max sqrt face area and scales linearly") {
  auto mesh = make_icosphere(2, 1.0);
  double h = mesh_size(mesh);
  CHECK(h > 0.0);
  auto scaled = mesh;
  for (auto& v : scaled.vertices) v *= 3.0;
  CHECK(mesh_size(scaled) == Catch::Approx(3.0 * h).epsilon(1e-12));
  // One subdivision level roughly halves h.
  double h_fine = mesh_size(make_icosphere(3, 1.0));
  CHECK(h_fine < 0.6 * h);
  CHECK(h_fine > 0.4 * h);
}

TEST_CASE("validate flags holes and inconsistent orientation") {
  auto mesh = make_icosphere(1, 1.0);

  auto holed = mesh;
  holed.triangles.pop_back();
  auto hole_report = validate(holed);
  CHECK_FALSE(hole_report.is_closed);

  auto flipped = mesh;
  std::swap(flipped.triangles[0][0], flipped.triangles[0][1]);
  auto flip_report = validate(flipped);
  CHECK_FALSE(flip_report.is_oriented);

  CHECK_THROWS_AS(enclosed_volume(holed), PreconditionError);
}

TEST_CASE("generator preconditions") {
  CHECK_THROWS_AS(make_icosphere(-1, 1.0), PreconditionError);
  CHECK_THROWS_AS(make_icosphere(2, 0.0), PreconditionError);
  CHECK_THROWS_AS(make_icosphere(8, 1.0), SizeError);
  CHECK_THROWS_AS(make_ellipsoid(-1.0, 1.0, 2), PreconditionError);
  CHECK_THROWS_AS(make_torus(0.5, 1.0, 16, 8), PreconditionError);  // R <= r
  CHECK_THROWS_AS(make_torus(2.0, 0.5, 2, 8), PreconditionError);
}

TEST_CASE("obj round trip preserves geometry and connectivity") {
  auto mesh = make_ellipsoid(2.0, 1.0, 2);
  auto path = temp_path("roundtrip.obj");
  write_obj(mesh, path);
  auto back = read_obj(path);
  REQUIRE(back.vertex_count() == mesh.vertex_count());
  REQUIRE(back.triangle_count() == mesh.triangle_count());
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    CHECK((back.vertices[k] - mesh.vertices[k]).norm() == 0.0);  // %.17g
  }
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    CHECK(back.triangles[j] == mesh.triangles[j]);
  }
  std::remove(path.c_str());
}

TEST_CASE("obj reader rejects malformed input with line numbers") {
  auto path = temp_path("bad.obj");

  {
    std::ofstream out(path);
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n";
  }
  CHECK_THROWS_WITH(read_obj(path), Catch::Matchers::ContainsSubstring("5"));

  {
    std::ofstream out(path);
    out << "v 0 0\n";
  }
  CHECK_THROWS_AS(read_obj(path), ParseError);

  {
    std::ofstream out(path);
  }
  CHECK_THROWS_AS(read_obj(path), ParseError);

  CHECK_THROWS_AS(read_obj(temp_path("does_not_exist.obj")), Error);
  std::remove(path.c_str());
}

TEST_CASE("obj reader accepts slash-form face records") {
  auto path = temp_path("slash.obj");
  {
    std::ofstream out(path);
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        << "vn 0 0 1\nvt 0 0\n"
        << "f 1/1/1 2/1/1 3/1/1\n";
  }
  auto mesh = read_obj(path);
  REQUIRE(mesh.triangle_count() == 1);
  CHECK(mesh.triangles[0] == std::array<int, 3>{0, 1, 2});
  std::remove(path.c_str());
}

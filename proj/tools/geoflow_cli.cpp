// geoflow: curvature-dependent geometric gradient flows of closed surfaces.
//
// Subcommands:
//   run       evolve a surface, writing energy.csv, OBJ frames, and a summary
//   converge  mesh-refinement convergence study under tau = h^2 / 180
//   validate  check an OBJ mesh for closedness, orientation, degeneracy

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "geoflow/diagnostics.hpp"
#include "geoflow/flow.hpp"
#include "geoflow/mesh.hpp"
#include "geoflow/obj_io.hpp"

namespace fs = std::filesystem;

namespace {

struct SurfaceOptions {
  std::string kind = "sphere";
  double radius = 1.0;
  int subdivisions = 3;
  double a = 2.0, b = 1.0;  // ellipsoid axes
  double R = std::sqrt(2.0), r = std::sqrt(2.0) / 2.0;
  int n_major = 48, n_minor = 24;
};

geoflow::SurfaceMesh build_surface(const SurfaceOptions& s, int extra_subdiv = 0) {
  if (s.kind == "sphere") {
    return geoflow::make_icosphere(s.subdivisions + extra_subdiv, s.radius);
  }
  if (s.kind == "ellipsoid") {
    return geoflow::make_ellipsoid(s.a, s.b, s.subdivisions + extra_subdiv);
  }
  if (s.kind == "torus") {
    int scale = 1 << extra_subdiv;
    return geoflow::make_torus(s.R, s.r, s.n_major * scale, s.n_minor * scale);
  }
  throw CLI::ValidationError("--surface",
                             "unknown surface kind '" + s.kind +
                                 "' (expected sphere, ellipsoid, or torus)");
}

void add_surface_options(CLI::App* cmd, SurfaceOptions& s) {
  cmd->add_option("--surface", s.kind, "Surface kind: sphere, ellipsoid, torus")
      ->capture_default_str();
  cmd->add_option("--radius", s.radius, "Sphere radius")->capture_default_str();
  cmd->add_option("--subdiv", s.subdivisions,
                  "Icosphere subdivision level (sphere, ellipsoid)")
      ->capture_default_str();
  cmd->add_option("--a", s.a, "Ellipsoid: x^2/a + y^2/b + z^2 = 1")
      ->capture_default_str();
  cmd->add_option("--b", s.b, "Ellipsoid: x^2/a + y^2/b + z^2 = 1")
      ->capture_default_str();
  cmd->add_option("--R", s.R, "Torus major radius")->capture_default_str();
  cmd->add_option("--r", s.r, "Torus minor radius")->capture_default_str();
  cmd->add_option("--nmajor", s.n_major, "Torus major grid count")
      ->capture_default_str();
  cmd->add_option("--nminor", s.n_minor, "Torus minor grid count")
      ->capture_default_str();
}

int cmd_run(const SurfaceOptions& surface, const std::string& density_name,
            double tau, double t_end, int frame_stride, double newton_tol,
            double alpha0, double alpha_factor, const std::string& out_dir) {
  if (!fs::is_directory(out_dir)) {
    std::cerr << "error: output directory '" << out_dir
              << "' does not exist\n";
    return 2;
  }
  geoflow::StepConfig config;
  config.tau = tau;
  config.newton_tol = newton_tol;
  config.alpha0 = alpha0;
  config.alpha_factor = alpha_factor;
  config.density = geoflow::EnergyDensity::by_name(density_name);

  geoflow::SurfaceMesh mesh = build_surface(surface);
  geoflow::FlowState state = geoflow::initial_state(mesh, alpha0);
  std::cout << "surface: " << surface.kind << ", K = " << mesh.vertex_count()
            << ", J = " << mesh.triangle_count()
            << ", h = " << geoflow::mesh_size(mesh) << "\n";

  std::vector<geoflow::EnergyRecord> records;
  auto record_state = [&](const geoflow::FlowState& st,
                          const geoflow::StepStats& stats, int iters) {
    geoflow::FaceFrames frames = geoflow::face_frames(st.mesh);
    geoflow::EnergyRecord rec;
    rec.step = st.step_index;
    rec.time = st.time;
    rec.energy = geoflow::discrete_energy(st.mesh, frames, st.curvature,
                                          config.density);
    rec.area = geoflow::total_area(st.mesh);
    rec.volume = geoflow::enclosed_volume(st.mesh);
    rec.v_l2 = stats.v_l2;
    rec.beta_max = stats.beta_max;
    rec.alpha = st.alpha;
    rec.newton_iters = iters;
    records.push_back(rec);
  };
  record_state(state, geoflow::StepStats{}, 0);

  char frame_name[64];
  auto write_frame = [&](const geoflow::FlowState& st) {
    std::snprintf(frame_name, sizeof(frame_name), "frame_%06d.obj",
                  st.step_index);
    geoflow::write_obj(st.mesh, (fs::path(out_dir) / frame_name).string());
  };
  write_frame(state);

  int max_iters = 0;
  auto hook = [&](const geoflow::FlowState& st,
                  const geoflow::StepStats& stats) {
    record_state(st, stats, stats.newton_iters);
    max_iters = std::max(max_iters, stats.newton_iters);
    if (frame_stride > 0 && st.step_index % frame_stride == 0) write_frame(st);
  };

  geoflow::RunSummary summary;
  try {
    summary = geoflow::run(state, config, t_end, hook);
  } catch (const geoflow::Error& e) {
    geoflow::write_energy_csv((fs::path(out_dir) / "energy.csv").string(),
                              records);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  geoflow::write_energy_csv((fs::path(out_dir) / "energy.csv").string(),
                            records);
  write_frame(summary.final_state);

  std::ofstream summary_file(fs::path(out_dir) / "summary");
  summary_file << "final_energy " << geoflow::format_sig(records.back().energy)
               << "\n"
               << "total_steps " << summary.final_state.step_index << "\n"
               << "max_newton_iters " << max_iters << "\n"
               << "completed " << (summary.completed ? 1 : 0) << "\n";
  if (!summary.completed) {
    std::cerr << "error at step " << summary.failed_step << ": "
              << summary.failure << "\n";
    return 1;
  }
  std::cout << "final energy " << geoflow::format_sig(records.back().energy)
            << " after " << summary.final_state.step_index << " steps\n";
  return 0;
}

int cmd_converge(const SurfaceOptions& surface, const std::string& density_name,
                 int levels, const std::vector<double>& checkpoints,
                 double tau_override, bool allow_free_tau,
                 const std::string& out_dir, int resolution) {
  if (levels < 3) {
    std::cerr << "error: at least 3 levels are required\n";
    return 2;
  }
  if (tau_override > 0.0 && !allow_free_tau) {
    std::cerr << "error: --tau overrides the tau = h^2/180 protocol; pass "
                 "--allow-free-tau to accept\n";
    return 2;
  }
  if (!fs::is_directory(out_dir)) {
    std::cerr << "error: output directory '" << out_dir
              << "' does not exist\n";
    return 2;
  }

  std::vector<geoflow::SurfaceMesh> coarse;
  for (int level = 0; level < levels; ++level) {
    coarse.push_back(build_surface(surface, level));
  }
  geoflow::SurfaceMesh reference = build_surface(surface, levels);

  auto table = geoflow::convergence_study(
      coarse, reference, geoflow::EnergyDensity::by_name(density_name),
      checkpoints, 1e6, resolution);
  geoflow::write_convergence_csv(
      (fs::path(out_dir) / "convergence.csv").string(), table);

  std::cout << "h            tau          t        error        order\n";
  for (const auto& row : table.rows) {
    std::printf("%-12.5g %-12.5g %-8.4g %-12.5g %-8.3f\n", row.h, row.tau,
                row.t, row.error, row.order);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  geoflow::SurfaceMesh mesh;
  try {
    mesh = geoflow::read_obj(path);
  } catch (const geoflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  geoflow::MeshReport report = geoflow::validate(mesh);
  std::cout << "vertices              " << mesh.vertex_count() << "\n"
            << "triangles             " << mesh.triangle_count() << "\n"
            << "is_closed             " << (report.is_closed ? "yes" : "no")
            << "\n"
            << "is_oriented           " << (report.is_oriented ? "yes" : "no")
            << "\n"
            << "min_area              " << report.min_area << "\n"
            << "euler_characteristic  " << report.euler_characteristic << "\n";
  if (report.genus >= 0) std::cout << "genus                 " << report.genus << "\n";
  bool ok = report.is_closed && report.is_oriented && report.min_area > 0.0;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature-dependent geometric gradient flows of closed "
               "triangulated surfaces"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value configuration file");

  SurfaceOptions surface;
  std::string density = "willmore";
  std::string out_dir = ".";
  double tau = 1e-3, t_end = 1.0, newton_tol = 1e-10;
  double alpha0 = 1e6, alpha_factor = 5.0;
  int frame_stride = 50;

  auto* run_cmd = app.add_subcommand("run", "Evolve a surface under a flow");
  add_surface_options(run_cmd, surface);
  run_cmd->add_option("--density", density,
                      "area | mean-curvature-integral | willmore | quartic")
      ->capture_default_str();
  run_cmd->add_option("--tau", tau, "Time step size")->capture_default_str();
  run_cmd->add_option("--t-end", t_end, "Final time")->capture_default_str();
  run_cmd->add_option("--newton-tol", newton_tol, "Newton tolerance")
      ->capture_default_str();
  run_cmd->add_option("--alpha0", alpha0, "Initial tangential penalty")
      ->capture_default_str();
  run_cmd->add_option("--alpha-factor", alpha_factor,
                      "Adaptive alpha factor C")
      ->capture_default_str();
  run_cmd->add_option("--frame-stride", frame_stride,
                      "Write an OBJ frame every N steps (0 = endpoints only)")
      ->capture_default_str();
  run_cmd->add_option("--out", out_dir, "Output directory (must exist)")
      ->capture_default_str();

  int levels = 3;
  std::vector<double> checkpoints = {0.0125, 0.025};
  double tau_override = -1.0;
  bool allow_free_tau = false;
  int resolution = 128;
  auto* conv_cmd =
      app.add_subcommand("converge", "Mesh-refinement convergence study");
  add_surface_options(conv_cmd, surface);
  conv_cmd->add_option("--density", density,
                       "area | mean-curvature-integral | willmore | quartic")
      ->capture_default_str();
  conv_cmd->add_option("--levels", levels, "Number of coarse levels (>= 3)")
      ->capture_default_str();
  conv_cmd->add_option("--checkpoints", checkpoints, "Checkpoint times")
      ->capture_default_str();
  conv_cmd->add_option("--tau", tau_override,
                       "Override tau (violates the h^2/180 protocol)");
  conv_cmd->add_flag("--allow-free-tau", allow_free_tau,
                     "Accept a tau override");
  conv_cmd->add_option("--resolution", resolution,
                       "Voxel resolution for the manifold distance")
      ->capture_default_str();
  conv_cmd->add_option("--out", out_dir, "Output directory (must exist)")
      ->capture_default_str();

  std::string validate_path;
  auto* val_cmd = app.add_subcommand("validate", "Validate an OBJ mesh");
  val_cmd->add_option("path", validate_path, "OBJ file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(surface, density, tau, t_end, frame_stride, newton_tol,
                     alpha0, alpha_factor, out_dir);
    }
    if (conv_cmd->parsed()) {
      return cmd_converge(surface, density, levels, checkpoints, tau_override,
                          allow_free_tau, out_dir, resolution);
    }
    if (val_cmd->parsed()) {
      return cmd_validate(validate_path);
    }
  } catch (const geoflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}

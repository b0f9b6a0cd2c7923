#pragma once

// Discrete energies, the manifold distance, mesh-quality metrics, and the
// convergence-study harness.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/flow.hpp"
#include "geoflow/mesh.hpp"

namespace geoflow {

struct EnergyRecord {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;
  double area = 0.0;
  double volume = 0.0;
  double v_l2 = 0.0;
  double beta_max = 0.0;
  double alpha = 0.0;
  int newton_iters = 0;
};

inline int thread_budget() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("GEOFLOW_THREADS")) {
    int requested = std::atoi(cap);
    if (requested >= 1) n = requested;
  }
  return n;
}

namespace detail {

// z-crossings of the vertical line through (x, y) with the mesh, counted by
// ray parity. A closed mesh yields an even count; ties on edges are broken
// by nudging the line, so the classification is deterministic.
inline bool column_crossings(const SurfaceMesh& mesh, double x, double y,
                             std::vector<double>& out) {
  out.clear();
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    double d1 = (b.x() - a.x()) * (y - a.y()) - (b.y() - a.y()) * (x - a.x());
    double d2 = (c.x() - b.x()) * (y - b.y()) - (c.y() - b.y()) * (x - b.x());
    double d3 = (a.x() - c.x()) * (y - c.y()) - (a.y() - c.y()) * (x - c.x());
    double denom = d1 + d2 + d3;
    if (denom == 0.0) continue;  // vertical face: no transversal crossing
    bool pos = d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0;
    bool neg = d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0;
    if (!pos && !neg) continue;  // strictly outside the projected triangle
    if (d1 == 0.0 || d2 == 0.0 || d3 == 0.0) return false;  // on an edge
    // Barycentric interpolation of z at (x, y).
    out.push_back((d2 * a.z() + d3 * b.z() + d1 * c.z()) / denom);
  }
  if (out.size() % 2 != 0) return false;
  std::sort(out.begin(), out.end());
  return true;
}

inline bool inside_from_crossings(const std::vector<double>& crossings,
                                  double z) {
  auto it = std::upper_bound(crossings.begin(), crossings.end(), z);
  return (std::distance(crossings.begin(), it) % 2) == 1;
}

}  // namespace detail

struct ManifoldDistanceResult {
  double value = 0.0;
  double error_bound = 0.0;  // cell volume x boundary-cell count
};

// Symmetric-difference volume M = |Omega| + |Omega'| - 2 |intersection|.
// Enclosed volumes are exact; the intersection is estimated on a uniform
// resolution^3 voxel grid over the joint bounding box with cell centers
// classified by ray parity.
inline ManifoldDistanceResult manifold_distance_report(const SurfaceMesh& a,
                                                       const SurfaceMesh& b,
                                                       int resolution = 128) {
  if (resolution < 32) throw PreconditionError("resolution must be >= 32");
  double vol_a = enclosed_volume(a);  // also enforces closed + oriented
  double vol_b = enclosed_volume(b);

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const SurfaceMesh* mesh : {&a, &b}) {
    for (const auto& v : mesh->vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  Vec3 extent = hi - lo;
  lo -= 1e-6 * extent;
  hi += 1e-6 * extent;
  extent = hi - lo;
  const double dx = extent.x() / resolution;
  const double dy = extent.y() / resolution;
  const double dz = extent.z() / resolution;
  const double cell_volume = dx * dy * dz;

  const int n_threads = thread_budget();
  std::vector<long> inside_counts(n_threads, 0);
  std::vector<long> boundary_counts(n_threads, 0);

  auto work = [&](int tid) {
    std::vector<double> cross_a, cross_b;
    long inside = 0, boundary = 0;
    for (int ix = tid; ix < resolution; ix += n_threads) {
      for (int iy = 0; iy < resolution; ++iy) {
        double x = lo.x() + (ix + 0.5) * dx;
        double y = lo.y() + (iy + 0.5) * dy;
        // Nudge the column off any edge it hits exactly.
        for (int attempt = 0; attempt < 8; ++attempt) {
          if (detail::column_crossings(a, x, y, cross_a) &&
              detail::column_crossings(b, x, y, cross_b)) {
            break;
          }
          x += (attempt + 1) * 3.1e-9 * dx;
          y += (attempt + 1) * 1.7e-9 * dy;
          cross_a.clear();
          cross_b.clear();
        }
        std::set<int> boundary_cells;
        for (const auto* crossings : {&cross_a, &cross_b}) {
          for (double z : *crossings) {
            int iz = static_cast<int>((z - lo.z()) / dz);
            boundary_cells.insert(std::clamp(iz, 0, resolution - 1));
          }
        }
        boundary += static_cast<long>(boundary_cells.size());
        for (int iz = 0; iz < resolution; ++iz) {
          double z = lo.z() + (iz + 0.5) * dz;
          if (detail::inside_from_crossings(cross_a, z) &&
              detail::inside_from_crossings(cross_b, z)) {
            ++inside;
          }
        }
      }
    }
    inside_counts[tid] = inside;
    boundary_counts[tid] = boundary;
  };

  if (n_threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  long inside_total = 0, boundary_total = 0;
  for (int t = 0; t < n_threads; ++t) {
    inside_total += inside_counts[t];
    boundary_total += boundary_counts[t];
  }
  ManifoldDistanceResult result;
  result.value = vol_a + vol_b - 2.0 * cell_volume * inside_total;
  result.error_bound = cell_volume * boundary_total;
  return result;
}

inline double manifold_distance(const SurfaceMesh& a, const SurfaceMesh& b,
                                int resolution = 128) {
  return manifold_distance_report(a, b, resolution).value;
}

struct MeshQuality {
  double area_ratio = 1.0;     // max |sigma| / min |sigma|
  double min_angle_deg = 0.0;  // smallest interior angle of any face
  double max_aspect = 1.0;     // longest edge / shortest altitude, worst face
};

inline MeshQuality mesh_quality(const SurfaceMesh& mesh) {
  MeshQuality q;
  double min_area = std::numeric_limits<double>::infinity();
  double max_area = 0.0;
  double min_angle = std::numeric_limits<double>::infinity();
  double max_aspect = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    double area = triangle_area(a, b, c);
    min_area = std::min(min_area, area);
    max_area = std::max(max_area, area);
    double lab = (b - a).norm(), lbc = (c - b).norm(), lca = (a - c).norm();
    double longest = std::max({lab, lbc, lca});
    double shortest_altitude = (area > 0.0) ? 2.0 * area / longest : 0.0;
    max_aspect = std::max(
        max_aspect, shortest_altitude > 0.0
                        ? longest / shortest_altitude
                        : std::numeric_limits<double>::infinity());
    auto angle = [](const Vec3& u, const Vec3& v) {
      return std::atan2(u.cross(v).norm(), u.dot(v));
    };
    min_angle = std::min({min_angle, angle(b - a, c - a), angle(c - b, a - b),
                          angle(a - c, b - c)});
  }
  q.area_ratio = (min_area > 0.0) ? max_area / min_area
                                  : std::numeric_limits<double>::infinity();
  q.min_angle_deg = min_angle * 180.0 / M_PI;
  q.max_aspect = max_aspect;
  return q;
}

struct ConvergenceRow {
  double h = 0.0;
  double tau = 0.0;
  double t = 0.0;
  double error = 0.0;
  double order = 0.0;  // fitted against the previous coarser level; 0 if none
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
};

inline std::string format_sig(double value, int digits = 12) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << value;
  return ss.str();
}

inline void write_energy_csv(const std::string& path,
                             const std::vector<EnergyRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "step,time,energy,area,volume,v_l2,beta_max,alpha,newton_iters\n";
  for (const auto& r : records) {
    out << r.step << ',' << format_sig(r.time) << ',' << format_sig(r.energy)
        << ',' << format_sig(r.area) << ',' << format_sig(r.volume) << ','
        << format_sig(r.v_l2) << ',' << format_sig(r.beta_max) << ','
        << format_sig(r.alpha) << ',' << r.newton_iters << '\n';
  }
}

inline void write_convergence_csv(const std::string& path,
                                  const ConvergenceTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "h,tau,t,error,order\n";
  for (const auto& row : table.rows) {
    out << format_sig(row.h) << ',' << format_sig(row.tau) << ','
        << format_sig(row.t) << ',' << format_sig(row.error) << ','
        << format_sig(row.order) << '\n';
  }
}

// Reference-solution convergence test: each level is evolved with
// tau = h^2 / 180 and compared, via the manifold distance, against a finer
// reference mesh evolved the same way. Checkpoints are evaluated at the
// nearest step of each level.
inline ConvergenceTable convergence_study(
    const std::vector<SurfaceMesh>& levels, const SurfaceMesh& reference,
    const EnergyDensity& density, const std::vector<double>& t_checkpoints,
    double alpha0 = 1e6, int voxel_resolution = 128) {
  if (levels.size() < 2) {
    throw ProtocolError("convergence study needs at least 2 coarse levels");
  }
  if (t_checkpoints.empty()) {
    throw ProtocolError("convergence study needs at least one checkpoint");
  }

  auto snapshots_for = [&](const SurfaceMesh& mesh, double& h_out,
                           double& tau_out) {
    double h = mesh_size(mesh);
    double tau = h * h / 180.0;
    h_out = h;
    tau_out = tau;
    StepConfig config;
    config.tau = tau;
    config.density = density;
    config.alpha0 = alpha0;
    FlowState state = initial_state(mesh, alpha0);
    SparseDirectSolver solver;
    std::vector<SurfaceMesh> snapshots;
    size_t next_checkpoint = 0;
    double t_last = t_checkpoints.back();
    while (next_checkpoint < t_checkpoints.size()) {
      double target = t_checkpoints[next_checkpoint];
      long steps_to_target = std::lround(target / tau);
      if (state.step_index >= steps_to_target || state.time >= t_last + tau) {
        snapshots.push_back(state.mesh);
        ++next_checkpoint;
        continue;
      }
      auto [next, stats] = step(state, config, &solver);
      state = std::move(next);
    }
    return snapshots;
  };

  double h_ref = 0.0, tau_ref = 0.0;
  auto ref_snapshots = snapshots_for(reference, h_ref, tau_ref);

  ConvergenceTable table;
  std::vector<std::vector<double>> errors(levels.size());
  std::vector<double> hs(levels.size());
  for (size_t level = 0; level < levels.size(); ++level) {
    double h = 0.0, tau = 0.0;
    auto snapshots = snapshots_for(levels[level], h, tau);
    hs[level] = h;
    for (size_t cp = 0; cp < t_checkpoints.size(); ++cp) {
      double error = manifold_distance(snapshots[cp], ref_snapshots[cp],
                                       voxel_resolution);
      errors[level].push_back(error);
      ConvergenceRow row;
      row.h = h;
      row.tau = tau;
      row.t = t_checkpoints[cp];
      row.error = error;
      if (level > 0) {
        row.order = std::log(errors[level - 1][cp] / error) /
                    std::log(hs[level - 1] / h);
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace geoflow

#pragma once

// The fully discrete energy-stable scheme with tangential-velocity control,
// its exact Newton linearization, the sparse solve, adaptive alpha, and time
// stepping for the energy-density family f(H).
//
// Unknowns per time step, stacked as [X (3K), V (K), beta1 (K), beta2 (K),
// H (K)]; residual rows use the matching test-function ordering. With
// tangential control disabled the beta blocks drop out and the system is the
// plain 5K scheme.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "geoflow/discrete_ops.hpp"
#include "geoflow/energy.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/mesh.hpp"

namespace geoflow {

struct FlowState {
  SurfaceMesh mesh;           // Gamma^m with identity parameterization X^m
  VertexScalarField curvature;  // H^m
  double alpha = 1e6;           // alpha^m
  double time = 0.0;            // t_m
  int step_index = 0;           // m
};

struct StepConfig {
  double tau = 1e-3;
  double newton_tol = 1e-10;
  int max_newton_iters = 50;
  double alpha0 = 1e6;
  double alpha_factor = 5.0;  // C > 1
  double beta_upper = 1e-4;
  double beta_lower = 1e-6;
  EnergyDensity density = EnergyDensity::willmore();
  bool tangential_control = true;
};

struct NewtonIterate {
  VertexVectorField positions;  // X^{m+1,l}
  VertexScalarField velocity;   // V^{m+1,l}
  VertexScalarField beta1;
  VertexScalarField beta2;
  VertexScalarField curvature;  // H^{m+1,l}
};

struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

struct StepStats {
  int newton_iters = 0;
  double v_l2 = 0.0;      // ((V,V)^h)^{1/2}
  double beta_max = 0.0;  // max_k max(|beta1|, |beta2|)
  double energy = 0.0;    // W^{m+1}
};

// Everything the residual/Jacobian need that is fixed on Gamma^m.
struct StepGeometry {
  FaceFrames frames;
  std::vector<std::array<Vec3, 3>> hat_grads;  // per face, per corner
  FaceMatrixField weingarten_map;              // A^m
  VertexScalarField lumped_area;               // sum_{sigma ni k} |sigma| / 3

  static StepGeometry build(const SurfaceMesh& mesh) {
    StepGeometry geom;
    geom.frames = face_frames(mesh);
    geom.hat_grads.resize(mesh.triangles.size());
    for (int j = 0; j < mesh.triangle_count(); ++j) {
      geom.hat_grads[j] = hat_gradients(mesh, geom.frames, j);
    }
    geom.weingarten_map =
        weingarten(mesh, geom.frames, vertex_normals(mesh, geom.frames));
    geom.lumped_area = VertexScalarField::Zero(mesh.vertex_count());
    for (int j = 0; j < mesh.triangle_count(); ++j) {
      for (int c = 0; c < 3; ++c) {
        geom.lumped_area[mesh.triangles[j][c]] += geom.frames[j].area / 3.0;
      }
    }
    return geom;
  }
};

namespace detail {

// Block layout helpers. With tangential control the unknown vector is
// [X(3K), V(K), b1(K), b2(K), H(K)]; without it, [X(3K), V(K), H(K)].
struct BlockLayout {
  int K;
  bool tangential;
  int dimension() const { return tangential ? 7 * K : 5 * K; }
  int x(int k, int d) const { return 3 * k + d; }
  int v(int k) const { return 3 * K + k; }
  int b1(int k) const { return 4 * K + k; }
  int b2(int k) const { return 5 * K + k; }
  int h(int k) const { return tangential ? 6 * K + k : 4 * K + k; }
};

inline void check_iterate_shape(const SurfaceMesh& mesh,
                                const NewtonIterate& it) {
  const int K = mesh.vertex_count();
  if (static_cast<int>(it.positions.size()) != K || it.velocity.size() != K ||
      it.beta1.size() != K || it.beta2.size() != K || it.curvature.size() != K) {
    throw ShapeError("Newton iterate field lengths do not match vertex count");
  }
}

}  // namespace detail

// Stacked nodal residual of the implicit scheme at the given iterate; zero
// (to solver tolerance) exactly when the iterate solves the step.
inline Eigen::VectorXd residual(const FlowState& state,
                                const StepGeometry& geom,
                                const NewtonIterate& iterate,
                                const StepConfig& config) {
  const SurfaceMesh& mesh = state.mesh;
  detail::check_iterate_shape(mesh, iterate);
  detail::check_scalar_shape(mesh, state.curvature);
  const detail::BlockLayout L{mesh.vertex_count(), config.tangential_control};
  const auto& f = config.density.f;
  const auto& df = config.density.df;
  const double tau = config.tau;
  const double alpha = config.tangential_control ? state.alpha : 0.0;

  Eigen::VectorXd r = Eigen::VectorXd::Zero(L.dimension());

  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const auto& tri = mesh.triangles[j];
    const auto& g = geom.hat_grads[j];
    const FaceFrame& frame = geom.frames[j];
    const Eigen::Matrix3d& A = geom.weingarten_map[j];
    const double w3 = frame.area / 3.0;

    // Face-constant quantities built from the iterate.
    double s0 = 0.0, s1 = 0.0;     // sum_c f(H_c), sum_c f'(H_c)
    Vec3 grad_fp = Vec3::Zero();   // grad_Gamma of interpolated f'(H)
    Eigen::Matrix3d P = Eigen::Matrix3d::Zero();  // grad_Gamma X^{m+1}
    Eigen::Matrix3d D = Eigen::Matrix3d::Zero();  // grad_Gamma (X^{m+1}-X^m)
    for (int c = 0; c < 3; ++c) {
      int k = tri[c];
      double hc = iterate.curvature[k];
      s0 += f(hc);
      s1 += df(hc);
      grad_fp += df(hc) * g[c];
      P += iterate.positions[k] * g[c].transpose();
      D += (iterate.positions[k] - mesh.vertices[k]) * g[c].transpose();
    }

    for (int c = 0; c < 3; ++c) {
      int k = tri[c];
      const Vec3 dx = iterate.positions[k] - mesh.vertices[k];

      // (a): ((X^{m+1}-X^m)/tau . n - V, phi_k)^h
      r[L.v(k)] += w3 * (dx.dot(frame.normal) / tau - iterate.velocity[k]);

      // (b): ((X^{m+1}-X^m) . tau_i, psi_k)^h
      if (config.tangential_control) {
        r[L.b1(k)] += w3 * dx.dot(frame.tangent1);
        r[L.b2(k)] += w3 * dx.dot(frame.tangent2);
      }

      // (c): lumped velocity terms against omega = phi_k e_d.
      Vec3 lumped = iterate.velocity[k] * frame.normal;
      if (config.tangential_control) {
        lumped += alpha * (iterate.beta1[k] * frame.tangent1 +
                           iterate.beta2[k] * frame.tangent2);
      }
      // (c): - <f'(H)A - n grad(f')^T - f(H) grad X^{m+1}, grad omega>^h,
      // corner sums collapsed against the face-constant factors.
      Vec3 form = s1 * (A * g[c]) - 3.0 * grad_fp.dot(g[c]) * frame.normal -
                  s0 * (P * g[c]);
      Vec3 row = w3 * (lumped - form);
      for (int d = 0; d < 3; ++d) r[L.x(k, d)] += row[d];

      // (d): (H^{m+1}-H^m, phi_k)^h
      //      - <grad(X^{m+1}-X^m), n grad(phi_k)^T - phi_k A>^h
      r[L.h(k)] += w3 * (iterate.curvature[k] - state.curvature[k]);
      r[L.h(k)] -= 3.0 * w3 * frame.normal.dot(D * g[c]);
      r[L.h(k)] += w3 * D.cwiseProduct(A).sum();
    }
  }
  return r;
}

// Exact linearization of `residual` and right-hand side -residual; solving
// matrix * delta = rhs gives the Newton direction.
inline SparseSystem assemble_newton_system(const FlowState& state,
                                           const StepGeometry& geom,
                                           const NewtonIterate& iterate,
                                           const StepConfig& config) {
  const SurfaceMesh& mesh = state.mesh;
  detail::check_iterate_shape(mesh, iterate);
  const detail::BlockLayout L{mesh.vertex_count(), config.tangential_control};
  const auto& f = config.density.f;
  const auto& df = config.density.df;
  const auto& d2f = config.density.d2f;
  const double tau = config.tau;
  const double alpha = config.tangential_control ? state.alpha : 0.0;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.triangle_count()) * 150);

  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const auto& tri = mesh.triangles[j];
    const auto& g = geom.hat_grads[j];
    const FaceFrame& frame = geom.frames[j];
    const Eigen::Matrix3d& A = geom.weingarten_map[j];
    const double w3 = frame.area / 3.0;

    double s0 = 0.0;
    Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
    for (int c = 0; c < 3; ++c) {
      s0 += f(iterate.curvature[tri[c]]);
      P += iterate.positions[tri[c]] * g[c].transpose();
    }

    for (int c = 0; c < 3; ++c) {
      int k = tri[c];

      // (a) rows: lumped, couple only vertex k.
      for (int d = 0; d < 3; ++d) {
        triplets.emplace_back(L.v(k), L.x(k, d), w3 * frame.normal[d] / tau);
      }
      triplets.emplace_back(L.v(k), L.v(k), -w3);

      // (b) rows.
      if (config.tangential_control) {
        for (int d = 0; d < 3; ++d) {
          triplets.emplace_back(L.b1(k), L.x(k, d), w3 * frame.tangent1[d]);
          triplets.emplace_back(L.b2(k), L.x(k, d), w3 * frame.tangent2[d]);
        }
      }

      // (c) rows for omega = phi_k e_d.
      for (int d = 0; d < 3; ++d) {
        triplets.emplace_back(L.x(k, d), L.v(k), w3 * frame.normal[d]);
      }
      if (config.tangential_control) {
        for (int d = 0; d < 3; ++d) {
          triplets.emplace_back(L.x(k, d), L.b1(k),
                                w3 * alpha * frame.tangent1[d]);
          triplets.emplace_back(L.x(k, d), L.b2(k),
                                w3 * alpha * frame.tangent2[d]);
        }
      }
      for (int a = 0; a < 3; ++a) {
        int ka = tri[a];
        double gag = g[a].dot(g[c]);
        // f(H) grad X^delta term (diagonal 3x3 block in components).
        for (int d = 0; d < 3; ++d) {
          triplets.emplace_back(L.x(k, d), L.x(ka, d), w3 * s0 * gag);
        }
        // Chain-rule terms carrying H^delta at corner a.
        double ha = iterate.curvature[ka];
        Vec3 col = -w3 * d2f(ha) * (A * g[c]) +
                   3.0 * w3 * d2f(ha) * gag * frame.normal +
                   w3 * df(ha) * (P * g[c]);
        for (int d = 0; d < 3; ++d) {
          triplets.emplace_back(L.x(k, d), L.h(ka), col[d]);
        }
      }

      // (d) rows: linear in (X, H).
      triplets.emplace_back(L.h(k), L.h(k), w3);
      for (int a = 0; a < 3; ++a) {
        int ka = tri[a];
        Vec3 row = -3.0 * w3 * g[a].dot(g[c]) * frame.normal + w3 * (A * g[a]);
        for (int d = 0; d < 3; ++d) {
          triplets.emplace_back(L.h(k), L.x(ka, d), row[d]);
        }
      }
    }
  }

  SparseSystem system;
  system.matrix.resize(L.dimension(), L.dimension());
  system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  system.rhs = -residual(state, geom, iterate, config);
  return system;
}

// Sparse direct solve (LU with partial pivoting).
// Sparse direct LU with a cached symbolic factorization: the Newton matrix
// pattern depends only on mesh connectivity and the block layout, so the
// column ordering and elimination tree survive across iterations and steps.
class SparseDirectSolver {
 public:
  Eigen::VectorXd solve(const SparseSystem& system) {
    if (system.matrix.rows() != system.matrix.cols() ||
        system.matrix.rows() != system.rhs.size()) {
      throw ShapeError("sparse system is not square or rhs length mismatches");
    }
    std::vector<char> row_occupied(system.matrix.rows(), 0);
    for (int outer = 0; outer < system.matrix.outerSize(); ++outer) {
      for (Eigen::SparseMatrix<double>::InnerIterator entry(system.matrix,
                                                            outer);
           entry; ++entry) {
        row_occupied[entry.row()] = 1;
      }
    }
    for (int row = 0; row < system.matrix.rows(); ++row) {
      if (!row_occupied[row]) {
        throw SolverError("structurally singular system: empty row " +
                          std::to_string(row));
      }
    }
    if (!analyzed_ || rows_ != system.matrix.rows()) {
      lu_.analyzePattern(system.matrix);
      analyzed_ = true;
      rows_ = system.matrix.rows();
    }
    lu_.factorize(system.matrix);
    if (lu_.info() != Eigen::Success) {
      throw SolverError(
          "sparse LU factorization failed: singular or ill-conditioned matrix");
    }
    Eigen::VectorXd delta = lu_.solve(system.rhs);
    if (lu_.info() != Eigen::Success) {
      throw SolverError("sparse LU back substitution failed");
    }
    return delta;
  }

 private:
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
  Eigen::Index rows_ = -1;
};

inline Eigen::VectorXd solve_sparse(const SparseSystem& system) {
  SparseDirectSolver solver;
  return solver.solve(system);
}

// Guard against a numerically parallel averaged tangent pair at a vertex,
// which would make the beta blocks near-singular.
// Worst vertex conditioning of the averaged tangent pair: the Gram
// determinant of the area-weighted tangent sums, normalized by the incident
// area so the measure is scale invariant. Returns (min quality, vertex).
inline std::pair<double, int> tangent_conditioning(const SurfaceMesh& mesh,
                                                   const StepGeometry& geom) {
  VertexVectorField t1(mesh.vertex_count(), Vec3::Zero());
  VertexVectorField t2(mesh.vertex_count(), Vec3::Zero());
  std::vector<double> star_area(mesh.vertex_count(), 0.0);
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    for (int c = 0; c < 3; ++c) {
      int k = mesh.triangles[j][c];
      t1[k] += geom.frames[j].area * geom.frames[j].tangent1;
      t2[k] += geom.frames[j].area * geom.frames[j].tangent2;
      star_area[k] += geom.frames[j].area;
    }
  }
  double worst = std::numeric_limits<double>::infinity();
  int worst_vertex = -1;
  for (int k = 0; k < mesh.vertex_count(); ++k) {
    double n1 = t1[k].squaredNorm(), n2 = t2[k].squaredNorm();
    double dot = t1[k].dot(t2[k]);
    double gram_det = n1 * n2 - dot * dot;
    double scale = star_area[k] * star_area[k];
    double quality = gram_det / (1e-300 + scale * scale);
    if (quality < worst) {
      worst = quality;
      worst_vertex = k;
    }
  }
  return {worst, worst_vertex};
}

inline void check_tangent_conditioning(const SurfaceMesh& mesh,
                                       const StepGeometry& geom) {
  auto [quality, vertex] = tangent_conditioning(mesh, geom);
  if (quality < 1e-12) {
    throw ConditioningError("near-parallel averaged tangents at vertex " +
                            std::to_string(vertex));
  }
}

// Newton iteration for one implicit step. Initial guess X = X^m, H = H^m,
// V = beta_i = 0; terminates when the max norm of every direction field
// drops to newton_tol.
inline std::pair<NewtonIterate, int> newton_solve(
    const FlowState& state, const StepGeometry& geom, const StepConfig& config,
    SparseDirectSolver* solver = nullptr) {
  SparseDirectSolver local_solver;
  if (!solver) solver = &local_solver;
  const SurfaceMesh& mesh = state.mesh;
  const int K = mesh.vertex_count();
  const detail::BlockLayout L{K, config.tangential_control};
  if (config.tangential_control) check_tangent_conditioning(mesh, geom);

  NewtonIterate it;
  it.positions = mesh.vertices;
  it.velocity = VertexScalarField::Zero(K);
  it.beta1 = VertexScalarField::Zero(K);
  it.beta2 = VertexScalarField::Zero(K);
  it.curvature = state.curvature;

  for (int iter = 1; iter <= config.max_newton_iters; ++iter) {
    SparseSystem system = assemble_newton_system(state, geom, it, config);
    Eigen::VectorXd delta = solver->solve(system);

    double update = 0.0;
    for (int k = 0; k < K; ++k) {
      for (int d = 0; d < 3; ++d) {
        it.positions[k][d] += delta[L.x(k, d)];
        update = std::max(update, std::abs(delta[L.x(k, d)]));
      }
      it.velocity[k] += delta[L.v(k)];
      update = std::max(update, std::abs(delta[L.v(k)]));
      if (config.tangential_control) {
        it.beta1[k] += delta[L.b1(k)];
        it.beta2[k] += delta[L.b2(k)];
        update = std::max(update, std::abs(delta[L.b1(k)]));
        update = std::max(update, std::abs(delta[L.b2(k)]));
      }
      it.curvature[k] += delta[L.h(k)];
      update = std::max(update, std::abs(delta[L.h(k)]));
    }
    if (!std::isfinite(update)) {
      throw NonConvergenceError(
          "Newton iteration diverged (non-finite update); try a smaller tau");
    }
    if (update <= config.newton_tol) return {std::move(it), iter};
  }
  throw NonConvergenceError(
      "Newton iteration did not converge within " +
      std::to_string(config.max_newton_iters) + " iterations; try a smaller tau");
}

// Algorithm-style alpha update from the converged beta fields; beta is the
// max norm over both fields.
inline double adapt_alpha(double alpha, const VertexScalarField& beta1,
                          const VertexScalarField& beta2,
                          const StepConfig& config) {
  double beta = 0.0;
  for (int k = 0; k < beta1.size(); ++k) {
    beta = std::max(beta, std::max(std::abs(beta1[k]), std::abs(beta2[k])));
  }
  if (beta >= config.beta_upper) return alpha * config.alpha_factor;
  if (beta <= config.beta_lower) return alpha / config.alpha_factor;
  return alpha;
}

inline double discrete_energy(const SurfaceMesh& mesh, const FaceFrames& frames,
                              const VertexScalarField& curvature,
                              const EnergyDensity& density) {
  detail::check_scalar_shape(mesh, curvature);
  double energy = 0.0;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const auto& tri = mesh.triangles[j];
    double corner = 0.0;
    for (int c = 0; c < 3; ++c) corner += density.f(curvature[tri[c]]);
    energy += frames[j].area / 3.0 * corner;
  }
  return energy;
}

// One implicit time step Gamma^m -> Gamma^{m+1}.
inline std::pair<FlowState, StepStats> step(
    const FlowState& state, const StepConfig& config,
    SparseDirectSolver* solver = nullptr) {
  // The averaged vertex tangents depend on the per-face corner order; a mesh
  // that drifts toward a symmetric vertex star degrades the order chosen
  // earlier, and a nearly parallel tangent pair inflates the beta fields
  // (and through them the adaptive alpha) long before the hard conditioning
  // threshold trips. Corner rotation is orientation-preserving relabeling,
  // so keep a healthy margin: repair as soon as the worst vertex drops below
  // the maintenance threshold, and only surface the conditioning error if no
  // rotation assignment helps.
  constexpr double kMaintenanceQuality = 1e-6;
  const FlowState* current = &state;
  FlowState repaired;
  StepGeometry geom = StepGeometry::build(current->mesh);
  if (config.tangential_control &&
      tangent_conditioning(current->mesh, geom).first < kMaintenanceQuality) {
    repaired = state;
    detail::condition_corner_order(repaired.mesh);
    current = &repaired;
    geom = StepGeometry::build(current->mesh);
  }
  const FlowState& from = *current;
  auto [iterate, iters] = newton_solve(from, geom, config, solver);

  FlowState next;
  next.mesh.vertices = iterate.positions;
  next.mesh.triangles = from.mesh.triangles;
  next.curvature = iterate.curvature;
  next.alpha = config.tangential_control
                   ? adapt_alpha(state.alpha, iterate.beta1, iterate.beta2,
                                 config)
                   : state.alpha;
  next.time = state.time + config.tau;
  next.step_index = state.step_index + 1;

  FaceFrames next_frames;
  try {
    next_frames = face_frames(next.mesh);
  } catch (const DegenerateElementError& e) {
    throw MeshCollapseError(std::string("mesh collapsed after step: ") +
                                e.what(),
                            next.step_index);
  }

  StepStats stats;
  stats.newton_iters = iters;
  stats.v_l2 = std::sqrt(std::max(
      0.0, inner_lumped_scalar(from.mesh, geom.frames, iterate.velocity,
                               iterate.velocity)));
  for (int k = 0; k < from.mesh.vertex_count(); ++k) {
    stats.beta_max = std::max(stats.beta_max,
                              std::max(std::abs(iterate.beta1[k]),
                                       std::abs(iterate.beta2[k])));
  }
  stats.energy = discrete_energy(next.mesh, next_frames, next.curvature,
                                 config.density);
  return {std::move(next), stats};
}

struct RunSummary {
  FlowState final_state;
  std::vector<StepStats> stats;
  bool completed = true;
  int failed_step = -1;
  std::string failure;
};

using StepHook = std::function<void(const FlowState&, const StepStats&)>;

// Repeated stepping until t_end; the hook sees every accepted step. On mesh
// collapse the summary carries the last good state and the failing index.
inline RunSummary run(const FlowState& initial, const StepConfig& config,
                      double t_end, const StepHook& hook = nullptr) {
  if (t_end < initial.time) {
    throw PreconditionError("t_end must not precede the initial time");
  }
  RunSummary summary;
  summary.final_state = initial;
  SparseDirectSolver solver;
  while (summary.final_state.time < t_end - 0.5 * config.tau) {
    try {
      auto [next, stats] = step(summary.final_state, config, &solver);
      summary.final_state = std::move(next);
      summary.stats.push_back(stats);
      if (hook) hook(summary.final_state, stats);
    } catch (const MeshCollapseError& e) {
      summary.completed = false;
      summary.failed_step = e.step_index;
      summary.failure = e.what();
      break;
    }
  }
  return summary;
}

// Initial curvature and hyperparameter for a fresh surface.
inline FlowState initial_state(SurfaceMesh mesh, double alpha0 = 1e6) {
  FlowState state;
  FaceFrames frames = face_frames(mesh);
  FaceMatrixField A0 = weingarten(mesh, frames, vertex_normals(mesh, frames));
  state.curvature = initial_curvature(mesh, frames, A0);
  state.mesh = std::move(mesh);
  state.alpha = alpha0;
  return state;
}

}  // namespace geoflow

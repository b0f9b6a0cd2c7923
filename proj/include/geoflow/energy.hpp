#pragma once

// Energy densities f(H) for curvature-dependent gradient flows. The flow
// moves with V = Laplace_Gamma f'(H) + |A|^2 f'(H) - H f(H); weak convexity
// of f is what the discrete energy-stability argument needs.

#include <cmath>
#include <functional>
#include <string>

#include "geoflow/errors.hpp"

namespace geoflow {

enum class DensityKind {
  Area,                   // f = 1       (mean curvature flow)
  MeanCurvatureIntegral,  // f = H       (Gauss curvature flow)
  Willmore,               // f = H^2 / 2
  QuarticCurvature,       // f = H^4
  Custom,
};

struct EnergyDensity {
  DensityKind kind;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;

  static EnergyDensity area() {
    return {DensityKind::Area, [](double) { return 1.0; },
            [](double) { return 0.0; }, [](double) { return 0.0; }};
  }
  static EnergyDensity mean_curvature_integral() {
    return {DensityKind::MeanCurvatureIntegral, [](double h) { return h; },
            [](double) { return 1.0; }, [](double) { return 0.0; }};
  }
  static EnergyDensity willmore() {
    return {DensityKind::Willmore, [](double h) { return 0.5 * h * h; },
            [](double h) { return h; }, [](double) { return 1.0; }};
  }
  static EnergyDensity quartic() {
    return {DensityKind::QuarticCurvature,
            [](double h) { return h * h * h * h; },
            [](double h) { return 4.0 * h * h * h; },
            [](double h) { return 12.0 * h * h; }};
  }

  // Custom densities must supply f'' as well; the general-f Newton matrix
  // needs it. Convexity is sampled over [lo, hi].
  static EnergyDensity custom(std::function<double(double)> f,
                              std::function<double(double)> df,
                              std::function<double(double)> d2f,
                              double convexity_lo = -100.0,
                              double convexity_hi = 100.0,
                              int samples = 2001) {
    for (int i = 0; i < samples; ++i) {
      double h = convexity_lo +
                 (convexity_hi - convexity_lo) * i / (samples - 1);
      if (d2f(h) < -1e-12) {
        throw PreconditionError(
            "custom energy density is not weakly convex (f'' < 0 at H = " +
            std::to_string(h) + ")");
      }
    }
    return {DensityKind::Custom, std::move(f), std::move(df), std::move(d2f)};
  }

  static EnergyDensity by_name(const std::string& name) {
    if (name == "area") return area();
    if (name == "mean-curvature-integral") return mean_curvature_integral();
    if (name == "willmore") return willmore();
    if (name == "quartic") return quartic();
    throw PreconditionError("unknown density '" + name +
                            "' (expected area, mean-curvature-integral, "
                            "willmore, or quartic)");
  }
};

}  // namespace geoflow

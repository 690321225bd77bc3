#pragma once

#include "tpsgeom/geometry.hpp"

#include <span>
#include <vector>

namespace tpsgeom {

/// Two independent Bezier curves for the long sides of a text instance. Both
/// sides run left to right and share the same degree.
struct BezierParams {
  std::vector<Point> top;
  std::vector<Point> bottom;

  int degree() const { return static_cast<int>(top.size()) - 1; }
  /// Throws ConfigError unless both sides have equal length >= 2 and finite
  /// coordinates.
  void validate() const;
};

/// C(n, i) t^i (1 - t)^(n - i)
double bernstein(int i, int n, double t);

/// Point on one Bezier curve.
Point bezier_point(std::span<const Point> controls, double t);

/// Uniform-t samples of one side, endpoints equal to the end controls exactly.
std::vector<Point> bezier_side(std::span<const Point> controls, int samples);

/// Closed polygon: top sampled forward then bottom sampled in reverse,
/// 2 * samples_per_side vertices. samples_per_side >= 2.
Polygon bezier_decode(const BezierParams& params, int samples_per_side);

/// One side with its curve parameters in [0, 1].
struct ParameterizedSide {
  std::vector<Point> points;
  std::vector<double> t;
};

/// Least-squares fit of one side with the end controls pinned to the first
/// and last points. Needs at least degree + 1 points; throws SingularFit if the
/// interior system is rank deficient.
std::vector<Point> bezier_fit_side(const ParameterizedSide& side, int degree = 3);

BezierParams bezier_fit(const ParameterizedSide& top, const ParameterizedSide& bottom, int degree = 3);

/// Normalized chord-length parameters of a polyline.
std::vector<double> chord_parameters(std::span<const Point> pts);

}  // namespace tpsgeom

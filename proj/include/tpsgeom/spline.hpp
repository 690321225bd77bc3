#pragma once

#include "tpsgeom/geometry.hpp"

#include <array>
#include <span>
#include <vector>

namespace tpsgeom {

/// Interpolating natural cubic spline through a polyline, parameterized by
/// cumulative chord length. Each coordinate is an independent scalar spline.
class SplineCurve {
 public:
  /// Throws MalformedAnnotation for fewer than 2 points or repeated
  /// consecutive points (zero-length chord).
  explicit SplineCurve(std::span<const Point> pts);

  /// Knot parameters; knots().front() == 0 and knots().back() == length().
  const std::vector<double>& knots() const { return knots_; }
  double length() const { return knots_.back(); }
  Point evaluate(double t) const;
  /// First derivative with respect to the chord parameter.
  Point derivative(double t) const;

 private:
  std::size_t segment(double t) const;

  std::vector<double> knots_;
  // Per segment: value, first, second, third coefficient in (t - knot).
  std::vector<std::array<double, 4>> cx_;
  std::vector<std::array<double, 4>> cy_;
};

/// Resamples the spline at `count` points with equal chord spacing between
/// consecutive samples. Endpoints are the spline's end knots. Because
/// the output chords are uniform, the chord parameterization of the output
/// coincides with its sample index, so re-smoothing reproduces it.
std::vector<Point> resample_equal_chord(const SplineCurve& curve, int count);

/// Smooths one annotation side and resamples it; the first and last input
/// points are copied bit-exactly into the output.
std::vector<Point> smooth_side(std::span<const Point> side, int samples);

/// Densified boundary whose long sides are natural cubic splines through the
/// original side vertices. `top` and `bottom` both run left to right; the
/// result is top forward followed by bottom reversed (2 * samples vertices).
/// Throws MalformedAnnotation if a side has fewer than 2 points and
/// ConfigError if samples < 4.
Polygon smooth_boundary(std::span<const Point> top, std::span<const Point> bottom,
                        int samples_per_side);

}  // namespace tpsgeom

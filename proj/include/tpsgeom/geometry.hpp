#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tpsgeom {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend constexpr Point operator*(Point p, double s) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double distance(Point a, Point b) { return norm(a - b); }
inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

enum class Orientation { Clockwise, CounterClockwise };

/// Shoelace signed area in the standard (x right, y up) convention. Positive
/// means counterclockwise in that convention; in y-down image coordinates the
/// same vertex order appears clockwise on screen.
double signed_area(std::span<const Point> pts);

/// Ordered simple boundary with at least three finite vertices and no
/// consecutive duplicates (including the closing pair last -> first).
/// Zero-area polygons are representable; polygon_area() rejects them.
class Polygon {
 public:
  Polygon() = default;
  /// Throws MalformedAnnotation when the vertex list violates the invariants.
  explicit Polygon(std::vector<Point> points);

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  Orientation orientation() const { return orientation_; }
  double signed_area() const { return signed_area_; }

  Polygon reversed() const;

 private:
  std::vector<Point> points_;
  Orientation orientation_ = Orientation::CounterClockwise;
  double signed_area_ = 0.0;
};

/// Absolute shoelace area; throws DegenerateShape below 1e-12.
double polygon_area(const Polygon& p);

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

BoundingBox bounding_box(std::span<const Point> pts);

/// Even-odd rule; points on an edge count as inside. Edges are half-open in y
/// for the crossing count so shared vertices are never double counted.
bool point_in_polygon(std::span<const Point> poly, Point p);

double point_segment_distance(Point p, Point a, Point b);

/// Minimum distance from p to the closed polyline through poly.
double distance_to_boundary(std::span<const Point> poly, Point p);

/// Regular sample grid: sample (c, r) sits at (x0 + c*step, y0 + r*step).
struct SampleGrid {
  double x0 = 0.0;
  double y0 = 0.0;
  double step = 1.0;
  int cols = 0;
  int rows = 0;
};

/// Inside flags for every sample of the grid, row-major. Uses the same rule as
/// point_in_polygon, evaluated one scanline at a time.
std::vector<std::uint8_t> rasterize_inside(std::span<const Point> poly, const SampleGrid& grid);

struct OverlapAreas {
  double area_a = 0.0;
  double area_b = 0.0;
  double intersection = 0.0;
  double union_area = 0.0;
  double cell_area = 0.0;

  double iou() const { return union_area > 0.0 ? intersection / union_area : 0.0; }
};

/// Areas estimated by counting cell centres of a regular grid over the joint
/// bounding box. `resolution` is the number of cells along the longer side of
/// that box; it must be at least 8.
OverlapAreas rasterized_overlap(const Polygon& a, const Polygon& b, int resolution = 512);

/// Planar projective map with h(2,2) == 1.
class Homography {
 public:
  Homography() : h_(Eigen::Matrix3d::Identity()) {}
  /// Normalizes by h(2,2); throws ConfigError if that entry is ~0 or the
  /// normalized matrix is singular.
  explicit Homography(const Eigen::Matrix3d& h);

  const Eigen::Matrix3d& matrix() const { return h_; }
  Point apply(Point p) const;
  std::vector<Point> apply(std::span<const Point> pts) const;
  Homography inverse() const;

 private:
  Eigen::Matrix3d h_;
};

/// Pinhole reprojection of the image plane rotated by `angle_deg` about its
/// left edge (x = 0). The camera sits `focal` in front of the midpoint of the
/// left edge, so that edge is a fixed line and the far side foreshortens.
Homography perspective_from_left_edge(double angle_deg, double image_w, double image_h, double focal);

}  // namespace tpsgeom

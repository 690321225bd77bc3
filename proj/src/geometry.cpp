#include "tpsgeom/geometry.hpp"

#include "tpsgeom/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

namespace tpsgeom {

double signed_area(std::span<const Point> pts) {
  const std::size_t n = pts.size();
  if (n < 3) return 0.0;
  // Shift to the first vertex to limit cancellation on large coordinates.
  const Point o = pts[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = pts[i] - o;
    const Point b = pts[(i + 1) % n] - o;
    acc += cross(a, b);
  }
  return 0.5 * acc;
}

Polygon::Polygon(std::vector<Point> points) : points_(std::move(points)) {
  const std::size_t n = points_.size();
  if (n < 3) {
    throw MalformedAnnotation("polygon needs at least 3 vertices, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_finite(points_[i])) {
      throw MalformedAnnotation("polygon vertex " + std::to_string(i) + " is not finite");
    }
    if (points_[i] == points_[(i + 1) % n]) {
      throw MalformedAnnotation("polygon has a repeated consecutive vertex at index " +
                                std::to_string(i));
    }
  }
  signed_area_ = tpsgeom::signed_area(points_);
  orientation_ = signed_area_ < 0.0 ? Orientation::Clockwise : Orientation::CounterClockwise;
}

Polygon Polygon::reversed() const {
  std::vector<Point> pts(points_.rbegin(), points_.rend());
  return Polygon(std::move(pts));
}

double polygon_area(const Polygon& p) {
  const double a = std::abs(p.signed_area());
  if (!(a >= 1e-12)) throw DegenerateShape("polygon area below 1e-12");
  return a;
}

BoundingBox bounding_box(std::span<const Point> pts) {
  BoundingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  for (const Point& p : pts) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

double distance_to_boundary(std::span<const Point> poly, Point p) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
  }
  return best;
}

namespace {

// Everything needed to answer inside(x, y) for a fixed scanline y.
struct Scanline {
  std::vector<double> crossings;            // half-open crossings, sorted
  std::vector<double> on_edge;              // exact edge hits, sorted
  std::vector<std::pair<double, double>> flat;  // horizontal edges lying on y

  void build(std::span<const Point> poly, double y) {
    crossings.clear();
    on_edge.clear();
    flat.clear();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = poly[i];
      const Point b = poly[(i + 1) % n];
      if (a.y == y && b.y == y) {
        flat.emplace_back(std::min(a.x, b.x), std::max(a.x, b.x));
        continue;
      }
      const double lo = std::min(a.y, b.y);
      const double hi = std::max(a.y, b.y);
      if (y < lo || y > hi) continue;
      const double xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      on_edge.push_back(xc);
      if ((a.y > y) != (b.y > y)) crossings.push_back(xc);
    }
    std::sort(crossings.begin(), crossings.end());
    std::sort(on_edge.begin(), on_edge.end());
  }

  bool on_flat(double x) const {
    return std::any_of(flat.begin(), flat.end(),
                       [x](const auto& iv) { return x >= iv.first && x <= iv.second; });
  }

  bool inside(double x) const {
    if (std::binary_search(on_edge.begin(), on_edge.end(), x)) return true;
    if (!flat.empty() && on_flat(x)) return true;
    const auto above = crossings.end() - std::upper_bound(crossings.begin(), crossings.end(), x);
    return (above & 1) != 0;
  }
};

// Fills `out` (size grid.cols) with inside flags for row r, walking the sorted
// crossing list once.
void scan_row(const Scanline& line, const SampleGrid& grid, std::uint8_t* out) {
  std::size_t below = 0;  // crossings with xc <= x
  std::size_t edge_idx = 0;
  const std::size_t total = line.crossings.size();
  for (int c = 0; c < grid.cols; ++c) {
    const double x = grid.x0 + c * grid.step;
    while (below < total && line.crossings[below] <= x) ++below;
    while (edge_idx < line.on_edge.size() && line.on_edge[edge_idx] < x) ++edge_idx;
    bool in = ((total - below) & 1) != 0;
    if (!in && edge_idx < line.on_edge.size() && line.on_edge[edge_idx] == x) in = true;
    if (!in && !line.flat.empty() && line.on_flat(x)) in = true;
    out[c] = in ? 1 : 0;
  }
}

}  // namespace

bool point_in_polygon(std::span<const Point> poly, Point p) {
  Scanline line;
  line.build(poly, p.y);
  return line.inside(p.x);
}

std::vector<std::uint8_t> rasterize_inside(std::span<const Point> poly, const SampleGrid& grid) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(grid.cols) * grid.rows, 0);
  Scanline line;
  for (int r = 0; r < grid.rows; ++r) {
    line.build(poly, grid.y0 + r * grid.step);
    scan_row(line, grid, mask.data() + static_cast<std::size_t>(r) * grid.cols);
  }
  return mask;
}

OverlapAreas rasterized_overlap(const Polygon& a, const Polygon& b, int resolution) {
  if (resolution < 8) {
    throw ConfigError("rasterized_overlap resolution must be >= 8, got " + std::to_string(resolution));
  }
  BoundingBox box = bounding_box(a.points());
  const BoundingBox bb = bounding_box(b.points());
  box.min_x = std::min(box.min_x, bb.min_x);
  box.min_y = std::min(box.min_y, bb.min_y);
  box.max_x = std::max(box.max_x, bb.max_x);
  box.max_y = std::max(box.max_y, bb.max_y);
  const double longer = std::max(box.width(), box.height());
  if (!(longer > 0.0)) throw DegenerateShape("joint bounding box is empty");

  const double step = longer / resolution;
  SampleGrid grid;
  grid.step = step;
  grid.cols = std::max(1, static_cast<int>(std::ceil(box.width() / step - 1e-9)));
  grid.rows = std::max(1, static_cast<int>(std::ceil(box.height() / step - 1e-9)));
  grid.x0 = box.min_x + 0.5 * step;
  grid.y0 = box.min_y + 0.5 * step;

  std::vector<std::uint8_t> row_a(grid.cols), row_b(grid.cols);
  Scanline line_a, line_b;
  std::int64_t na = 0, nb = 0, nab = 0;
  for (int r = 0; r < grid.rows; ++r) {
    const double y = grid.y0 + r * step;
    line_a.build(a.points(), y);
    line_b.build(b.points(), y);
    scan_row(line_a, grid, row_a.data());
    scan_row(line_b, grid, row_b.data());
    for (int c = 0; c < grid.cols; ++c) {
      na += row_a[c];
      nb += row_b[c];
      nab += row_a[c] & row_b[c];
    }
  }

  OverlapAreas out;
  out.cell_area = step * step;
  out.area_a = static_cast<double>(na) * out.cell_area;
  out.area_b = static_cast<double>(nb) * out.cell_area;
  out.intersection = static_cast<double>(nab) * out.cell_area;
  out.union_area = static_cast<double>(na + nb - nab) * out.cell_area;
  return out;
}

Homography::Homography(const Eigen::Matrix3d& h) {
  if (std::abs(h(2, 2)) < 1e-300) throw ConfigError("homography h(2,2) is zero");
  h_ = h / h(2, 2);
  if (!(std::abs(h_.determinant()) > 1e-12)) throw ConfigError("homography is singular");
}

Point Homography::apply(Point p) const {
  const double w = h_(2, 0) * p.x + h_(2, 1) * p.y + h_(2, 2);
  return {(h_(0, 0) * p.x + h_(0, 1) * p.y + h_(0, 2)) / w,
          (h_(1, 0) * p.x + h_(1, 1) * p.y + h_(1, 2)) / w};
}

std::vector<Point> Homography::apply(std::span<const Point> pts) const {
  std::vector<Point> out;
  out.reserve(pts.size());
  for (const Point& p : pts) out.push_back(apply(p));
  return out;
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

Homography perspective_from_left_edge(double angle_deg, double image_w, double image_h,
                                      double focal) {
  if (!(angle_deg >= 0.0 && angle_deg < 90.0)) {
    throw ConfigError("perspective angle must lie in [0, 90)");
  }
  if (!(focal > 0.0)) throw ConfigError("focal length must be positive");
  if (!(image_w > 0.0 && image_h > 0.0)) throw ConfigError("image dimensions must be positive");
  // Plane point (x, y, 0) rotates to (x cos a, y, x sin a); the camera centre is
  // (0, h/2, -f) looking down +z and projects back onto z = 0.
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cy = 0.5 * image_h;
  Eigen::Matrix3d h;
  h << c, 0.0, 0.0,
       cy * s / focal, 1.0, 0.0,
       s / focal, 0.0, 1.0;
  return Homography(h);
}

}  // namespace tpsgeom

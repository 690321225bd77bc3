#include "tpsgeom/representation.hpp"

#include "tpsgeom/errors.hpp"

#include <cmath>

namespace tpsgeom {

std::string describe(const Representation& rep) {
  if (const auto* cfg = std::get_if<FiducialConfig>(&rep)) {
    return "tps(k=" + std::to_string(cfg->k()) + "," + to_string(cfg->distribution()) + ")";
  }
  return "bezier(degree=" + std::to_string(std::get<BezierRep>(rep).degree) + ")";
}

namespace {

double side_sq_error(const std::vector<Point>& controls, const ParameterizedSide& side) {
  double acc = 0.0;
  for (std::size_t j = 0; j < side.points.size(); ++j) {
    const Point d = bezier_point(controls, side.t[j]) - side.points[j];
    acc += dot(d, d);
  }
  return acc;
}

}  // namespace

ShapeFit fit_shape(const SideSplit& split, const Representation& rep, const ShapeFitOptions& options) {
  if (options.boundary_cols < 2) throw ConfigError("boundary_cols must be >= 2");
  ShapeFit out;
  if (const auto* cfg = std::get_if<FiducialConfig>(&rep)) {
    if (options.short_edge_points < 0) throw ConfigError("short_edge_points must be >= 0");
    auto corr = make_correspondences(split, options.per_side);
    const std::size_t edge_count = corr.size();
    const auto& [tl, tr, br, bl] = split.corners;
    for (int i = 1; i <= options.short_edge_points; ++i) {
      const double v = static_cast<double>(i) / (options.short_edge_points + 1);
      corr.push_back({{0.0, v}, (1.0 - v) * tl + v * bl});
      corr.push_back({{1.0, v}, (1.0 - v) * tr + v * br});
    }
    out.tps = fit(*cfg, corr, FitOptions{options.regularization});
    double sq = 0.0;
    for (std::size_t j = 0; j < edge_count; ++j) {
      const Point d = decode_point(out.tps->params, corr[j].source) - corr[j].target;
      sq += dot(d, d);
    }
    out.rms_residual = std::sqrt(sq / static_cast<double>(edge_count));
    out.boundary = decode_boundary(out.tps->params, options.boundary_cols);
    return out;
  }
  const int degree = std::get<BezierRep>(rep).degree;
  const auto [top, bottom] = resample_sides(split, options.per_side);
  out.bezier = bezier_fit(top, bottom, degree);
  const double sq = side_sq_error(out.bezier->top, top) + side_sq_error(out.bezier->bottom, bottom);
  out.rms_residual = std::sqrt(sq / static_cast<double>(top.points.size() + bottom.points.size()));
  out.boundary = bezier_decode(*out.bezier, options.boundary_cols + 1).points();
  return out;
}

}  // namespace tpsgeom

#pragma once

#include "tpsgeom/bezier.hpp"
#include "tpsgeom/losses.hpp"
#include "tpsgeom/metrics.hpp"
#include "tpsgeom/tps.hpp"

#include <string>
#include <string_view>

namespace tpsgeom {

/// {"k": 8, "distribution": "cross", "t": [[x-row], [y-row]]}
std::string tps_params_to_json(const TpsParams& params);
/// Rebuilds the fiducial configuration from k and distribution. Throws
/// ConfigError on schema or shape violations.
TpsParams tps_params_from_json(std::string_view text);

/// {"top": [[x, y], ...], "bottom": [[x, y], ...]}
std::string bezier_params_to_json(const BezierParams& params);
BezierParams bezier_params_from_json(std::string_view text);

std::string fit_report_to_json(const FitReport& report);

/// {"rows", "cols", "points": [[x, y], ...]} row-major.
std::string shape_grid_to_json(const ShapeGrid& grid);

/// {"width", "height", "origin": [x, y], "scale", "values": [...]} row-major.
std::string gray_image_to_json(const GrayImage& image);
GrayImage gray_image_from_json(std::string_view text);

}  // namespace tpsgeom

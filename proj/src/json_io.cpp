#include "tpsgeom/json_io.hpp"

#include "tpsgeom/errors.hpp"

#include "json.hpp"

namespace tpsgeom {

using nlohmann::json;

namespace {

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid ") + what + " JSON: " + e.what());
  }
}

json points_json(std::span<const Point> pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> points_from(const json& arr) {
  if (!arr.is_array()) throw ConfigError("expected an array of [x, y] pairs");
  std::vector<Point> out;
  for (const json& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ConfigError("expected [x, y] number pairs");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

}  // namespace

std::string tps_params_to_json(const TpsParams& params) {
  json t = json::array();
  for (Eigen::Index r = 0; r < 2; ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < params.t.cols(); ++c) row.push_back(params.t(r, c));
    t.push_back(std::move(row));
  }
  return json{{"k", params.config.k()}, {"distribution", to_string(params.config.distribution())}, {"t", t}}
             .dump(2) +
         "\n";
}

TpsParams tps_params_from_json(std::string_view text) {
  const json j = parse(text, "TPS parameter");
  if (!j.is_object() || !j.contains("k") || !j.contains("distribution") || !j.contains("t")) {
    throw ConfigError("TPS parameters need \"k\", \"distribution\" and \"t\"");
  }
  TpsParams p;
  try {
    p.config = make_fiducials(parse_distribution(j["distribution"].get<std::string>()), j["k"].get<int>());
    const json& t = j["t"];
    if (!t.is_array() || t.size() != 2) throw ConfigError("\"t\" must have 2 rows");
    p.t.resize(2, p.config.dim());
    for (std::size_t r = 0; r < 2; ++r) {
      if (!t[r].is_array() || t[r].size() != static_cast<std::size_t>(p.config.dim())) {
        throw ConfigError("\"t\" rows must have k + 3 entries");
      }
      for (std::size_t c = 0; c < t[r].size(); ++c) {
        p.t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t[r][c].get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed TPS parameters: ") + e.what());
  }
  p.validate();
  return p;
}

std::string bezier_params_to_json(const BezierParams& params) {
  return json{{"top", points_json(params.top)}, {"bottom", points_json(params.bottom)}}.dump(2) + "\n";
}

BezierParams bezier_params_from_json(std::string_view text) {
  const json j = parse(text, "Bezier parameter");
  if (!j.is_object() || !j.contains("top") || !j.contains("bottom")) {
    throw ConfigError("Bezier parameters need \"top\" and \"bottom\"");
  }
  BezierParams p{points_from(j["top"]), points_from(j["bottom"])};
  p.validate();
  return p;
}

std::string fit_report_to_json(const FitReport& report) {
  json per = json::array();
  for (const InstanceScore& s : report.per_instance) {
    json item{{"id", s.id}, {"failed", s.failed}};
    if (s.failed) {
      item["error"] = s.error;
    } else {
      item["iou"] = s.iou;
      item["tiou_r"] = s.tiou_r;
      item["tiou_p"] = s.tiou_p;
      item["rms_residual"] = s.rms_residual;
    }
    per.push_back(std::move(item));
  }
  const json j{{"method", report.method},
               {"resolution", report.resolution},
               {"aggregate",
                {{"iou_mean", report.iou_mean},
                 {"tiou_recall", report.tiou_recall},
                 {"tiou_precision", report.tiou_precision},
                 {"tiou_hmean", report.tiou_hmean},
                 {"iou50_rate", report.iou50_rate},
                 {"iou70_rate", report.iou70_rate},
                 {"mean_residual", report.mean_residual},
                 {"failures", report.failures}}},
               {"per_instance", std::move(per)}};
  return j.dump(2) + "\n";
}

std::string shape_grid_to_json(const ShapeGrid& grid) {
  return json{{"rows", grid.rows}, {"cols", grid.cols}, {"points", points_json(grid.points)}}.dump() + "\n";
}

std::string gray_image_to_json(const GrayImage& image) {
  return json{{"width", image.width},
              {"height", image.height},
              {"origin", {image.frame.origin.x, image.frame.origin.y}},
              {"scale", image.frame.scale},
              {"values", image.values}}
             .dump() +
         "\n";
}

GrayImage gray_image_from_json(std::string_view text) {
  const json j = parse(text, "raster");
  GrayImage img;
  try {
    img.width = j.at("width").get<int>();
    img.height = j.at("height").get<int>();
    img.frame.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
    img.frame.scale = j.at("scale").get<double>();
    img.values = j.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed raster JSON: ") + e.what());
  }
  if (img.width < 1 || img.height < 1 || img.values.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw ConfigError("raster JSON dimensions do not match its values");
  }
  return img;
}

}  // namespace tpsgeom

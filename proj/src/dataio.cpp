#include "tpsgeom/dataio.hpp"

#include "tpsgeom/errors.hpp"
#include "tpsgeom/rng.hpp"
#include "tpsgeom/spline.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace tpsgeom {

using nlohmann::json;

std::string to_string(AnnotationSource s) {
  switch (s) {
    case AnnotationSource::Ctw1500:
      return "ctw1500";
    case AnnotationSource::TotalText:
      return "totaltext";
    case AnnotationSource::Generic:
      return "generic";
    case AnnotationSource::Synthetic:
      return "synthetic";
  }
  return "generic";
}

AnnotationSource parse_source(std::string_view name) {
  if (name == "ctw1500") return AnnotationSource::Ctw1500;
  if (name == "totaltext") return AnnotationSource::TotalText;
  if (name == "generic") return AnnotationSource::Generic;
  if (name == "synthetic") return AnnotationSource::Synthetic;
  throw MalformedAnnotation("unknown annotation source '" + std::string(name) + "'");
}

AnnotationFormat parse_format(std::string_view name) {
  if (name == "json" || name == "generic") return AnnotationFormat::GenericJson;
  if (name == "ctw1500") return AnnotationFormat::Ctw1500Text;
  throw ConfigError("unknown annotation format '" + std::string(name) + "'");
}

TextInstance make_instance(std::string id, std::vector<Point> points,
                           std::optional<std::string> transcript, AnnotationSource source) {
  if (source == AnnotationSource::Ctw1500 && points.size() != 14) {
    throw MalformedAnnotation("ctw1500 instance '" + id + "' must have 14 points, got " +
                              std::to_string(points.size()));
  }
  TextInstance inst{std::move(id), Polygon(std::move(points)), std::move(transcript), source};
  polygon_area(inst.polygon);
  return inst;
}

namespace {

ParsedAnnotations finish(ParsedAnnotations parsed) {
  if (parsed.instances.empty()) {
    throw EmptyCorpus("no valid text instances (" + std::to_string(parsed.warnings.size()) +
                      " rejected)");
  }
  return parsed;
}

}  // namespace

ParsedAnnotations parse_generic_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("invalid annotation JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("instances") || !root["instances"].is_array()) {
    throw IoError("annotation JSON must be an object with an \"instances\" array");
  }
  ParsedAnnotations out;
  std::size_t index = 0;
  for (const json& item : root["instances"]) {
    const std::string fallback_id = "instance_" + std::to_string(index++);
    std::string id = fallback_id;
    try {
      if (item.contains("id") && item["id"].is_string()) id = item["id"].get<std::string>();
      if (!item.contains("points") || !item["points"].is_array()) {
        throw MalformedAnnotation("missing \"points\" array");
      }
      std::vector<Point> pts;
      for (const json& p : item["points"]) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
          throw MalformedAnnotation("points must be [x, y] number pairs");
        }
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      std::optional<std::string> transcript;
      if (item.contains("transcript") && item["transcript"].is_string()) {
        transcript = item["transcript"].get<std::string>();
      }
      AnnotationSource source = AnnotationSource::Generic;
      if (item.contains("source") && item["source"].is_string()) {
        source = parse_source(item["source"].get<std::string>());
      }
      out.instances.push_back(make_instance(id, std::move(pts), std::move(transcript), source));
    } catch (const Error& e) {
      out.warnings.push_back(id + ": " + e.what());
    } catch (const json::exception& e) {
      out.warnings.push_back(id + ": " + e.what());
    }
  }
  return out;
}

ParsedAnnotations parse_ctw1500_text(std::string_view text, std::string_view id_prefix) {
  ParsedAnnotations out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string id = std::string(id_prefix) + "_" + std::to_string(line_no);
    std::optional<std::string> transcript;
    std::string coords = line;
    if (const auto sep = line.find("####"); sep != std::string::npos) {
      transcript = line.substr(sep + 4);
      coords = line.substr(0, sep);
    }
    try {
      std::vector<double> values;
      std::size_t pos = 0;
      while (pos <= coords.size()) {
        const auto comma = std::min(coords.find(',', pos), coords.size());
        std::string tok = coords.substr(pos, comma - pos);
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (!tok.empty()) {
          long v = 0;
          const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
          if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw MalformedAnnotation("non-integer coordinate '" + tok + "'");
          }
          values.push_back(static_cast<double>(v));
        }
        pos = comma + 1;
      }
      if (values.size() != 28) {
        throw MalformedAnnotation("expected 28 coordinates, got " + std::to_string(values.size()));
      }
      std::vector<Point> pts;
      for (std::size_t i = 0; i < values.size(); i += 2) pts.push_back({values[i], values[i + 1]});
      out.instances.push_back(make_instance(id, std::move(pts), std::move(transcript), AnnotationSource::Ctw1500));
    } catch (const Error& e) {
      out.warnings.push_back(id + ": " + e.what());
    }
  }
  return out;
}

ParsedAnnotations parse_annotations(const std::filesystem::path& path, AnnotationFormat format) {
  const std::string text = read_file(path);
  switch (format) {
    case AnnotationFormat::GenericJson:
      return finish(parse_generic_json(text));
    case AnnotationFormat::Ctw1500Text:
      return finish(parse_ctw1500_text(text, path.stem().string()));
  }
  throw ConfigError("unsupported annotation format");
}

std::string serialize_generic_json(std::span<const TextInstance> instances) {
  json arr = json::array();
  for (const TextInstance& inst : instances) {
    json pts = json::array();
    for (const Point& p : inst.polygon.points()) pts.push_back({p.x, p.y});
    arr.push_back({{"id", inst.id},
                   {"points", std::move(pts)},
                   {"transcript", inst.transcript ? json(*inst.transcript) : json(nullptr)},
                   {"source", to_string(inst.source)}});
  }
  return json{{"instances", std::move(arr)}}.dump(2) + "\n";
}

namespace {

double quad_area(Point a, Point b, Point c, Point d) {
  return 0.5 * std::abs(cross(a, b) + cross(b, c) + cross(c, d) + cross(d, a));
}

double turning_angle(std::span<const Point> pts, std::size_t i) {
  const std::size_t n = pts.size();
  const Point a = pts[i] - pts[(i + n - 1) % n];
  const Point b = pts[(i + 1) % n] - pts[i];
  return std::abs(std::atan2(cross(a, b), dot(a, b)));
}

std::vector<Point> run(std::span<const Point> pts, std::size_t from, std::size_t to) {
  std::vector<Point> out;
  const std::size_t n = pts.size();
  for (std::size_t i = from;; i = (i + 1) % n) {
    out.push_back(pts[i]);
    if (i == to) break;
  }
  return out;
}

double polyline_length(std::span<const Point> pts) {
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) acc += distance(pts[i - 1], pts[i]);
  return acc;
}

double mean_y(std::span<const Point> pts) {
  double acc = 0.0;
  for (const Point& p : pts) acc += p.y;
  return acc / static_cast<double>(pts.size());
}

void orient_left_to_right(std::vector<Point>& side) {
  if (side.front().x > side.back().x) std::reverse(side.begin(), side.end());
}

void set_corners(SideSplit& s) {
  s.corners = {s.top.front(), s.top.back(), s.bottom.back(), s.bottom.front()};
}

}  // namespace

std::array<std::size_t, 4> max_area_corners(std::span<const Point> pts) {
  const std::size_t n = pts.size();
  if (n < 4) throw MalformedAnnotation("corner detection needs at least 4 vertices");
  std::vector<std::size_t> cand(n);
  std::iota(cand.begin(), cand.end(), 0);
  if (n > 16) {
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      return turning_angle(pts, a) > turning_angle(pts, b);
    });
    cand.resize(16);
    std::sort(cand.begin(), cand.end());
  }
  const std::size_t m = cand.size();
  double best = -1.0;
  std::array<std::size_t, 4> best_idx{0, 1, 2, 3};
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      for (std::size_t c = b + 1; c < m; ++c) {
        for (std::size_t d = c + 1; d < m; ++d) {
          const double area = quad_area(pts[cand[a]], pts[cand[b]], pts[cand[c]], pts[cand[d]]);
          if (area > best) {
            best = area;
            best_idx = {cand[a], cand[b], cand[c], cand[d]};
          }
        }
      }
    }
  }
  return best_idx;
}

SideSplit split_sides(const Polygon& polygon, AnnotationSource source) {
  const auto& pts = polygon.points();
  const std::size_t n = pts.size();
  if (n < 4) throw MalformedAnnotation("side split needs at least 4 vertices");
  SideSplit s;
  const bool convention = (source == AnnotationSource::Ctw1500 || source == AnnotationSource::Synthetic) &&
                          n % 2 == 0;
  if (convention) {
    const std::size_t half = n / 2;
    s.top.assign(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(half));
    s.bottom.assign(pts.rbegin(), pts.rbegin() + static_cast<std::ptrdiff_t>(n - half));
    set_corners(s);
    return s;
  }

  s.used_corner_detection = true;
  const auto c = max_area_corners(pts);
  std::array<std::vector<Point>, 4> runs;
  for (std::size_t i = 0; i < 4; ++i) runs[i] = run(pts, c[i], c[(i + 1) % 4]);
  const double even = polyline_length(runs[0]) + polyline_length(runs[2]);
  const double odd = polyline_length(runs[1]) + polyline_length(runs[3]);
  std::vector<Point> first = even >= odd ? runs[0] : runs[1];
  std::vector<Point> second = even >= odd ? runs[2] : runs[3];
  if (mean_y(first) <= mean_y(second)) {
    s.top = std::move(first);
    s.bottom = std::move(second);
  } else {
    s.top = std::move(second);
    s.bottom = std::move(first);
  }
  orient_left_to_right(s.top);
  orient_left_to_right(s.bottom);
  set_corners(s);
  return s;
}

SideSplit split_sides(const TextInstance& instance) {
  return split_sides(instance.polygon, instance.source);
}

Polygon smooth_boundary(const SideSplit& split, int samples_per_side) {
  return smooth_boundary(split.top, split.bottom, samples_per_side);
}

std::pair<ParameterizedSide, ParameterizedSide> resample_sides(const SideSplit& split, int per_side) {
  if (per_side < 2) throw ConfigError("per_side must be >= 2");
  if (split.top.size() < 2 || split.bottom.size() < 2) {
    throw MalformedAnnotation("each side needs at least 2 points");
  }
  std::vector<double> t(static_cast<std::size_t>(per_side));
  for (int j = 0; j < per_side; ++j) t[static_cast<std::size_t>(j)] = static_cast<double>(j) / (per_side - 1);
  return {ParameterizedSide{smooth_side(split.top, per_side), t},
          ParameterizedSide{smooth_side(split.bottom, per_side), t}};
}

std::vector<Correspondence> make_correspondences(const SideSplit& split, int per_side) {
  const auto [top, bottom] = resample_sides(split, per_side);
  std::vector<Correspondence> out;
  out.reserve(2 * static_cast<std::size_t>(per_side));
  for (std::size_t j = 0; j < top.points.size(); ++j) out.push_back({{top.t[j], 0.0}, top.points[j]});
  for (std::size_t j = 0; j < bottom.points.size(); ++j) {
    out.push_back({{bottom.t[j], 1.0}, bottom.points[j]});
  }
  return out;
}

SyntheticInstance generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.amplitude_frac >= 0.0 && spec.amplitude_frac <= 0.5)) {
    throw ConfigError("amplitude_frac must lie in [0, 0.5]");
  }
  if (!(spec.perspective_angle_deg >= 0.0 && spec.perspective_angle_deg < 90.0)) {
    throw ConfigError("perspective angle must lie in [0, 90)");
  }
  if (!(spec.text_height > 0.0 && spec.aspect > 0.0 && spec.periods >= 0.0 && spec.focal_scale > 0.0)) {
    throw ConfigError("synthetic text height, aspect and focal scale must be positive");
  }
  if (spec.points_per_side < 2) throw ConfigError("points_per_side must be >= 2");

  CounterRng rng(spec.seed);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double h = spec.text_height;
  const double len = spec.aspect * h;
  const double amp = spec.amplitude_frac * h;
  const double omega = 2.0 * std::numbers::pi * spec.periods / len;

  // The offset curve at distance h/2 folds once the curvature radius drops to h/2.
  constexpr int kCurvatureSamples = 4096;
  for (int i = 0; i <= kCurvatureSamples; ++i) {
    const double x = len * i / kCurvatureSamples;
    const double d1 = amp * omega * std::cos(omega * x + phase);
    const double d2 = -amp * omega * omega * std::sin(omega * x + phase);
    const double kappa = std::abs(d2) / std::pow(1.0 + d1 * d1, 1.5);
    if (kappa * 0.5 * h >= 1.0) {
      throw DegenerateShape("synthetic offset curves self-intersect (amplitude too large for height)");
    }
  }

  const int n = spec.points_per_side;
  std::vector<Point> top, bottom, center;
  for (int j = 0; j < n; ++j) {
    const double x = len * j / (n - 1);
    const double y = amp * std::sin(omega * x + phase);
    const double d1 = amp * omega * std::cos(omega * x + phase);
    const double inv = 1.0 / std::sqrt(1.0 + d1 * d1);
    const Point normal{-d1 * inv, inv};  // points down (+y)
    const Point c{x, y};
    center.push_back(c);
    top.push_back(c - 0.5 * h * normal);
    bottom.push_back(c + 0.5 * h * normal);
  }
  for (const auto* side : {&top, &bottom}) {
    for (std::size_t j = 1; j < side->size(); ++j) {
      if (!((*side)[j].x > (*side)[j - 1].x)) throw DegenerateShape("synthetic side folds back");
    }
  }

  std::vector<Point> all = top;
  all.insert(all.end(), bottom.begin(), bottom.end());
  const BoundingBox box = bounding_box(all);
  const Point shift{h - box.min_x, h - box.min_y};
  for (auto* side : {&top, &bottom, &center}) {
    for (Point& p : *side) p = p + shift;
  }

  SyntheticInstance out;
  out.image_w = box.width() + 2.0 * h;
  out.image_h = box.height() + 2.0 * h;

  std::vector<Point> pre = top;
  pre.insert(pre.end(), bottom.rbegin(), bottom.rend());
  out.pre_warp = Polygon(pre);

  const Homography warp = perspective_from_left_edge(spec.perspective_angle_deg, out.image_w, out.image_h,
                                                     spec.focal_scale * out.image_w);
  out.truth.top = warp.apply(top);
  out.truth.bottom = warp.apply(bottom);
  out.centerline = warp.apply(center);
  set_corners(out.truth);

  std::vector<Point> poly = out.truth.top;
  poly.insert(poly.end(), out.truth.bottom.rbegin(), out.truth.bottom.rend());
  out.instance = make_instance("synthetic_" + std::to_string(spec.seed), std::move(poly), std::nullopt,
                               AnnotationSource::Synthetic);
  return out;
}

std::vector<SyntheticInstance> synthetic_corpus(const SyntheticCorpusSpec& spec) {
  std::vector<SyntheticInstance> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::uint64_t seed = spec.seed + i;
    CounterRng rng = CounterRng(seed).split(1);
    SyntheticSpec s;
    s.amplitude_frac = spec.amplitude_frac;
    s.periods = spec.periods;
    s.text_height = rng.uniform(spec.min_height, spec.max_height);
    s.aspect = rng.uniform(spec.min_aspect, spec.max_aspect);
    s.perspective_angle_deg = spec.perspective_angle_deg;
    s.seed = seed;
    out.push_back(generate_synthetic(s));
  }
  return out;
}

namespace {

std::string points_attr(std::span<const Point> pts) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) ss << ' ';
    ss << pts[i].x << ',' << pts[i].y;
  }
  return ss.str();
}

}  // namespace

std::string render_svg(std::span<const TextInstance> instances, std::span<const SvgOverlay> overlays,
                       double width, double height) {
  if (instances.empty()) throw ConfigError("render_svg needs at least one instance");
  if (!overlays.empty() && overlays.size() != instances.size()) {
    throw ConfigError("overlay count must match instance count");
  }
  if (width <= 0.0 || height <= 0.0) {
    double mx = 0.0, my = 0.0;
    for (const auto& inst : instances) {
      const BoundingBox b = bounding_box(inst.polygon.points());
      mx = std::max(mx, b.max_x);
      my = std::max(my, b.max_y);
    }
    width = std::ceil(mx + 10.0);
    height = std::ceil(my + 10.0);
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" "
      << "version=\"1.1\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width
      << ' ' << height << "\">\n";
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const SvgOverlay* ov = overlays.empty() ? nullptr : &overlays[i];
    svg << "<g id=\"" << instances[i].id << "\">\n";
    if (ov && ov->mask) {
      const GrayImage& m = *ov->mask;
      const auto png = encode_png_gray(m.width, m.height, quantize(m));
      const Point corner = m.frame.to_image({-0.5, -0.5});
      svg << "<image class=\"mask\" x=\"" << corner.x << "\" y=\"" << corner.y << "\" width=\""
          << m.width / m.frame.scale << "\" height=\"" << m.height / m.frame.scale
          << "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" "
          << "xlink:href=\"data:image/png;base64," << base64_encode(png) << "\"/>\n";
    }
    svg << "<polygon class=\"gt\" fill=\"none\" stroke=\"#00c000\" stroke-width=\"1.5\" points=\""
        << points_attr(instances[i].polygon.points()) << "\"/>\n";
    if (ov) {
      for (const auto& fitted : ov->fitted) {
        svg << "<polygon class=\"fitted\" fill=\"none\" stroke=\"#ff0000\" stroke-width=\"1.5\" points=\""
            << points_attr(fitted) << "\"/>\n";
      }
      for (const Point& p : ov->controls) {
        svg << "<circle class=\"control\" cx=\"" << p.x << "\" cy=\"" << p.y
            << "\" r=\"2.5\" fill=\"#0000ff\"/>\n";
      }
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tpsgeom

#pragma once

#include "tpsgeom/bezier.hpp"
#include "tpsgeom/geometry.hpp"
#include "tpsgeom/image_io.hpp"
#include "tpsgeom/tps.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tpsgeom {

enum class AnnotationSource { Ctw1500, TotalText, Generic, Synthetic };

std::string to_string(AnnotationSource s);
AnnotationSource parse_source(std::string_view name);

struct TextInstance {
  std::string id;
  Polygon polygon;
  std::optional<std::string> transcript;
  AnnotationSource source = AnnotationSource::Generic;
};

/// Builds a validated instance. Throws MalformedAnnotation (vertex count,
/// duplicates, non-finite values, ctw1500 not having 14 points) or
/// DegenerateShape (zero area).
TextInstance make_instance(std::string id, std::vector<Point> points,
                           std::optional<std::string> transcript, AnnotationSource source);

enum class AnnotationFormat { GenericJson, Ctw1500Text };

AnnotationFormat parse_format(std::string_view name);

struct ParsedAnnotations {
  std::vector<TextInstance> instances;
  /// One message per rejected instance.
  std::vector<std::string> warnings;
};

/// Reads a file. Throws IoError if unreadable and EmptyCorpus if no instance
/// is valid; malformed instances are reported in `warnings`.
ParsedAnnotations parse_annotations(const std::filesystem::path& path, AnnotationFormat format);

/// {"instances": [{"id", "points": [[x, y], ...], "transcript", "source"}]}
ParsedAnnotations parse_generic_json(std::string_view text);
/// One instance per line: 28 comma-separated integers, optional "####text".
ParsedAnnotations parse_ctw1500_text(std::string_view text, std::string_view id_prefix);

std::string serialize_generic_json(std::span<const TextInstance> instances);

/// Long sides of an annotation, both running left to right, plus the corners
/// (tl, tr, br, bl). Corners are the endpoints of the two sides.
struct SideSplit {
  std::vector<Point> top;
  std::vector<Point> bottom;
  std::array<Point, 4> corners{};
  bool used_corner_detection = false;
};

/// ctw1500 and synthetic instances split by convention (first half top, second
/// half bottom in reverse). Everything else uses the maximum-area
/// quadrilateral over the vertices to find the corners. Throws
/// MalformedAnnotation below 4 vertices.
SideSplit split_sides(const TextInstance& instance);
SideSplit split_sides(const Polygon& polygon, AnnotationSource source);

/// Indices (ascending) of the 4 vertices spanning the largest quadrilateral.
/// Exhaustive up to 16 vertices; larger inputs first keep the 16 vertices
/// with the sharpest turning angle.
std::array<std::size_t, 4> max_area_corners(std::span<const Point> pts);

/// smooth_boundary applied to a side split.
Polygon smooth_boundary(const SideSplit& split, int samples_per_side);

/// Each side smoothed by spline and resampled at `per_side` equal-chord
/// points; the i-th sample carries curve parameter i / (per_side - 1).
std::pair<ParameterizedSide, ParameterizedSide> resample_sides(const SideSplit& split, int per_side);

/// Top samples map to (t, 0) and bottom samples to (t, 1) on the fiducial
/// rectangle; 2 * per_side correspondences, corners bit-exact.
std::vector<Correspondence> make_correspondences(const SideSplit& split, int per_side);

struct SyntheticSpec {
  /// Sinusoid amplitude as a fraction of text height, in [0, 0.5].
  double amplitude_frac = 0.3;
  double periods = 1.5;
  double text_height = 32.0;
  /// Centerline length over text height.
  double aspect = 5.0;
  double perspective_angle_deg = 0.0;
  /// Focal length as a multiple of the image width.
  double focal_scale = 1.0;
  int points_per_side = 32;
  std::uint64_t seed = 0;
};

struct SyntheticInstance {
  TextInstance instance;
  /// Ground-truth sides after the perspective warp.
  SideSplit truth;
  /// Centerline samples after the warp (same x parameters as the sides).
  std::vector<Point> centerline;
  /// Polygon before the perspective warp.
  Polygon pre_warp;
  double image_w = 0.0;
  double image_h = 0.0;
};

/// Curved text band: a sinusoidal centerline offset by +-height/2 along its
/// true normal, placed one text height from the image border, then warped by
/// perspective_from_left_edge. The seed picks the sinusoid phase. Throws
/// DegenerateShape when the offset curves fold, ConfigError for out-of-range
/// fields.
SyntheticInstance generate_synthetic(const SyntheticSpec& spec);

struct SyntheticCorpusSpec {
  std::size_t count = 200;
  double amplitude_frac = 0.3;
  double periods = 1.5;
  double perspective_angle_deg = 0.0;
  double min_height = 24.0, max_height = 48.0;
  double min_aspect = 4.0, max_aspect = 8.0;
  std::uint64_t seed = 42;
};

/// Instance i uses seed + i for its phase, height and aspect, so the pre-warp
/// shapes are identical across perspective angles.
std::vector<SyntheticInstance> synthetic_corpus(const SyntheticCorpusSpec& spec);

/// Extra layers drawn on top of one instance.
struct SvgOverlay {
  /// Fitted boundaries, drawn as red closed polylines.
  std::vector<std::vector<Point>> fitted;
  /// Control points (fiducial images or Bezier controls), blue dots.
  std::vector<Point> controls;
  /// Raster drawn underneath in image coordinates.
  std::optional<GrayImage> mask;
};

/// Standalone SVG 1.1 document. Ground truth polygons are green. `overlays`
/// is either empty or parallel to `instances`. Throws ConfigError on an empty
/// instance list.
std::string render_svg(std::span<const TextInstance> instances, std::span<const SvgOverlay> overlays,
                       double width = 0.0, double height = 0.0);

}  // namespace tpsgeom

#pragma once

#include "tpsgeom/bezier.hpp"
#include "tpsgeom/dataio.hpp"
#include "tpsgeom/tps.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tpsgeom {

struct BezierRep {
  int degree = 3;
};

/// The shape model a fit targets: a TPS over a fiducial configuration or the
/// two-curve Bezier baseline.
using Representation = std::variant<FiducialConfig, BezierRep>;

std::string describe(const Representation& rep);

struct ShapeFitOptions {
  int per_side = 32;
  double regularization = 1e-8;
  /// Lattice columns of the decoded TPS boundary; the Bezier boundary uses
  /// boundary_cols + 1 samples per side so both have the same vertex count.
  int boundary_cols = 32;
  /// Points per short edge added to the TPS fit at v = i / (n + 1), each
  /// mapped onto the straight segment between the edge's two corners.
  /// Without them the short edges of the decoded boundary are unconstrained.
  int short_edge_points = 1;
};

struct ShapeFit {
  std::vector<Point> boundary;
  /// RMS distance between the model and the resampled side points.
  double rms_residual = 0.0;
  std::optional<TpsFit> tps;
  std::optional<BezierParams> bezier;
};

/// Smooths and resamples the split, fits the representation and decodes the
/// closed boundary.
ShapeFit fit_shape(const SideSplit& split, const Representation& rep, const ShapeFitOptions& options = {});

}  // namespace tpsgeom

#pragma once

#include "tpsgeom/geometry.hpp"
#include "tpsgeom/image_io.hpp"
#include "tpsgeom/tps.hpp"

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace tpsgeom {

/// Distance-to-border field of one instance. `raw` holds M and `values` the
/// relaxed M'. Cell (c, r) sits at raster coordinate (c, r) of `frame`.
struct BorderMask {
  int width = 0;
  int height = 0;
  std::vector<double> raw;
  std::vector<double> values;
  double t_b = 0.6;
  double t_r = 0.8;
  double text_height = 1.0;
  RasterFrame frame;

  double at(int c, int r) const { return values[static_cast<std::size_t>(r) * width + c]; }
  double raw_at(int c, int r) const { return raw[static_cast<std::size_t>(r) * width + c]; }
  GrayImage image() const { return {width, height, values, frame}; }
};

/// M = 1 - d / (s t_b), or 0 once d / s >= t_b.
double border_value(double d, double s, double t_b);
/// M' = 1 when M >= t_r, otherwise M / t_r.
double relax_value(double m, double t_r);

/// A raster placement covering the boundary plus the mask's nonzero band.
struct RasterLayout {
  RasterFrame frame;
  int width = 0;
  int height = 0;
};

/// Frame with `scale` cells per pixel whose raster covers the bounding box of
/// `pts` grown by `margin` pixels on every side.
RasterLayout layout_for(std::span<const Point> pts, double margin, double scale = 1.0);

/// d is the exact distance from each cell centre to the closed boundary
/// polyline. Throws ConfigError unless s > 0, t_b > 0, 0 < t_r <= 1 and the
/// raster is non-empty.
BorderMask make_border_mask(std::span<const Point> boundary, double s, const RasterLayout& layout,
                            double t_b = 0.6, double t_r = 0.8);

/// Convenience overload: layout_for(boundary, t_b * s + 2 cells, scale).
BorderMask make_border_mask(std::span<const Point> boundary, double s, double t_b = 0.6, double t_r = 0.8,
                            double scale = 1.0);

/// Mean height of a text band: area over the mean length of its two long sides.
double text_height(std::span<const Point> top, std::span<const Point> bottom);

struct Sample {
  double value = 0.0;
  Point grad{};
};

/// Bilinear interpolation between cell centres at raster coordinate p. On a
/// cell edge the cell to the right (below) is used, except on the last
/// row/column. Points outside [0, w-1] x [0, h-1] take the clamped value with
/// zero gradient.
Sample bilinear_sample(std::span<const double> values, int width, int height, Point p);

/// Loss value with the gradient with respect to every input point.
struct PointLoss {
  double loss = 0.0;
  std::vector<Point> grad;
};

/// mean(1 - M'(p)) over the boundary points given in image coordinates;
/// gradients are in image coordinates as well.
PointLoss ba_loss(const BorderMask& mask, std::span<const Point> boundary);

/// mean Euclidean distance of the 4 corners; the gradient of a coincident
/// corner is zero.
PointLoss corner_loss(std::span<const Point> pred, std::span<const Point> gt);

/// Per-instance inputs of the regression loss.
struct RegTerm {
  double ba = 0.0;
  double corner = 0.0;
  double area = 0.0;
};

/// (1/N) sum (ba + corner) / area. Terms are summed in sorted order so the
/// result does not depend on instance order. Throws ConfigError when empty and
/// DegenerateShape when an area is not positive.
double reg_loss(std::span<const RegTerm> terms);

struct RegInstance {
  std::vector<Point> boundary;
  const BorderMask* mask = nullptr;
  std::array<Point, 4> gt_corners{};
  std::array<std::size_t, 4> corner_indices{};
  double area = 0.0;
};

double reg_loss(std::span<const RegInstance> instances);

/// Basis rows of the decoded text boundary (perimeter of the 3 x cols lattice,
/// same order as decode_boundary) so losses can be pulled back onto T.
class BoundaryBasis {
 public:
  BoundaryBasis(const FiducialConfig& cfg, int cols = 32);

  const FiducialConfig& config() const { return config_; }
  const Eigen::MatrixXd& phi() const { return phi_; }
  const std::array<std::size_t, 4>& corners() const { return corners_; }
  std::vector<Point> decode(const TpsParams& params) const;

 private:
  FiducialConfig config_;
  Eigen::MatrixXd phi_;
  std::array<std::size_t, 4> corners_{};
};

struct ParamLoss {
  double loss = 0.0;
  double ba = 0.0;
  double corner = 0.0;
  Eigen::Matrix<double, 2, Eigen::Dynamic> grad;
};

/// L_BA + L_cor of the decoded boundary, with its gradient with respect to T.
ParamLoss param_loss(const BoundaryBasis& basis, const TpsParams& params, const BorderMask& mask,
                     std::span<const Point> gt_corners);

/// Gaussian Text Center map: values in [0, 1], zero outside the decoded
/// polygon.
struct GtcMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  RasterFrame frame;

  double at(int c, int r) const { return values[static_cast<std::size_t>(r) * width + c]; }
  GrayImage image() const { return {width, height, values, frame}; }
};

struct GtcOptions {
  double sigma_x = 0.25;
  double sigma_y = 0.25;
  /// Lattice samples per raster cell along each direction of the text.
  int oversample = 4;
};

/// exp(-((u-0.5)^2 / 2 sx^2 + (v-0.5)^2 / 2 sy^2)) on the fiducial rectangle.
double gtc_reference(Point uv, double sigma_x, double sigma_y);

/// The Gaussian on the fiducial rectangle pushed through T. The oversampled
/// lattice is forward-warped and each cell keeps the landing sample with the
/// highest Gaussian value; that sample's (u, v) is refined by Newton iteration
/// on decode so the cell carries the Gaussian at its exact pre-image.
GtcMap make_gtc(const TpsParams& params, const RasterLayout& layout, const GtcOptions& options = {});

/// -sum [y log p + (1 - y) log(1 - p)] with p clamped to [1e-7, 1 - 1e-7].
/// Throws ConfigError on length mismatch.
double soft_cross_entropy(std::span<const double> y, std::span<const double> p);

}  // namespace tpsgeom

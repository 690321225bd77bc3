#pragma once

#include "tpsgeom/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tpsgeom {

enum class FiducialDistribution { Edge, Cross, Center };

std::string to_string(FiducialDistribution d);
/// Accepts "edge", "cross", "center"; throws ConfigError otherwise.
FiducialDistribution parse_distribution(std::string_view name);

/// The k fixed points on the unit fiducial rectangle [0,1]^2 that define the
/// radial part of the basis. The four rectangle corners are always included.
/// Points are stored ordered by x, then y.
class FiducialConfig {
 public:
  FiducialDistribution distribution() const { return distribution_; }
  int k() const { return static_cast<int>(points_.size()); }
  const std::vector<Point>& points() const { return points_; }
  /// Width of the parameter matrix, k + 3.
  int dim() const { return k() + 3; }

  friend bool operator==(const FiducialConfig&, const FiducialConfig&) = default;

 private:
  friend FiducialConfig make_fiducials(FiducialDistribution, int);
  FiducialDistribution distribution_ = FiducialDistribution::Cross;
  std::vector<Point> points_;
};

/// Edge: k/2 evenly spaced points on the top edge and k/2 on the bottom edge.
/// Center: the corners plus k-4 evenly spaced points on the midline y = 0.5.
/// Cross: the corners plus interior columns that alternate between a midline
/// point and a top/bottom edge pair, starting and ending on a midline column;
/// for k = 8 the columns are x = 0.25 (mid), 0.5 (edge pair), 0.75 (mid).
/// Throws ConfigError if k is odd, below 4, or yields an ill-conditioned basis.
FiducialConfig make_fiducials(FiducialDistribution distribution, int k = 8);

/// r(d) = d^2 ln d, with r(0) = 0.
double radial_basis(double d);

/// phi(p) = [1, x, y, r(d_1), ..., r(d_k)] for a point on the fiducial rectangle.
Eigen::VectorXd eval_basis(const FiducialConfig& cfg, Point p);

/// 2 x (k+3) parameter matrix: row 0 produces x', row 1 produces y'.
/// Columns are [c, a1, a2, w_1 .. w_k].
struct TpsParams {
  FiducialConfig config;
  Eigen::Matrix<double, 2, Eigen::Dynamic> t;

  /// Throws ConfigError unless t has k+3 finite columns.
  void validate() const;
  /// Pure affine parameters: x' = c + A [x y]^T, zero local weights.
  static TpsParams affine(const FiducialConfig& cfg, Point offset, const Eigen::Matrix2d& linear);
};

/// Image-space grid of rows x cols points. points[r * cols + c] is the image
/// of lattice point (c / (cols-1), r / (rows-1)).
struct ShapeGrid {
  int rows = 0;
  int cols = 0;
  std::vector<Point> points;

  const Point& at(int r, int c) const { return points[static_cast<std::size_t>(r) * cols + c]; }
  /// Perimeter traversal: top row left to right, right column downward, bottom
  /// row right to left, left column upward. Corners appear once.
  std::vector<Point> boundary() const;
};

/// Basis values for a fixed rows x cols lattice on [0,1]^2. The matrix does
/// not depend on the parameters, so one instance can decode any number of
/// TpsParams sharing the configuration.
class LatticeBasis {
 public:
  LatticeBasis(const FiducialConfig& cfg, int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const FiducialConfig& config() const { return config_; }
  /// (rows*cols) x (k+3), row-major over the lattice.
  const Eigen::MatrixXd& phi() const { return phi_; }

  ShapeGrid decode(const TpsParams& params) const;

 private:
  FiducialConfig config_;
  int rows_;
  int cols_;
  Eigen::MatrixXd phi_;
};

/// (x', y')^T = T phi(x, y) over a uniform rows x cols lattice.
ShapeGrid decode(const TpsParams& params, int grid_rows, int grid_cols);

/// Maps one point of the fiducial rectangle.
Point decode_point(const TpsParams& params, Point p);

/// Closed text boundary: perimeter of the 3 x cols lattice (top row, right
/// midpoint, bottom row reversed, left midpoint), 2*cols + 2 points.
std::vector<Point> decode_boundary(const TpsParams& params, int cols = 32);

/// Indices of tl, tr, br, bl inside decode_boundary(params, cols).
std::array<std::size_t, 4> boundary_corner_indices(int cols = 32);

/// A point on the fiducial rectangle paired with its image location.
struct Correspondence {
  Point source;
  Point target;
};

struct FitOptions {
  /// Ridge weight applied to the local weights only.
  double regularization = 1e-8;
};

struct TpsFit {
  TpsParams params;
  double rms_residual = 0.0;
  double max_residual = 0.0;
  /// 2-norm condition number of the (augmented) least-squares matrix.
  double condition = 0.0;
  bool used_qr = false;
};

/// Least-squares fit of T to the correspondences. Normal equations with a
/// Cholesky factorization when their condition estimate stays below 1e10,
/// otherwise column-pivoted QR on the augmented system. Throws SingularFit
/// when the least-squares matrix has condition above 1e12, ConfigError when
/// there are fewer than k+3 correspondences.
TpsFit fit(const FiducialConfig& cfg, std::span<const Correspondence> correspondences,
           const FitOptions& options = {});

struct TpsDecomposition {
  Eigen::Matrix<double, 2, 3> affine;
  Eigen::Matrix<double, 2, Eigen::Dynamic> local;

  /// affine * [1 x y]^T + local * [r(d_1) .. r(d_k)]^T
  Point apply(const FiducialConfig& cfg, Point p) const;
};

TpsDecomposition decompose(const TpsParams& params);

/// out_h x out_w lattice decoded through params; sampling a source image at
/// these points yields the rectified crop.
ShapeGrid rectification_grid(const TpsParams& params, int out_h, int out_w);

}  // namespace tpsgeom

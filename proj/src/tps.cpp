#include "tpsgeom/tps.hpp"

#include "tpsgeom/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tpsgeom {

std::string to_string(FiducialDistribution d) {
  switch (d) {
    case FiducialDistribution::Edge:
      return "edge";
    case FiducialDistribution::Cross:
      return "cross";
    case FiducialDistribution::Center:
      return "center";
  }
  return "cross";
}

FiducialDistribution parse_distribution(std::string_view name) {
  if (name == "edge") return FiducialDistribution::Edge;
  if (name == "cross") return FiducialDistribution::Cross;
  if (name == "center") return FiducialDistribution::Center;
  throw ConfigError("unknown fiducial distribution '" + std::string(name) + "'");
}

double radial_basis(double d) { return d == 0.0 ? 0.0 : d * d * std::log(d); }

namespace {

std::vector<Point> edge_points(int k) {
  std::vector<Point> pts;
  const int per_edge = k / 2;
  for (int j = 0; j < per_edge; ++j) {
    const double x = static_cast<double>(j) / (per_edge - 1);
    pts.push_back({x, 0.0});
    pts.push_back({x, 1.0});
  }
  return pts;
}

std::vector<Point> center_points(int k) {
  std::vector<Point> pts{{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
  const int interior = k - 4;
  for (int j = 1; j <= interior; ++j) {
    pts.push_back({static_cast<double>(j) / (interior + 1), 0.5});
  }
  return pts;
}

std::vector<Point> cross_points(int k) {
  // Column kinds along the width: true = edge pair, false = midline point.
  std::vector<bool> columns;
  int remaining = k - 4;
  bool want_mid = true;
  while (remaining > 0) {
    if (!want_mid && remaining >= 2) {
      columns.push_back(true);
      remaining -= 2;
    } else {
      columns.push_back(false);
      remaining -= 1;
    }
    want_mid = !want_mid;
  }
  std::vector<Point> pts{{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
  const double n = static_cast<double>(columns.size()) + 1.0;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const double x = static_cast<double>(j + 1) / n;
    if (columns[j]) {
      pts.push_back({x, 0.0});
      pts.push_back({x, 1.0});
    } else {
      pts.push_back({x, 0.5});
    }
  }
  return pts;
}

// Classical TPS interpolation system [[K, P], [P^T, 0]].
Eigen::MatrixXd tps_system(const std::vector<Point>& pts) {
  const auto k = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k + 3, k + 3);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) l(i, j) = radial_basis(distance(pts[i], pts[j]));
    l(i, k) = l(k, i) = 1.0;
    l(i, k + 1) = l(k + 1, i) = pts[i].x;
    l(i, k + 2) = l(k + 2, i) = pts[i].y;
  }
  return l;
}

double condition_number(const Eigen::MatrixXd& m) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

}  // namespace

FiducialConfig make_fiducials(FiducialDistribution distribution, int k) {
  if (k < 4 || k % 2 != 0) {
    throw ConfigError("fiducial count k must be even and >= 4, got " + std::to_string(k));
  }
  FiducialConfig cfg;
  cfg.distribution_ = distribution;
  switch (distribution) {
    case FiducialDistribution::Edge:
      cfg.points_ = edge_points(k);
      break;
    case FiducialDistribution::Center:
      cfg.points_ = center_points(k);
      break;
    case FiducialDistribution::Cross:
      cfg.points_ = cross_points(k);
      break;
  }
  std::sort(cfg.points_.begin(), cfg.points_.end(),
            [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (!(condition_number(tps_system(cfg.points_)) < 1e12)) {
    throw ConfigError("fiducial configuration yields a singular TPS system");
  }
  return cfg;
}

Eigen::VectorXd eval_basis(const FiducialConfig& cfg, Point p) {
  Eigen::VectorXd phi(cfg.dim());
  phi(0) = 1.0;
  phi(1) = p.x;
  phi(2) = p.y;
  const auto& f = cfg.points();
  for (std::size_t i = 0; i < f.size(); ++i) phi(3 + static_cast<Eigen::Index>(i)) = radial_basis(distance(p, f[i]));
  return phi;
}

void TpsParams::validate() const {
  if (t.cols() != config.dim()) {
    throw ConfigError("TPS parameter matrix has " + std::to_string(t.cols()) + " columns, expected " +
                      std::to_string(config.dim()));
  }
  if (!t.allFinite()) throw ConfigError("TPS parameters contain non-finite entries");
}

TpsParams TpsParams::affine(const FiducialConfig& cfg, Point offset, const Eigen::Matrix2d& linear) {
  TpsParams p{cfg, Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, cfg.dim())};
  p.t(0, 0) = offset.x;
  p.t(1, 0) = offset.y;
  p.t.block<2, 2>(0, 1) = linear;
  return p;
}

std::vector<Point> ShapeGrid::boundary() const {
  std::vector<Point> out;
  for (int c = 0; c < cols; ++c) out.push_back(at(0, c));
  for (int r = 1; r < rows - 1; ++r) out.push_back(at(r, cols - 1));
  for (int c = cols - 1; c >= 0; --c) out.push_back(at(rows - 1, c));
  for (int r = rows - 2; r >= 1; --r) out.push_back(at(r, 0));
  return out;
}

LatticeBasis::LatticeBasis(const FiducialConfig& cfg, int rows, int cols)
    : config_(cfg), rows_(rows), cols_(cols) {
  if (rows < 2 || cols < 2) throw ConfigError("lattice dimensions must be >= 2");
  phi_.resize(static_cast<Eigen::Index>(rows) * cols, cfg.dim());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Point p{static_cast<double>(c) / (cols - 1), static_cast<double>(r) / (rows - 1)};
      phi_.row(static_cast<Eigen::Index>(r) * cols + c) = eval_basis(cfg, p).transpose();
    }
  }
}

ShapeGrid LatticeBasis::decode(const TpsParams& params) const {
  if (params.t.cols() != phi_.cols()) throw ConfigError("parameter width does not match lattice basis");
  const Eigen::MatrixXd xy = phi_ * params.t.transpose();
  ShapeGrid g{rows_, cols_, {}};
  g.points.resize(static_cast<std::size_t>(xy.rows()));
  for (Eigen::Index i = 0; i < xy.rows(); ++i) g.points[static_cast<std::size_t>(i)] = {xy(i, 0), xy(i, 1)};
  return g;
}

ShapeGrid decode(const TpsParams& params, int grid_rows, int grid_cols) {
  return LatticeBasis(params.config, grid_rows, grid_cols).decode(params);
}

Point decode_point(const TpsParams& params, Point p) {
  const Eigen::Vector2d v = params.t * eval_basis(params.config, p);
  return {v(0), v(1)};
}

std::vector<Point> decode_boundary(const TpsParams& params, int cols) {
  return decode(params, 3, cols).boundary();
}

std::array<std::size_t, 4> boundary_corner_indices(int cols) {
  const auto c = static_cast<std::size_t>(cols);
  return {0, c - 1, c + 1, 2 * c};
}

TpsFit fit(const FiducialConfig& cfg, std::span<const Correspondence> correspondences,
           const FitOptions& options) {
  const Eigen::Index n = cfg.dim();
  const auto m = static_cast<Eigen::Index>(correspondences.size());
  if (m < n) {
    throw ConfigError("TPS fit needs at least " + std::to_string(n) + " correspondences, got " +
                      std::to_string(m));
  }
  if (!(options.regularization >= 0.0)) throw ConfigError("regularization must be non-negative");

  const Eigen::Index k = n - 3;
  const bool ridge = options.regularization > 0.0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + (ridge ? k : 0), n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(a.rows(), 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = correspondences[static_cast<std::size_t>(i)];
    a.row(i) = eval_basis(cfg, c.source).transpose();
    b(i, 0) = c.target.x;
    b(i, 1) = c.target.y;
  }
  if (ridge) {
    const double s = std::sqrt(options.regularization);
    for (Eigen::Index j = 0; j < k; ++j) a(m + j, 3 + j) = s;
  }

  TpsFit out;
  out.condition = condition_number(a);
  if (!(out.condition <= 1e12)) {
    throw SingularFit("TPS least-squares system is rank deficient (condition " +
                      std::to_string(out.condition) + ")");
  }

  Eigen::MatrixXd x;
  if (out.condition * out.condition <= 1e10) {
    const Eigen::MatrixXd normal = a.transpose() * a;
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() == Eigen::Success) {
      x = llt.solve(a.transpose() * b);
    }
  }
  if (x.size() == 0) {
    out.used_qr = true;
    x = a.colPivHouseholderQr().solve(b);
  }

  out.params.config = cfg;
  out.params.t = x.transpose();

  double sum2 = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Vector2d pred = out.params.t * a.row(i).transpose();
    const double r = std::hypot(pred(0) - b(i, 0), pred(1) - b(i, 1));
    sum2 += r * r;
    out.max_residual = std::max(out.max_residual, r);
  }
  out.rms_residual = std::sqrt(sum2 / static_cast<double>(m));
  return out;
}

Point TpsDecomposition::apply(const FiducialConfig& cfg, Point p) const {
  const Eigen::Vector3d lin(1.0, p.x, p.y);
  Eigen::VectorXd r(cfg.k());
  for (int i = 0; i < cfg.k(); ++i) r(i) = radial_basis(distance(p, cfg.points()[static_cast<std::size_t>(i)]));
  const Eigen::Vector2d v = affine * lin + local * r;
  return {v(0), v(1)};
}

TpsDecomposition decompose(const TpsParams& params) {
  params.validate();
  TpsDecomposition d;
  d.affine = params.t.leftCols<3>();
  d.local = params.t.rightCols(params.config.k());
  return d;
}

ShapeGrid rectification_grid(const TpsParams& params, int out_h, int out_w) {
  return decode(params, out_h, out_w);
}

}  // namespace tpsgeom

#include "tpsgeom/losses.hpp"

#include "tpsgeom/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tpsgeom {

double border_value(double d, double s, double t_b) {
  const double ratio = d / s;
  if (ratio >= t_b) return 0.0;
  return 1.0 - ratio / t_b;
}

double relax_value(double m, double t_r) { return m >= t_r ? 1.0 : m / t_r; }

RasterLayout layout_for(std::span<const Point> pts, double margin, double scale) {
  if (!(scale > 0.0)) throw ConfigError("raster scale must be positive");
  if (!(margin >= 0.0)) throw ConfigError("raster margin must be non-negative");
  const BoundingBox b = bounding_box(pts);
  RasterLayout out;
  out.frame.origin = {b.min_x - margin, b.min_y - margin};
  out.frame.scale = scale;
  out.width = static_cast<int>(std::ceil((b.width() + 2.0 * margin) * scale)) + 1;
  out.height = static_cast<int>(std::ceil((b.height() + 2.0 * margin) * scale)) + 1;
  return out;
}

BorderMask make_border_mask(std::span<const Point> boundary, double s, const RasterLayout& layout, double t_b,
                            double t_r) {
  if (!(s > 0.0)) throw ConfigError("text height must be positive");
  if (!(t_b > 0.0)) throw ConfigError("t_b must be positive");
  if (!(t_r > 0.0 && t_r <= 1.0)) throw ConfigError("t_r must lie in (0, 1]");
  if (layout.width < 1 || layout.height < 1) throw ConfigError("mask raster is empty");
  if (boundary.size() < 2) throw ConfigError("mask boundary needs at least 2 points");
  BorderMask m;
  m.width = layout.width;
  m.height = layout.height;
  m.t_b = t_b;
  m.t_r = t_r;
  m.text_height = s;
  m.frame = layout.frame;
  const auto n = static_cast<std::size_t>(m.width) * m.height;
  m.raw.resize(n);
  m.values.resize(n);
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      const Point p = m.frame.to_image({static_cast<double>(c), static_cast<double>(r)});
      const double v = border_value(distance_to_boundary(boundary, p), s, t_b);
      const auto i = static_cast<std::size_t>(r) * m.width + c;
      m.raw[i] = v;
      m.values[i] = relax_value(v, t_r);
    }
  }
  return m;
}

BorderMask make_border_mask(std::span<const Point> boundary, double s, double t_b, double t_r, double scale) {
  const RasterLayout layout = layout_for(boundary, t_b * s + 2.0 / scale, scale);
  return make_border_mask(boundary, s, layout, t_b, t_r);
}

double text_height(std::span<const Point> top, std::span<const Point> bottom) {
  auto length = [](std::span<const Point> pts) {
    double acc = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) acc += distance(pts[i - 1], pts[i]);
    return acc;
  };
  std::vector<Point> poly(top.begin(), top.end());
  poly.insert(poly.end(), bottom.rbegin(), bottom.rend());
  const double mean_len = 0.5 * (length(top) + length(bottom));
  if (!(mean_len > 0.0)) throw DegenerateShape("text band has zero length");
  return std::abs(signed_area(poly)) / mean_len;
}

Sample bilinear_sample(std::span<const double> values, int width, int height, Point p) {
  if (width < 2 || height < 2) throw ConfigError("bilinear sampling needs a raster of at least 2 x 2");
  const double max_x = width - 1;
  const double max_y = height - 1;
  const bool outside = !(p.x >= 0.0 && p.x <= max_x && p.y >= 0.0 && p.y <= max_y);
  const double x = std::clamp(p.x, 0.0, max_x);
  const double y = std::clamp(p.y, 0.0, max_y);
  const int c = std::min(static_cast<int>(std::floor(x)), width - 2);
  const int r = std::min(static_cast<int>(std::floor(y)), height - 2);
  const double fx = x - c;
  const double fy = y - r;
  auto at = [&](int cc, int rr) { return values[static_cast<std::size_t>(rr) * width + cc]; };
  const double v00 = at(c, r), v10 = at(c + 1, r), v01 = at(c, r + 1), v11 = at(c + 1, r + 1);
  Sample s;
  s.value = (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
  if (!outside) {
    s.grad.x = (1 - fy) * (v10 - v00) + fy * (v11 - v01);
    s.grad.y = (1 - fx) * (v01 - v00) + fx * (v11 - v10);
  }
  return s;
}

PointLoss ba_loss(const BorderMask& mask, std::span<const Point> boundary) {
  if (boundary.empty()) throw ConfigError("ba_loss needs at least one boundary point");
  PointLoss out;
  out.grad.resize(boundary.size());
  const double inv_n = 1.0 / static_cast<double>(boundary.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const Sample s = bilinear_sample(mask.values, mask.width, mask.height, mask.frame.to_raster(boundary[i]));
    acc += 1.0 - s.value;
    out.grad[i] = -inv_n * mask.frame.scale * s.grad;
  }
  out.loss = acc * inv_n;
  return out;
}

PointLoss corner_loss(std::span<const Point> pred, std::span<const Point> gt) {
  if (pred.size() != 4 || gt.size() != 4) throw ConfigError("corner_loss needs 4 predicted and 4 true corners");
  PointLoss out;
  out.grad.resize(4);
  for (std::size_t i = 0; i < 4; ++i) {
    const Point d = pred[i] - gt[i];
    const double n = norm(d);
    out.loss += 0.25 * n;
    if (n > 0.0) out.grad[i] = (0.25 / n) * d;
  }
  return out;
}

double reg_loss(std::span<const RegTerm> terms) {
  if (terms.empty()) throw ConfigError("reg_loss needs at least one instance");
  std::vector<double> parts;
  parts.reserve(terms.size());
  for (const RegTerm& t : terms) {
    if (!(t.area > 0.0)) throw DegenerateShape("instance area must be positive");
    parts.push_back((t.ba + t.corner) / t.area);
  }
  std::sort(parts.begin(), parts.end());
  double acc = 0.0;
  for (double v : parts) acc += v;
  return acc / static_cast<double>(parts.size());
}

double reg_loss(std::span<const RegInstance> instances) {
  std::vector<RegTerm> terms;
  terms.reserve(instances.size());
  for (const RegInstance& inst : instances) {
    if (inst.mask == nullptr) throw ConfigError("reg_loss instance has no mask");
    std::array<Point, 4> pred{};
    for (std::size_t i = 0; i < 4; ++i) {
      if (inst.corner_indices[i] >= inst.boundary.size()) throw ConfigError("corner index out of range");
      pred[i] = inst.boundary[inst.corner_indices[i]];
    }
    terms.push_back({ba_loss(*inst.mask, inst.boundary).loss, corner_loss(pred, inst.gt_corners).loss, inst.area});
  }
  return reg_loss(terms);
}

BoundaryBasis::BoundaryBasis(const FiducialConfig& cfg, int cols)
    : config_(cfg), corners_(boundary_corner_indices(cols)) {
  const LatticeBasis lattice(cfg, 3, cols);
  std::vector<Eigen::Index> rows;
  for (int c = 0; c < cols; ++c) rows.push_back(c);
  rows.push_back(cols + cols - 1);
  for (int c = cols - 1; c >= 0; --c) rows.push_back(2 * cols + c);
  rows.push_back(cols);
  phi_.resize(static_cast<Eigen::Index>(rows.size()), cfg.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    phi_.row(static_cast<Eigen::Index>(i)) = lattice.phi().row(rows[i]);
  }
}

std::vector<Point> BoundaryBasis::decode(const TpsParams& params) const {
  if (params.t.cols() != phi_.cols()) throw ConfigError("parameter width does not match boundary basis");
  const Eigen::MatrixXd xy = phi_ * params.t.transpose();
  std::vector<Point> out(static_cast<std::size_t>(xy.rows()));
  for (Eigen::Index i = 0; i < xy.rows(); ++i) out[static_cast<std::size_t>(i)] = {xy(i, 0), xy(i, 1)};
  return out;
}

ParamLoss param_loss(const BoundaryBasis& basis, const TpsParams& params, const BorderMask& mask,
                     std::span<const Point> gt_corners) {
  const std::vector<Point> boundary = basis.decode(params);
  const PointLoss ba = ba_loss(mask, boundary);
  std::array<Point, 4> pred{};
  for (std::size_t i = 0; i < 4; ++i) pred[i] = boundary[basis.corners()[i]];
  const PointLoss cor = corner_loss(pred, gt_corners);

  Eigen::Matrix<double, 2, Eigen::Dynamic> g(2, static_cast<Eigen::Index>(boundary.size()));
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    g(0, static_cast<Eigen::Index>(i)) = ba.grad[i].x;
    g(1, static_cast<Eigen::Index>(i)) = ba.grad[i].y;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const auto col = static_cast<Eigen::Index>(basis.corners()[i]);
    g(0, col) += cor.grad[i].x;
    g(1, col) += cor.grad[i].y;
  }
  ParamLoss out;
  out.ba = ba.loss;
  out.corner = cor.loss;
  out.loss = ba.loss + cor.loss;
  out.grad = g * basis.phi();
  return out;
}

double gtc_reference(Point uv, double sigma_x, double sigma_y) {
  const double dx = (uv.x - 0.5) / sigma_x;
  const double dy = (uv.y - 0.5) / sigma_y;
  return std::exp(-0.5 * (dx * dx + dy * dy));
}

namespace {

// d(decode)/du and d(decode)/dv at uv, in image units.
Eigen::Matrix2d decode_jacobian(const TpsParams& params, Point uv) {
  const FiducialConfig& cfg = params.config;
  Eigen::Matrix<double, Eigen::Dynamic, 2> dphi = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(cfg.dim(), 2);
  dphi(1, 0) = 1.0;
  dphi(2, 1) = 1.0;
  for (int i = 0; i < cfg.k(); ++i) {
    const Point f = cfg.points()[static_cast<std::size_t>(i)];
    const Point d = uv - f;
    const double r = norm(d);
    if (r == 0.0) continue;
    const double g = 2.0 * std::log(r) + 1.0;
    dphi(3 + i, 0) = g * d.x;
    dphi(3 + i, 1) = g * d.y;
  }
  return params.t * dphi;
}

double polyline_length(std::span<const Point> pts) {
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) acc += distance(pts[i - 1], pts[i]);
  return acc;
}

}  // namespace

GtcMap make_gtc(const TpsParams& params, const RasterLayout& layout, const GtcOptions& options) {
  params.validate();
  if (!(options.sigma_x > 0.0 && options.sigma_y > 0.0)) throw ConfigError("GTC sigma must be positive");
  if (options.oversample < 1) throw ConfigError("GTC oversample must be >= 1");
  if (layout.width < 1 || layout.height < 1) throw ConfigError("GTC raster is empty");
  const RasterFrame& frame = layout.frame;

  // Lattice density from the longest decoded row and column, in raster cells.
  constexpr int kProbe = 33;
  const ShapeGrid probe = decode(params, kProbe, kProbe);
  double max_row = 0.0, max_col = 0.0;
  for (int i = 0; i < kProbe; ++i) {
    std::vector<Point> row, col;
    for (int j = 0; j < kProbe; ++j) {
      row.push_back(frame.to_raster(probe.at(i, j)));
      col.push_back(frame.to_raster(probe.at(j, i)));
    }
    max_row = std::max(max_row, polyline_length(row));
    max_col = std::max(max_col, polyline_length(col));
  }
  constexpr int kMaxLattice = 4096;
  const int cols = std::clamp(static_cast<int>(std::ceil(options.oversample * max_row)) + 2, 2, kMaxLattice);
  const int rows = std::clamp(static_cast<int>(std::ceil(options.oversample * max_col)) + 2, 2, kMaxLattice);
  const ShapeGrid warped = LatticeBasis(params.config, rows, cols).decode(params);

  GtcMap out;
  out.width = layout.width;
  out.height = layout.height;
  out.frame = frame;
  const auto n = static_cast<std::size_t>(out.width) * out.height;
  out.values.assign(n, 0.0);

  // Max-combine splat: each cell keeps the lattice sample with the highest
  // reference value; ties keep the lower lattice index.
  std::vector<double> best_val(n, -1.0);
  std::vector<Point> best_uv(n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Point q = frame.to_raster(warped.at(r, c));
      const double cx = std::round(q.x), cy = std::round(q.y);
      if (!(cx >= 0 && cy >= 0 && cx < out.width && cy < out.height)) continue;
      const auto i = static_cast<std::size_t>(cy) * out.width + static_cast<std::size_t>(cx);
      const Point uv{static_cast<double>(c) / (cols - 1), static_cast<double>(r) / (rows - 1)};
      const double v = gtc_reference(uv, options.sigma_x, options.sigma_y);
      if (v > best_val[i]) {
        best_val[i] = v;
        best_uv[i] = uv;
      }
    }
  }

  std::vector<Point> poly = decode_boundary(params, 32);
  for (Point& p : poly) p = frame.to_raster(p);

  constexpr double kEps = 1e-9;
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const auto i = static_cast<std::size_t>(r) * out.width + c;
      if (best_val[i] < 0.0) continue;
      const Point cell{static_cast<double>(c), static_cast<double>(r)};
      if (!point_in_polygon(poly, cell) && distance_to_boundary(poly, cell) > kEps) continue;
      Point uv = best_uv[i];
      for (int it = 0; it < 30; ++it) {
        const Point res = frame.to_raster(decode_point(params, uv)) - cell;
        if (norm(res) < 1e-12) break;
        const Eigen::Matrix2d j = frame.scale * decode_jacobian(params, uv);
        if (!(std::abs(j.determinant()) > 1e-300)) break;
        const Eigen::Vector2d step = j.partialPivLu().solve(Eigen::Vector2d(res.x, res.y));
        const Point next{uv.x - step(0), uv.y - step(1)};
        if (!is_finite(next)) break;
        uv = next;
      }
      // Out-of-rectangle pre-images come from decoded folds; they carry no mass.
      if (uv.x < -kEps || uv.x > 1 + kEps || uv.y < -kEps || uv.y > 1 + kEps) {
        uv = best_uv[i];
      }
      out.values[i] = gtc_reference(uv, options.sigma_x, options.sigma_y);
    }
  }
  return out;
}

double soft_cross_entropy(std::span<const double> y, std::span<const double> p) {
  if (y.size() != p.size()) throw ConfigError("soft_cross_entropy inputs differ in length");
  constexpr double kClamp = 1e-7;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p[i], kClamp, 1.0 - kClamp);
    acc -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return acc;
}

}  // namespace tpsgeom

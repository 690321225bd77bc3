#include "tpsgeom/bezier.hpp"

#include "tpsgeom/errors.hpp"

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace tpsgeom {

void BezierParams::validate() const {
  if (top.size() < 2 || top.size() != bottom.size()) {
    throw ConfigError("Bezier sides need equal control counts >= 2");
  }
  for (const auto* side : {&top, &bottom}) {
    for (const Point& p : *side) {
      if (!is_finite(p)) throw ConfigError("Bezier control point is not finite");
    }
  }
}

double bernstein(int i, int n, double t) {
  double binom = 1.0;
  for (int j = 1; j <= i; ++j) binom = binom * (n - i + j) / j;
  return binom * std::pow(t, i) * std::pow(1.0 - t, n - i);
}

Point bezier_point(std::span<const Point> controls, double t) {
  const int n = static_cast<int>(controls.size()) - 1;
  Point p{};
  for (int i = 0; i <= n; ++i) p = p + bernstein(i, n, t) * controls[static_cast<std::size_t>(i)];
  return p;
}

std::vector<Point> bezier_side(std::span<const Point> controls, int samples) {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) {
    if (j == 0) {
      out.push_back(controls.front());
    } else if (j == samples - 1) {
      out.push_back(controls.back());
    } else {
      out.push_back(bezier_point(controls, static_cast<double>(j) / (samples - 1)));
    }
  }
  return out;
}

Polygon bezier_decode(const BezierParams& params, int samples_per_side) {
  params.validate();
  if (samples_per_side < 2) throw ConfigError("samples_per_side must be >= 2");
  std::vector<Point> pts = bezier_side(params.top, samples_per_side);
  const std::vector<Point> low = bezier_side(params.bottom, samples_per_side);
  pts.insert(pts.end(), low.rbegin(), low.rend());
  return Polygon(std::move(pts));
}

std::vector<Point> bezier_fit_side(const ParameterizedSide& side, int degree) {
  if (degree < 1) throw ConfigError("Bezier degree must be >= 1");
  const auto m = side.points.size();
  if (side.t.size() != m) throw ConfigError("side points and parameters differ in length");
  if (m < static_cast<std::size_t>(degree) + 1) {
    throw ConfigError("Bezier side fit needs at least " + std::to_string(degree + 1) + " points");
  }
  std::vector<Point> controls(static_cast<std::size_t>(degree) + 1);
  controls.front() = side.points.front();
  controls.back() = side.points.back();
  const int interior = degree - 1;
  if (interior == 0) return controls;

  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), interior);
  Eigen::MatrixXd b(static_cast<Eigen::Index>(m), 2);
  for (std::size_t j = 0; j < m; ++j) {
    const double t = side.t[j];
    const auto row = static_cast<Eigen::Index>(j);
    for (int i = 1; i < degree; ++i) a(row, i - 1) = bernstein(i, degree, t);
    const Point fixed = bernstein(0, degree, t) * controls.front() +
                        bernstein(degree, degree, t) * controls.back();
    b(row, 0) = side.points[j].x - fixed.x;
    b(row, 1) = side.points[j].y - fixed.y;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 0.0) || s(0) / s(s.size() - 1) > 1e12) {
    throw SingularFit("Bezier side fit is rank deficient");
  }
  const Eigen::MatrixXd x = a.colPivHouseholderQr().solve(b);
  for (int i = 1; i < degree; ++i) controls[static_cast<std::size_t>(i)] = {x(i - 1, 0), x(i - 1, 1)};
  return controls;
}

BezierParams bezier_fit(const ParameterizedSide& top, const ParameterizedSide& bottom, int degree) {
  return {bezier_fit_side(top, degree), bezier_fit_side(bottom, degree)};
}

std::vector<double> chord_parameters(std::span<const Point> pts) {
  std::vector<double> t(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) t[i] = t[i - 1] + distance(pts[i - 1], pts[i]);
  const double total = t.back();
  if (total > 0.0) {
    for (double& v : t) v /= total;
  }
  if (!t.empty()) t.back() = 1.0;
  return t;
}

}  // namespace tpsgeom

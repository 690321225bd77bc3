#include "tpsgeom/spline.hpp"

#include "tpsgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tpsgeom {

namespace {

// Natural cubic spline coefficients for values y over knots t (n >= 2).
std::vector<std::array<double, 4>> natural_coefficients(const std::vector<double>& t,
                                                        const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> m(n, 0.0);  // second derivatives, zero at both ends
  if (n > 2) {
    // Thomas algorithm on the interior equations.
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double h0 = t[i + 1] - t[i];
      const double h1 = t[i + 2] - t[i + 1];
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double lower = t[i + 1] - t[i];
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) {
      m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
  }
  std::vector<std::array<double, 4>> coef(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = t[i + 1] - t[i];
    coef[i] = {y[i], (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0, 0.5 * m[i],
               (m[i + 1] - m[i]) / (6.0 * h)};
  }
  return coef;
}

double horner(const std::array<double, 4>& c, double u) {
  return c[0] + u * (c[1] + u * (c[2] + u * c[3]));
}

double horner_d(const std::array<double, 4>& c, double u) {
  return c[1] + u * (2.0 * c[2] + u * 3.0 * c[3]);
}

}  // namespace

SplineCurve::SplineCurve(std::span<const Point> pts) {
  if (pts.size() < 2) throw MalformedAnnotation("spline side needs at least 2 points");
  knots_.resize(pts.size());
  knots_[0] = 0.0;
  std::vector<double> xs(pts.size()), ys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    xs[i] = pts[i].x;
    ys[i] = pts[i].y;
    if (i > 0) {
      const double chord = distance(pts[i - 1], pts[i]);
      if (!(chord > 0.0)) {
        throw MalformedAnnotation("spline side has repeated point at index " + std::to_string(i));
      }
      knots_[i] = knots_[i - 1] + chord;
    }
  }
  cx_ = natural_coefficients(knots_, xs);
  cy_ = natural_coefficients(knots_, ys);
}

std::size_t SplineCurve::segment(double t) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto idx = static_cast<std::ptrdiff_t>(it - knots_.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(cx_.size()) - 1));
}

Point SplineCurve::evaluate(double t) const {
  const std::size_t s = segment(t);
  const double u = t - knots_[s];
  return {horner(cx_[s], u), horner(cy_[s], u)};
}

Point SplineCurve::derivative(double t) const {
  const std::size_t s = segment(t);
  const double u = t - knots_[s];
  return {horner_d(cx_[s], u), horner_d(cy_[s], u)};
}

namespace {

constexpr int kDenseStepsPerSegment = 64;
constexpr int kInnerIterations = 52;

struct Marcher {
  const SplineCurve& curve;
  std::vector<double> dense_t;
  std::vector<Point> dense_p;

  Marcher(const SplineCurve& c, int count) : curve(c) {
    const auto& k = c.knots();
    // Dense spacing must stay well below the target chord.
    const int per_segment = std::max(kDenseStepsPerSegment, 4 * count);
    for (std::size_t s = 0; s + 1 < k.size(); ++s) {
      for (int j = 0; j < per_segment; ++j) {
        dense_t.push_back(k[s] + (k[s + 1] - k[s]) * j / per_segment);
      }
    }
    dense_t.push_back(k.back());
    for (double t : dense_t) dense_p.push_back(c.evaluate(t));
  }

  double dense_length() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < dense_p.size(); ++i) acc += distance(dense_p[i - 1], dense_p[i]);
    return acc;
  }

  // Walks `steps` equal chords of length d from the start. Returns false if the
  // curve ends first. On success params/points hold steps + 1 entries.
  bool march(double d, int steps, std::vector<double>& params, std::vector<Point>& points) const {
    params.assign(1, 0.0);
    points.assign(1, curve.evaluate(0.0));
    std::size_t idx = 0;
    for (int j = 0; j < steps; ++j) {
      const Point anchor = points.back();
      const double t_prev = params.back();
      // First dense sample past t_prev that is at least d away.
      while (idx < dense_t.size() && (dense_t[idx] <= t_prev || distance(dense_p[idx], anchor) < d)) {
        ++idx;
      }
      if (idx >= dense_t.size()) return false;
      double lo = std::max(t_prev, idx > 0 ? dense_t[idx - 1] : 0.0);
      double hi = dense_t[idx];
      for (int it = 0; it < kInnerIterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (distance(curve.evaluate(mid), anchor) < d) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      params.push_back(hi);
      points.push_back(curve.evaluate(hi));
    }
    return true;
  }
};

}  // namespace

std::vector<Point> resample_equal_chord(const SplineCurve& curve, int count) {
  if (count < 2) throw ConfigError("resample count must be >= 2");
  const Point first = curve.evaluate(0.0);
  const Point last = curve.evaluate(curve.length());
  if (count == 2) return {first, last};

  const Marcher marcher(curve, count);
  const int steps = count - 2;
  std::vector<double> params;
  std::vector<Point> points;

  // Residual of the closing chord; positive means d is too short.
  auto residual = [&](double d, bool& ok) {
    ok = marcher.march(d, steps, params, points);
    return ok ? distance(points.back(), last) - d : -d;
  };

  double lo = 0.0;
  double hi = marcher.dense_length() / (count - 1) * 1.001 + 1e-12;
  bool ok = false;
  double f_lo = residual(lo, ok);
  double f_hi = residual(hi, ok);
  bool hi_valid = ok;
  // Bisection until both ends march successfully, then Illinois regula falsi.
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double d;
    if (hi_valid && f_lo > 0.0 && f_hi < 0.0) {
      d = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
      if (!(d > lo && d < hi)) d = 0.5 * (lo + hi);
    } else {
      d = 0.5 * (lo + hi);
    }
    const double f = residual(d, ok);
    if (ok && std::abs(f) <= 1e-13 * (1.0 + d)) break;
    if (ok && f > 0.0) {
      lo = d;
      f_lo = f;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = d;
      f_hi = f;
      hi_valid = ok;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
    if (hi - lo <= 1e-15 * hi) {
      residual(lo, ok);
      break;
    }
  }
  if (!ok || points.size() != static_cast<std::size_t>(steps + 1)) residual(lo, ok);
  points.push_back(last);
  return points;
}

std::vector<Point> smooth_side(std::span<const Point> side, int samples) {
  const SplineCurve curve(side);
  std::vector<Point> out = resample_equal_chord(curve, samples);
  out.front() = side.front();
  out.back() = side.back();
  return out;
}

Polygon smooth_boundary(std::span<const Point> top, std::span<const Point> bottom,
                        int samples_per_side) {
  if (samples_per_side < 4) throw ConfigError("samples_per_side must be >= 4");
  if (top.size() < 2 || bottom.size() < 2) {
    throw MalformedAnnotation("each side needs at least 2 points");
  }
  std::vector<Point> pts = smooth_side(top, samples_per_side);
  std::vector<Point> low = smooth_side(bottom, samples_per_side);
  pts.insert(pts.end(), low.rbegin(), low.rend());
  return Polygon(std::move(pts));
}

}  // namespace tpsgeom

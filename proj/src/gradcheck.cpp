#include "tpsgeom/gradcheck.hpp"

#include "tpsgeom/dataio.hpp"
#include "tpsgeom/errors.hpp"
#include "tpsgeom/losses.hpp"
#include "tpsgeom/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tpsgeom {

std::string GradcheckReport::summary() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "trials %d\nba_loss: %zu points checked, %zu excluded, max relative error %.3e\n"
                "corner_loss: %zu corners checked, %zu excluded, max relative error %.3e\nfailures %zu\n",
                trials, ba_checked, ba_excluded, ba_max_rel_error, corner_checked, corner_excluded,
                corner_max_rel_error, failures);
  return buf;
}

namespace {

double rel_error(Point a, Point fd) {
  return norm(a - fd) / std::max({norm(a), norm(fd), 1e-6});
}

bool near_cell_edge(Point q, double h, double margin) {
  for (double v : {q.x, q.y}) {
    if (std::abs(v - std::round(v)) < margin + h) return true;
  }
  return false;
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  if (opt.trials < 1) throw ConfigError("gradcheck needs at least one trial");
  if (!(opt.step > 0.0)) throw ConfigError("gradcheck step must be positive");
  GradcheckReport rep;
  rep.trials = opt.trials;
  const double scale_grad = opt.corrupt ? 1.5 : 1.0;
  constexpr int kPoints = 16;

  for (int trial = 0; trial < opt.trials; ++trial) {
    CounterRng rng = CounterRng(opt.seed).split(static_cast<std::uint64_t>(trial));
    SyntheticSpec spec;
    spec.text_height = rng.uniform(8.0, 16.0);
    spec.aspect = rng.uniform(4.0, 8.0);
    spec.periods = rng.uniform(0.25, 1.0);
    spec.amplitude_frac = rng.uniform(0.0, 0.3);
    spec.perspective_angle_deg = rng.uniform(0.0, 60.0);
    spec.seed = rng.next_u64();
    const SyntheticInstance syn = generate_synthetic(spec);
    const auto& poly = syn.instance.polygon.points();
    const double s = spec.text_height;
    const BorderMask mask = make_border_mask(poly, s, 0.6, 0.8, rng.uniform(0.5, 1.5));

    std::vector<Point> pts;
    for (int i = 0; i < kPoints; ++i) {
      const Point base = poly[static_cast<std::size_t>(rng.uniform() * static_cast<double>(poly.size()))];
      pts.push_back(base + Point{rng.normal(0.0, 0.3 * s), rng.normal(0.0, 0.3 * s)});
    }
    const PointLoss ba = ba_loss(mask, pts);
    const double hcells = opt.step * mask.frame.scale;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point q = mask.frame.to_raster(pts[i]);
      const bool inside = q.x - hcells > 0 && q.y - hcells > 0 && q.x + hcells < mask.width - 1 &&
                          q.y + hcells < mask.height - 1;
      if (!inside || near_cell_edge(q, hcells, opt.edge_exclusion)) {
        ++rep.ba_excluded;
        continue;
      }
      Point fd;
      for (int axis = 0; axis < 2; ++axis) {
        std::vector<Point> plus = pts, minus = pts;
        (axis == 0 ? plus[i].x : plus[i].y) += opt.step;
        (axis == 0 ? minus[i].x : minus[i].y) -= opt.step;
        const double d = (ba_loss(mask, plus).loss - ba_loss(mask, minus).loss) / (2.0 * opt.step);
        (axis == 0 ? fd.x : fd.y) = d;
      }
      const double e = rel_error(scale_grad * ba.grad[i], fd);
      rep.ba_max_rel_error = std::max(rep.ba_max_rel_error, e);
      ++rep.ba_checked;
      if (!(e < opt.tolerance)) ++rep.failures;
    }

    const auto& gt = syn.truth.corners;
    std::array<Point, 4> pred{};
    for (std::size_t i = 0; i < 4; ++i) {
      // Every fourth trial leaves one corner exactly on its target.
      const bool coincide = trial % 4 == 0 && static_cast<int>(i) == trial % 3;
      pred[i] = coincide ? gt[i] : gt[i] + Point{rng.normal(0.0, 5.0), rng.normal(0.0, 5.0)};
    }
    const PointLoss cor = corner_loss(pred, gt);
    for (std::size_t i = 0; i < 4; ++i) {
      if (distance(pred[i], gt[i]) < 1e-3) {
        ++rep.corner_excluded;
        continue;
      }
      Point fd;
      for (int axis = 0; axis < 2; ++axis) {
        auto plus = pred, minus = pred;
        (axis == 0 ? plus[i].x : plus[i].y) += opt.step;
        (axis == 0 ? minus[i].x : minus[i].y) -= opt.step;
        const double d = (corner_loss(plus, gt).loss - corner_loss(minus, gt).loss) / (2.0 * opt.step);
        (axis == 0 ? fd.x : fd.y) = d;
      }
      const double e = rel_error(scale_grad * cor.grad[i], fd);
      rep.corner_max_rel_error = std::max(rep.corner_max_rel_error, e);
      ++rep.corner_checked;
      if (!(e < opt.tolerance)) ++rep.failures;
    }
  }
  return rep;
}

}  // namespace tpsgeom

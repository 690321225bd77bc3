#include "tpsgeom/metrics.hpp"

#include "tpsgeom/errors.hpp"
#include "tpsgeom/parallel.hpp"

#include <algorithm>
#include <cstdio>

namespace tpsgeom {

double iou(const Polygon& pred, const Polygon& gt, int resolution) {
  const OverlapAreas o = rasterized_overlap(pred, gt, resolution);
  if (!(o.union_area > 0.0)) throw DegenerateShape("IoU of two empty shapes");
  return o.intersection / o.union_area;
}

TiouTerms tiou(const Polygon& pred, const Polygon& gt, int resolution) {
  const OverlapAreas o = rasterized_overlap(pred, gt, resolution);
  if (!(o.area_b > 0.0)) throw DegenerateShape("ground truth covers no raster cell");
  if (!(o.union_area > 0.0)) throw DegenerateShape("IoU of two empty shapes");
  TiouTerms t;
  t.iou = o.intersection / o.union_area;
  const double ct = o.intersection / o.area_b;
  const double cp = o.area_a > 0.0 ? o.intersection / o.area_a : 0.0;
  t.recall = t.iou * ct;
  t.precision = t.iou * cp;
  return t;
}

double harmonic_mean(double r, double p) { return (r > 0.0 && p > 0.0) ? 2.0 * r * p / (r + p) : 0.0; }

FitReport aggregate(std::string method, std::vector<InstanceScore> per_instance, int resolution) {
  FitReport rep;
  rep.method = std::move(method);
  rep.resolution = resolution;
  rep.per_instance = std::move(per_instance);
  std::size_t scored = 0, pass50 = 0, pass70 = 0;
  double s_iou = 0.0, s_r = 0.0, s_p = 0.0, s_res = 0.0;
  for (const InstanceScore& s : rep.per_instance) {
    if (s.failed) {
      ++rep.failures;
      continue;
    }
    ++scored;
    s_iou += s.iou;
    s_r += s.tiou_r;
    s_p += s.tiou_p;
    s_res += s.rms_residual;
    pass50 += s.iou >= 0.5;
    pass70 += s.iou >= 0.7;
  }
  if (scored > 0) {
    const double n = static_cast<double>(scored);
    rep.iou_mean = s_iou / n;
    rep.tiou_recall = s_r / n;
    rep.tiou_precision = s_p / n;
    rep.mean_residual = s_res / n;
    rep.iou50_rate = static_cast<double>(pass50) / n;
    rep.iou70_rate = static_cast<double>(pass70) / n;
  }
  rep.tiou_hmean = harmonic_mean(rep.tiou_recall, rep.tiou_precision);
  return rep;
}

namespace {

void score_into(InstanceScore& s, const Polygon& pred, const Polygon& gt, int resolution) {
  const TiouTerms t = tiou(pred, gt, resolution);
  s.iou = t.iou;
  s.tiou_r = t.recall;
  s.tiou_p = t.precision;
}

}  // namespace

FitReport fit_evaluate(std::span<const TextInstance> corpus, const Representation& rep,
                       const ShapeFitOptions& options, int resolution, int threads) {
  if (corpus.empty()) throw EmptyCorpus("nothing to evaluate");
  if (resolution < 8) throw ConfigError("resolution must be >= 8");
  std::vector<InstanceScore> scores(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    InstanceScore& s = scores[i];
    s.id = corpus[i].id;
    try {
      const ShapeFit f = fit_shape(split_sides(corpus[i]), rep, options);
      s.rms_residual = f.rms_residual;
      score_into(s, Polygon(f.boundary), corpus[i].polygon, resolution);
    } catch (const Error& e) {
      s.failed = true;
      s.error = e.what();
    }
  });
  return aggregate(describe(rep), std::move(scores), resolution);
}

FitReport evaluate_pairs(std::string method, std::span<const TextInstance> gt, std::span<const Polygon> pred,
                         int resolution, int threads) {
  if (gt.size() != pred.size()) throw ConfigError("prediction and ground-truth counts differ");
  if (gt.empty()) throw EmptyCorpus("nothing to evaluate");
  if (resolution < 8) throw ConfigError("resolution must be >= 8");
  std::vector<InstanceScore> scores(gt.size());
  parallel_for(gt.size(), threads, [&](std::size_t i) {
    scores[i].id = gt[i].id;
    try {
      score_into(scores[i], pred[i], gt[i].polygon, resolution);
    } catch (const Error& e) {
      scores[i].failed = true;
      scores[i].error = e.what();
    }
  });
  return aggregate(std::move(method), std::move(scores), resolution);
}

std::string format_table(std::span<const FitReport> reports) {
  std::size_t w = 6;
  for (const FitReport& r : reports) w = std::max(w, r.method.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %8s %8s %8s %8s %8s %10s %6s\n", static_cast<int>(w), "method",
                "IoU", "TIoU-R", "TIoU-P", "TIoU-H", "IoU@0.5", "IoU@0.7", "residual", "fail");
  out += buf;
  for (const FitReport& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %10.4g %6zu\n",
                  static_cast<int>(w), r.method.c_str(), r.iou_mean, r.tiou_recall, r.tiou_precision,
                  r.tiou_hmean, r.iou50_rate, r.iou70_rate, r.mean_residual, r.failures);
    out += buf;
  }
  return out;
}

}  // namespace tpsgeom

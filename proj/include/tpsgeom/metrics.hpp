#pragma once

#include "tpsgeom/dataio.hpp"
#include "tpsgeom/geometry.hpp"
#include "tpsgeom/representation.hpp"

#include <span>
#include <string>
#include <vector>

namespace tpsgeom {

/// Rasterized intersection over union. Throws DegenerateShape when the union
/// is empty.
double iou(const Polygon& pred, const Polygon& gt, int resolution = 512);

/// Tightness terms: completeness Ct = |P n G| / |G| and compactness
/// Cp = |P n G| / |P| scale the IoU into a recall and a precision term.
struct TiouTerms {
  double iou = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

TiouTerms tiou(const Polygon& pred, const Polygon& gt, int resolution = 512);

struct InstanceScore {
  std::string id;
  bool failed = false;
  std::string error;
  double iou = 0.0;
  double tiou_r = 0.0;
  double tiou_p = 0.0;
  double rms_residual = 0.0;
};

struct FitReport {
  std::string method;
  int resolution = 512;
  std::vector<InstanceScore> per_instance;
  double iou_mean = 0.0;
  double tiou_recall = 0.0;
  double tiou_precision = 0.0;
  double tiou_hmean = 0.0;
  /// Fractions of scored instances with IoU >= 0.5 and >= 0.7.
  double iou50_rate = 0.0;
  double iou70_rate = 0.0;
  double mean_residual = 0.0;
  std::size_t failures = 0;
};

/// 2 r p / (r + p), 0 when either is 0.
double harmonic_mean(double r, double p);

/// Macro-means over the non-failed instances, summed in instance order.
FitReport aggregate(std::string method, std::vector<InstanceScore> per_instance, int resolution);

/// Fits every instance with `rep`, decodes it and scores it against its own
/// annotation. Fit failures are recorded per instance and excluded from the
/// means. Throws EmptyCorpus on an empty corpus.
FitReport fit_evaluate(std::span<const TextInstance> corpus, const Representation& rep,
                       const ShapeFitOptions& options = {}, int resolution = 512, int threads = 0);

/// Scores paired predictions; pred[i] is compared with gt[i].
FitReport evaluate_pairs(std::string method, std::span<const TextInstance> gt, std::span<const Polygon> pred,
                         int resolution = 512, int threads = 0);

/// Aligned text table, one row per report.
std::string format_table(std::span<const FitReport> reports);

}  // namespace tpsgeom

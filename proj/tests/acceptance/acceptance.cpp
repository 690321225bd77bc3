// Acceptance checks. One PASS/FAIL/SKIP line per criterion; exit status is
// nonzero when any criterion fails.

#include "../oracles.hpp"

#include "tpsgeom/dataio.hpp"
#include "tpsgeom/gradcheck.hpp"
#include "tpsgeom/losses.hpp"
#include "tpsgeom/metrics.hpp"
#include "tpsgeom/representation.hpp"
#include "tpsgeom/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace tpsgeom;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

const FiducialConfig kCross = make_fiducials(FiducialDistribution::Cross, 8);

// Affine part: rotation times per-axis scale in [20, 200] plus a mild shear.
TpsParams random_params(CounterRng& rng, double w_bound) {
  const double th = rng.uniform(0, 2 * std::numbers::pi);
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Eigen::Matrix2d shape;
  shape << rng.uniform(20, 200), rng.uniform(-10, 10), 0.0, rng.uniform(20, 200);
  TpsParams p = TpsParams::affine(kCross, {rng.uniform(-300, 300), rng.uniform(-300, 300)}, rot * shape);
  for (int r = 0; r < 2; ++r)
    for (int c = 3; c < kCross.dim(); ++c) p.t(r, c) = rng.uniform(-w_bound, w_bound);
  return p;
}

std::vector<TextInstance> instances_of(const std::vector<SyntheticInstance>& corpus) {
  std::vector<TextInstance> v;
  for (const auto& s : corpus) v.push_back(s.instance);
  return v;
}

Outcome round_trip() {
  Stopwatch sw;
  CounterRng rng(1001);
  double worst_param = 0.0, worst_boundary = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const TpsParams truth = random_params(rng, 0.2);
    std::vector<Correspondence> corr;
    for (int i = 0; i < 64; ++i) {
      const Point uv{rng.uniform(), rng.uniform()};
      corr.push_back({uv, decode_point(truth, uv)});
    }
    const auto got = fit(kCross, corr, FitOptions{0.0});
    worst_param = std::max(worst_param, (got.params.t - truth.t).cwiseAbs().maxCoeff());
    const auto a = decode_boundary(truth), b = decode_boundary(got.params);
    for (std::size_t i = 0; i < a.size(); ++i) worst_boundary = std::max(worst_boundary, distance(a[i], b[i]));
  }
  const double t = sw.seconds();
  return verdict(worst_param < 1e-6 && worst_boundary < 1e-6 && t < 5.0,
                 fmt("max param err %.2e, max boundary dev %.2e px, %.2f s", worst_param, worst_boundary, t));
}

// Returns {max |w|, max corner error of the affine block}.
std::pair<double, double> quad_collapse(const std::array<Point, 4>& q) {
  const auto inst = make_instance("q", {q.begin(), q.end()}, std::nullopt, AnnotationSource::Generic);
  const auto split = split_sides(inst);
  const auto f = fit_shape(split, kCross);
  const auto dec = decompose(f.tps->params);
  const Point uv[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  double corner = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d a = dec.affine.col(0) + dec.affine.col(1) * uv[i].x + dec.affine.col(2) * uv[i].y;
    corner = std::max(corner, distance({a.x(), a.y()}, q[static_cast<std::size_t>(i)]));
  }
  return {dec.local.cwiseAbs().maxCoeff(), corner};
}

std::array<Point, 4> random_box(CounterRng& rng, double jitter) {
  const double w = rng.uniform(100, 400), h = rng.uniform(20, 60), th = rng.uniform(-0.6, 0.6);
  const Point c{rng.uniform(200, 600), rng.uniform(200, 600)};
  const Point ax{std::cos(th), std::sin(th)}, ay{-std::sin(th), std::cos(th)};
  std::array<Point, 4> q{c, c + w * ax, c + w * ax + h * ay, c + h * ay};
  for (Point& p : q) p = p + Point{rng.uniform(-jitter, jitter) * h, rng.uniform(-jitter, jitter) * h};
  return q;
}

Outcome affine_collapse() {
  CounterRng rng(1002);
  double w_quad = 0.0, c_quad = 0.0, w_par = 0.0, c_par = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto [w, c] = quad_collapse(random_box(rng, 0.15));
    w_quad = std::max(w_quad, w);
    c_quad = std::max(c_quad, c);
    auto p = random_box(rng, 0.0);
    const Point shear{rng.uniform(-10, 10), 0.0};
    p[0] = p[0] + shear;
    p[1] = p[1] + shear;
    const auto [w2, c2] = quad_collapse(p);
    w_par = std::max(w_par, w2);
    c_par = std::max(c_par, c2);
  }
  return verdict(w_quad < 1e-6 && c_quad < 1e-8,
                 fmt("general quads: max |w| %.2e, corner err %.2e px; parallelograms: max |w| %.2e, "
                     "corner err %.2e px",
                     w_quad, c_quad, w_par, c_par));
}

Outcome decomposition() {
  CounterRng rng(1003);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const TpsParams p = random_params(rng, 5.0);
    const Point uv{rng.uniform(-0.25, 1.25), rng.uniform(-0.25, 1.25)};
    worst = std::max(worst, distance(decode_point(p, uv), decompose(p).apply(kCross, uv)));
  }
  return verdict(worst < 1e-12, fmt("max discrepancy %.2e px over 10000 pairs", worst));
}

struct CapacityRun {
  double angle;
  std::vector<TextInstance> corpus;
  double tps = 0.0, bezier = 0.0;
};

std::vector<CapacityRun> g_capacity;

Outcome capacity() {
  Stopwatch sw;
  for (double angle : {0.0, 45.0, 70.0}) {
    SyntheticCorpusSpec cs;
    cs.perspective_angle_deg = angle;
    CapacityRun run{angle, instances_of(synthetic_corpus(cs))};
    run.tps = fit_evaluate(run.corpus, kCross, {}, 512).tiou_hmean;
    run.bezier = fit_evaluate(run.corpus, BezierRep{3}, {}, 512).tiou_hmean;
    g_capacity.push_back(std::move(run));
  }
  const double t = sw.seconds();
  bool ordered = true;
  std::string detail;
  for (const auto& r : g_capacity) {
    ordered = ordered && r.tps >= r.bezier;
    detail += fmt("%g deg TPS %.4f Bezier %.4f; ", r.angle, r.tps, r.bezier);
  }
  const double growth = (g_capacity[2].tps - g_capacity[2].bezier) - (g_capacity[0].tps - g_capacity[0].bezier);
  detail += fmt("gap growth 0->70 deg %+.4f (need >= 0.02); %.1f s", growth, t);
  return verdict(ordered && growth >= 0.02 && t < 60.0, detail);
}

Outcome distribution_order() {
  const auto& corpus = g_capacity.at(1).corpus;
  const double cross = g_capacity[1].tps;
  const double edge = fit_evaluate(corpus, make_fiducials(FiducialDistribution::Edge, 8), {}, 512).tiou_hmean;
  const double center = fit_evaluate(corpus, make_fiducials(FiducialDistribution::Center, 8), {}, 512).tiou_hmean;
  return verdict(cross >= std::max(edge, center) - 0.005,
                 fmt("45 deg: Cross %.4f Edge %.4f Center %.4f", cross, edge, center));
}

Outcome rectangles() {
  SyntheticCorpusSpec cs;
  cs.count = 50;
  cs.amplitude_frac = 0.0;
  const auto corpus = instances_of(synthetic_corpus(cs));
  const double tps = fit_evaluate(corpus, kCross, {}, 512).tiou_hmean;
  const double bez = fit_evaluate(corpus, BezierRep{3}, {}, 512).tiou_hmean;
  return verdict(tps > 0.98 && bez > 0.98, fmt("TPS %.4f Bezier %.4f", tps, bez));
}

double relaxed_oracle(double d, double s) {
  const double m = d / s >= 0.6 ? 0.0 : 1.0 - d / (s * 0.6);
  return m >= 0.8 ? 1.0 : m / 0.8;
}

Outcome border_mask() {
  SyntheticCorpusSpec cs;
  cs.count = 20;
  cs.perspective_angle_deg = 45.0;
  const auto corpus = synthetic_corpus(cs);
  CounterRng rng(1007);
  double worst = 0.0;
  std::size_t zero_bad = 0, one_bad = 0, zeros = 0, ones = 0;
  for (const auto& syn : corpus) {
    const auto& gt = syn.instance.polygon.points();
    const auto split = split_sides(syn.instance);
    const double s = text_height(split.top, split.bottom);
    const auto mask = make_border_mask(gt, s);
    for (int i = 0; i < 10000; ++i) {
      const int c = std::min(mask.width - 1, static_cast<int>(rng.uniform() * mask.width));
      const int r = std::min(mask.height - 1, static_cast<int>(rng.uniform() * mask.height));
      const double d = oracle::boundary_distance(gt, mask.frame.to_image({double(c), double(r)}));
      worst = std::max(worst, std::abs(mask.at(c, r) - relaxed_oracle(d, s)));
      if (d / s >= 0.6) {
        ++zeros;
        zero_bad += mask.at(c, r) != 0.0;
      }
      if (mask.raw_at(c, r) >= 0.8) {
        ++ones;
        one_bad += mask.at(c, r) != 1.0;
      }
    }
  }
  return verdict(worst < 1e-9 && zero_bad == 0 && one_bad == 0 && zeros > 0 && ones > 0,
                 fmt("20 instances x 10000 cells: max err %.2e, %zu/%zu far cells nonzero, %zu/%zu plateau "
                     "cells not 1",
                     worst, zero_bad, zeros, one_bad, ones));
}

Outcome gradients() {
  const auto rep = run_gradcheck(GradcheckOptions{});
  const std::string cmd = std::string(TPSGEOM_CLI_PATH) + " losscheck > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  const int code = raw == -1 ? -1 : WEXITSTATUS(raw);
  return verdict(rep.passed() && rep.trials == 1000 && code == 0,
                 fmt("%d trials, BA max rel %.2e, corner max rel %.2e, failures %zu, losscheck exit %d", rep.trials,
                     rep.ba_max_rel_error, rep.corner_max_rel_error, rep.failures, code));
}

double mean_distance(const std::vector<Point>& pts, const std::vector<Point>& gt) {
  double acc = 0.0;
  for (const Point& p : pts) acc += oracle::boundary_distance(gt, p);
  return acc / static_cast<double>(pts.size());
}

Outcome descent() {
  Stopwatch sw;
  SyntheticCorpusSpec cs;
  cs.count = 100;
  cs.periods = 0.5;
  cs.min_height = 10.0;
  cs.max_height = 20.0;
  const auto corpus = synthetic_corpus(cs);
  const BoundaryBasis basis(kCross, 32);
  constexpr int kSteps = 200;
  constexpr double kLr = 0.5, kB1 = 0.9, kB2 = 0.999;
  int ok = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto split = split_sides(corpus[i].instance);
    const auto& gt = corpus[i].instance.polygon.points();
    const auto mask = make_border_mask(smooth_boundary(split, 32).points(), text_height(split.top, split.bottom));
    TpsParams p = fit_shape(split, kCross).tps->params;
    CounterRng rng = CounterRng(99).split(i);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < p.t.cols(); ++c) p.t(r, c) += rng.normal(0, 3);
    const double d0 = mean_distance(basis.decode(p), gt);
    const double l0 = param_loss(basis, p, mask, split.corners).loss;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, p.t.cols()), v = m;
    for (int it = 1; it <= kSteps; ++it) {
      const Eigen::MatrixXd g = param_loss(basis, p, mask, split.corners).grad;
      m = kB1 * m + (1 - kB1) * g;
      v = kB2 * v + (1 - kB2) * g.cwiseProduct(g);
      const double lr = kLr * 0.5 * (1 + std::cos(std::numbers::pi * (it - 1) / kSteps));
      const Eigen::ArrayXXd mh = m.array() / (1 - std::pow(kB1, it));
      const Eigen::ArrayXXd vh = v.array() / (1 - std::pow(kB2, it));
      p.t -= (lr * mh / (vh.sqrt() + 1e-8)).matrix();
    }
    const double d1 = mean_distance(basis.decode(p), gt);
    const double l1 = param_loss(basis, p, mask, split.corners).loss;
    ok += d1 <= 0.5 * d0 && l1 < l0;
  }
  const double t = sw.seconds();
  return verdict(ok >= 95 && t < 30.0, fmt("%d/100 instances halved distance with lower loss; %.2f s", ok, t));
}

// Largest per-column gap between the GTC arg-max row and the decoded midline.
double ridge_deviation(const TpsParams& params) {
  const auto layout = layout_for(decode_boundary(params), 2.0);
  const auto g = make_gtc(params, layout);
  std::vector<Point> mid;
  for (int i = 0; i <= 4000; ++i) mid.push_back(layout.frame.to_raster(decode_point(params, {i / 4000.0, 0.5})));
  double worst = 0.0;
  for (int c = 0; c < g.width; ++c) {
    int best = -1;
    double bv = 0.0;
    for (int r = 0; r < g.height; ++r)
      if (g.at(c, r) > bv) {
        bv = g.at(c, r);
        best = r;
      }
    if (best < 0) continue;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < mid.size(); ++i) {
      const double x0 = mid[i - 1].x, x1 = mid[i].x;
      if ((x0 - c) * (x1 - c) > 0 || x0 == x1) continue;
      const double y = mid[i - 1].y + (c - x0) / (x1 - x0) * (mid[i].y - mid[i - 1].y);
      gap = std::min(gap, std::abs(y - best));
    }
    if (std::isfinite(gap)) worst = std::max(worst, gap);
  }
  return worst;
}

Outcome gtc() {
  const int n = 41;
  const auto g = make_gtc(TpsParams::affine(kCross, {0, 0}, Eigen::Matrix2d::Identity() * (n - 1)),
                          RasterLayout{{{0, 0}, 1.0}, n, n});
  double ident = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double du = c / (n - 1.0) - 0.5, dv = r / (n - 1.0) - 0.5;
      ident = std::max(ident, std::abs(g.at(c, r) - std::exp(-(du * du + dv * dv) / (2 * 0.25 * 0.25))));
    }
  auto corpus_worst = [](double periods, int& bad) {
    SyntheticCorpusSpec cs;
    cs.periods = periods;
    double worst = 0.0;
    for (const auto& syn : synthetic_corpus(cs)) {
      const double d = ridge_deviation(fit_shape(split_sides(syn.instance), kCross).tps->params);
      worst = std::max(worst, d);
      bad += d >= 2.0;
    }
    return worst;
  };
  int bad = 0, arc_bad = 0;
  const double worst = corpus_worst(1.5, bad);
  const double arc = corpus_worst(0.5, arc_bad);
  return verdict(ident < 1.0 / 255 && worst < 2.0,
                 fmt("identity max err %.2e; ridge on 1.5-period corpus: worst %.2f cells, %d/200 instances >= 2; "
                     "0.5-period corpus: worst %.2f cells, %d/200 >= 2",
                     ident, worst, bad, arc, arc_bad));
}

Outcome soft_ce() {
  const std::vector<double> half{0.5};
  const double at_half = soft_cross_entropy(half, half);
  double worst = 0.0;
  for (double y : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const std::vector<double> ys{y};
    auto f = [&](double p) {
      const std::vector<double> ps{p};
      return soft_cross_entropy(ys, ps);
    };
    double lo = 1e-6, hi = 1 - 1e-6;
    const double k = (std::sqrt(5.0) - 1) / 2;
    for (int i = 0; i < 200; ++i) {
      const double a = hi - k * (hi - lo), b = lo + k * (hi - lo);
      if (f(a) < f(b))
        hi = b;
      else
        lo = a;
    }
    worst = std::max(worst, std::abs(0.5 * (lo + hi) - y));
  }
  const double err = std::abs(at_half - std::log(2.0));
  return verdict(worst < 1e-4 && err < 1e-9, fmt("max argmin err %.2e, |L(0.5,0.5) - log 2| %.2e", worst, err));
}

Outcome dataset() {
  const char* path = std::getenv("TPSGEOM_CTW1500_JSON");
  if (path == nullptr || *path == '\0') return {Status::Skip, "TPSGEOM_CTW1500_JSON not set"};
  Stopwatch sw;
  const auto parsed = parse_annotations(path, AnnotationFormat::GenericJson);
  const double tps = fit_evaluate(parsed.instances, kCross, {}, 512).tiou_hmean;
  const double bez = fit_evaluate(parsed.instances, BezierRep{3}, {}, 512).tiou_hmean;
  const double t = sw.seconds();
  return verdict(tps >= 0.93 && tps >= bez && std::abs(tps - 0.971) <= 0.04 && t < 600.0,
                 fmt("%zu instances: TPS %.4f Bezier %.4f, %.1f s", parsed.instances.size(), tps, bez, t));
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"tps round trip", round_trip},
      {"affine collapse", affine_collapse},
      {"decode decomposition", decomposition},
      {"capacity ordering", capacity},
      {"fiducial ordering", distribution_order},
      {"rectangle floor", rectangles},
      {"border mask", border_mask},
      {"gradients", gradients},
      {"loss descent", descent},
      {"gtc", gtc},
      {"soft cross entropy", soft_ce},
      {"dataset reproduction", dataset},
  };
  int failed = 0, index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Skip ? "SKIP" : "FAIL";
    failed += o.status == Status::Fail;
    std::printf("%s %2d %s: %s\n", tag, index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

#include "tpsgeom/dataio.hpp"
#include "tpsgeom/errors.hpp"
#include "tpsgeom/gradcheck.hpp"
#include "tpsgeom/json_io.hpp"
#include "tpsgeom/losses.hpp"
#include "tpsgeom/metrics.hpp"
#include "tpsgeom/parallel.hpp"
#include "tpsgeom/representation.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace tpsgeom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInputError = 2;

struct Global {
  std::uint64_t seed = 42;
  int threads = 0;
  int resolution = 512;
  fs::path out = "out";
};

struct Annotations {
  fs::path path;
  std::string format = "json";
};

struct TpsFlags {
  std::string rep = "tps";
  std::string distribution = "cross";
  int k = 8;
  int degree = 3;
  int per_side = 32;
  double regularization = 1e-8;
  int short_edge_points = 1;
  int boundary_cols = 32;

  Representation representation() const {
    if (rep == "tps") return make_fiducials(parse_distribution(distribution), k);
    if (rep == "bezier") return BezierRep{degree};
    throw ConfigError("unknown representation '" + rep + "'");
  }
  ShapeFitOptions options() const { return {per_side, regularization, boundary_cols, short_edge_points}; }
};

std::string env_name(const std::string& flag) {
  std::string out = "TPSGEOM_";
  for (char c : flag) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

template <typename T>
CLI::Option* add(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
  return app->add_option("--" + name, var, desc)->envname(env_name(name))->capture_default_str();
}

void add_annotations(CLI::App* app, Annotations& a) {
  app->add_option("annotations", a.path, "Annotation file")->required()->check(CLI::ExistingFile);
  add(app, "format", a.format, "Annotation format")->check(CLI::IsMember({"json", "ctw1500"}));
}

void add_rep(CLI::App* app, TpsFlags& f, bool with_rep = true) {
  if (with_rep) add(app, "rep", f.rep, "Shape representation")->check(CLI::IsMember({"tps", "bezier"}));
  add(app, "distribution", f.distribution, "Fiducial distribution")
      ->check(CLI::IsMember({"edge", "cross", "center"}));
  add(app, "k", f.k, "Number of fiducial points");
  add(app, "degree", f.degree, "Bezier degree per side");
  add(app, "per-side", f.per_side, "Correspondences per long side");
  add(app, "regularization", f.regularization, "Ridge weight on the TPS local weights");
  add(app, "short-edge-points", f.short_edge_points, "Straight-line anchors per short edge in TPS fits");
  add(app, "boundary-cols", f.boundary_cols, "Lattice columns of the decoded boundary");
}

std::vector<TextInstance> load(const Annotations& a) {
  ParsedAnnotations parsed = parse_annotations(a.path, parse_format(a.format));
  for (const std::string& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
  return std::move(parsed.instances);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
  return out;
}

// ---- fit ----------------------------------------------------------------

int cmd_fit(const Global& g, const Annotations& a, const TpsFlags& f) {
  const auto corpus = load(a);
  const Representation rep = f.representation();
  ensure_dir(g.out);
  struct Row {
    bool ok = false;
    double residual = 0.0;
    std::string error;
  };
  std::vector<Row> rows(corpus.size());
  parallel_for(corpus.size(), g.threads, [&](std::size_t i) {
    try {
      const ShapeFit fit = fit_shape(split_sides(corpus[i]), rep, f.options());
      const std::string stem = safe_name(corpus[i].id);
      if (fit.tps) {
        write_file_atomic(g.out / (stem + ".tps.json"), tps_params_to_json(fit.tps->params));
      } else {
        write_file_atomic(g.out / (stem + ".bezier.json"), bezier_params_to_json(*fit.bezier));
      }
      rows[i] = {true, fit.rms_residual, {}};
    } catch (const Error& e) {
      rows[i] = {false, 0.0, e.what()};
    }
  });

  std::ostringstream table;
  std::size_t ok = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char buf[256];
    if (rows[i].ok) {
      ++ok;
      sum += rows[i].residual;
      std::snprintf(buf, sizeof buf, "%-32s %12.6g\n", corpus[i].id.c_str(), rows[i].residual);
    } else {
      std::snprintf(buf, sizeof buf, "%-32s %12s  %s\n", corpus[i].id.c_str(), "FAILED", rows[i].error.c_str());
    }
    table << buf;
  }
  const std::size_t failed = corpus.size() - ok;
  char tail[256];
  std::snprintf(tail, sizeof tail, "method %s\ninstances %zu fitted %zu failed %zu\nmean_residual %.6g\n",
                describe(rep).c_str(), corpus.size(), ok, failed, ok ? sum / static_cast<double>(ok) : 0.0);
  const std::string summary = std::string("id                               rms_residual\n") + table.str() + tail;
  write_file_atomic(g.out / "fit_summary.txt", summary);
  std::cout << summary;
  if (failed > 0) std::cerr << "warning: " << failed << " instance(s) failed to fit\n";
  return ok > 0 ? kExitOk : kExitCheckFailed;
}

// ---- eval ---------------------------------------------------------------

struct EvalFlags {
  std::vector<std::string> reps{"tps"};
  fs::path params_dir;
  fs::path pred;
};

std::string method_slug(const std::string& method) {
  std::string out;
  for (char c : method) {
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(c);
    else if (!out.empty() && out.back() != '_') out.push_back('_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

void check_ids(const std::vector<std::string>& missing) {
  if (missing.empty()) return;
  std::string msg = "no prediction for instance id(s):";
  for (const auto& id : missing) msg += " " + id;
  throw ConfigError(msg);
}

FitReport eval_params_dir(const Global& g, const std::vector<TextInstance>& gt, const TpsFlags& f,
                          const std::string& rep, const fs::path& dir) {
  std::vector<std::string> missing;
  std::vector<fs::path> files;
  for (const TextInstance& inst : gt) {
    const fs::path p = dir / (safe_name(inst.id) + (rep == "tps" ? ".tps.json" : ".bezier.json"));
    if (!fs::exists(p)) missing.push_back(inst.id);
    files.push_back(p);
  }
  check_ids(missing);
  std::vector<Polygon> pred;
  for (const fs::path& p : files) {
    const std::string text = read_file(p);
    if (rep == "tps") {
      pred.emplace_back(decode_boundary(tps_params_from_json(text), f.boundary_cols));
    } else {
      pred.push_back(bezier_decode(bezier_params_from_json(text), f.boundary_cols + 1));
    }
  }
  return evaluate_pairs(rep + "(params)", gt, pred, g.resolution, g.threads);
}

int cmd_eval(const Global& g, const Annotations& a, const TpsFlags& f, const EvalFlags& e) {
  const auto gt = load(a);
  ensure_dir(g.out);
  std::vector<FitReport> reports;
  if (!e.pred.empty()) {
    const auto pred_instances = parse_annotations(e.pred, AnnotationFormat::GenericJson).instances;
    std::map<std::string, const TextInstance*> by_id;
    for (const auto& p : pred_instances) by_id[p.id] = &p;
    std::vector<std::string> missing;
    std::vector<Polygon> pred;
    for (const auto& inst : gt) {
      const auto it = by_id.find(inst.id);
      if (it == by_id.end()) {
        missing.push_back(inst.id);
      } else {
        pred.push_back(it->second->polygon);
      }
    }
    check_ids(missing);
    reports.push_back(evaluate_pairs("prediction", gt, pred, g.resolution, g.threads));
  } else {
    for (const std::string& rep : e.reps) {
      TpsFlags flags = f;
      flags.rep = rep;
      if (!e.params_dir.empty()) {
        reports.push_back(eval_params_dir(g, gt, flags, rep, e.params_dir));
      } else {
        reports.push_back(fit_evaluate(gt, flags.representation(), flags.options(), g.resolution, g.threads));
      }
    }
  }
  for (const FitReport& r : reports) {
    write_file_atomic(g.out / ("report." + method_slug(r.method) + ".json"), fit_report_to_json(r));
  }
  const std::string table = format_table(reports);
  write_file_atomic(g.out / "report.txt", table);
  std::cout << table;
  return kExitOk;
}

// ---- masks --------------------------------------------------------------

struct MaskFlags {
  double tb = 0.6;
  double tr = 0.8;
  double scale = 1.0;
  double sigma = 0.25;
  int oversample = 4;
  bool json = false;
};

int cmd_masks(const Global& g, const Annotations& a, const TpsFlags& f, const MaskFlags& m) {
  const auto corpus = load(a);
  const FiducialConfig cfg = make_fiducials(parse_distribution(f.distribution), f.k);
  ensure_dir(g.out);
  std::vector<std::string> errors(corpus.size());
  parallel_for(corpus.size(), g.threads, [&](std::size_t i) {
    try {
      const SideSplit split = split_sides(corpus[i]);
      const Polygon smooth = smooth_boundary(split, std::max(4, f.per_side));
      const double s = text_height(split.top, split.bottom);
      const ShapeFit fit = fit_shape(split, cfg, f.options());
      std::vector<Point> extent = smooth.points();
      extent.insert(extent.end(), fit.boundary.begin(), fit.boundary.end());
      const RasterLayout layout = layout_for(extent, m.tb * s + 2.0 / m.scale, m.scale);
      const BorderMask border = make_border_mask(smooth.points(), s, layout, m.tb, m.tr);
      const GtcMap gtc = make_gtc(fit.tps->params, layout, {m.sigma, m.sigma, m.oversample});
      const std::string stem = safe_name(corpus[i].id);
      write_file_atomic(g.out / (stem + ".border.pgm"), encode_pgm(border.image()));
      write_file_atomic(g.out / (stem + ".gtc.pgm"), encode_pgm(gtc.image()));
      if (m.json) {
        write_file_atomic(g.out / (stem + ".border.json"), gray_image_to_json(border.image()));
        write_file_atomic(g.out / (stem + ".gtc.json"), gray_image_to_json(gtc.image()));
      }
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (errors[i].empty()) continue;
    ++failed;
    std::cerr << "warning: " << corpus[i].id << ": " << errors[i] << "\n";
  }
  std::cout << "masks written for " << corpus.size() - failed << " of " << corpus.size() << " instances\n";
  return failed == corpus.size() ? kExitCheckFailed : kExitOk;
}

// ---- augment ------------------------------------------------------------

struct AugmentFlags {
  std::vector<double> angles{0.0, 45.0, 70.0};
  double focal_scale = 1.0;
  double image_width = 0.0;
  double image_height = 0.0;
};

std::string angle_label(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

int cmd_augment(const Global& g, const Annotations& a, const AugmentFlags& f) {
  const auto corpus = load(a);
  double w = f.image_width, h = f.image_height;
  if (w <= 0.0 || h <= 0.0) {
    double mx = 0.0, my = 0.0;
    for (const auto& inst : corpus) {
      const BoundingBox b = bounding_box(inst.polygon.points());
      mx = std::max(mx, b.max_x);
      my = std::max(my, b.max_y);
    }
    if (w <= 0.0) w = std::ceil(mx);
    if (h <= 0.0) h = std::ceil(my);
  }
  ensure_dir(g.out);
  const std::string stem = a.path.stem().string();
  for (double angle : f.angles) {
    const Homography hm = perspective_from_left_edge(angle, w, h, f.focal_scale * w);
    std::vector<TextInstance> warped;
    for (const auto& inst : corpus) {
      TextInstance out = inst;
      out.polygon = Polygon(hm.apply(inst.polygon.points()));
      warped.push_back(std::move(out));
    }
    const fs::path path = g.out / (stem + ".angle" + angle_label(angle) + ".json");
    write_file_atomic(path, serialize_generic_json(warped));
    std::cout << path.string() << "\n";
  }
  return kExitOk;
}

// ---- rectify ------------------------------------------------------------

struct RectifyFlags {
  fs::path params;
  int height = 32;
  int width = 128;
};

int cmd_rectify(const Global& g, const RectifyFlags& r) {
  const TpsParams params = tps_params_from_json(read_file(r.params));
  if (r.height < 2 || r.width < 2) throw ConfigError("rectification grid dimensions must be >= 2");
  ensure_dir(g.out);
  std::string stem = r.params.filename().string();
  for (const char* suffix : {".tps.json", ".json"}) {
    const std::string sfx = suffix;
    if (stem.size() > sfx.size() && stem.ends_with(sfx)) {
      stem.resize(stem.size() - sfx.size());
      break;
    }
  }
  const fs::path path = g.out / (stem + ".grid.json");
  write_file_atomic(path, shape_grid_to_json(rectification_grid(params, r.height, r.width)));
  std::cout << path.string() << "\n";
  return kExitOk;
}

// ---- viz ----------------------------------------------------------------

struct VizFlags {
  bool no_fit = false;
  bool mask = false;
};

int cmd_viz(const Global& g, const Annotations& a, const TpsFlags& f, const VizFlags& v) {
  const auto corpus = load(a);
  const Representation rep = f.representation();
  std::vector<SvgOverlay> overlays(v.no_fit && !v.mask ? 0 : corpus.size());
  parallel_for(overlays.size(), g.threads, [&](std::size_t i) {
    try {
      const SideSplit split = split_sides(corpus[i]);
      if (!v.no_fit) {
        const ShapeFit fit = fit_shape(split, rep, f.options());
        overlays[i].fitted.push_back(fit.boundary);
        if (fit.tps) {
          for (const Point& p : fit.tps->params.config.points()) {
            overlays[i].controls.push_back(decode_point(fit.tps->params, p));
          }
        } else {
          for (const auto* side : {&fit.bezier->top, &fit.bezier->bottom}) {
            overlays[i].controls.insert(overlays[i].controls.end(), side->begin(), side->end());
          }
        }
      }
      if (v.mask) {
        const Polygon smooth = smooth_boundary(split, std::max(4, f.per_side));
        overlays[i].mask = make_border_mask(smooth.points(), text_height(split.top, split.bottom)).image();
      }
    } catch (const Error& e) {
      std::cerr << "warning: " << corpus[i].id << ": " << e.what() << "\n";
    }
  });
  ensure_dir(g.out);
  const fs::path path = g.out / (a.path.stem().string() + ".svg");
  write_file_atomic(path, render_svg(corpus, overlays));
  std::cout << path.string() << "\n";
  return kExitOk;
}

// ---- losscheck ----------------------------------------------------------

int cmd_losscheck(const Global& g, GradcheckOptions opt) {
  opt.seed = g.seed;
  const GradcheckReport rep = run_gradcheck(opt);
  std::cout << rep.summary();
  const bool ok = rep.passed();
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

// Every subcommand carries the shared flags so its --help lists them.
void add_global(CLI::App* app, Global& g) {
  add(app, "seed", g.seed, "Seed for every random stream");
  add(app, "threads", g.threads, "Worker threads (0 = all cores)");
  add(app, "resolution", g.resolution, "Raster samples along the longer side for overlap scoring");
  add(app, "out", g.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thin-plate-spline text shape toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  Global g;

  Annotations ann;
  TpsFlags tf;

  CLI::App* fit = app.add_subcommand("fit", "Fit shape parameters to every annotated instance");
  add_global(fit, g);
  add_annotations(fit, ann);
  add_rep(fit, tf);

  EvalFlags ef;
  CLI::App* eval = app.add_subcommand("eval", "Score fitted shapes against their annotations");
  add_global(eval, g);
  add_annotations(eval, ann);
  add_rep(eval, tf, false);
  eval->add_option("--rep", ef.reps, "Representations to fit and score")
      ->envname("TPSGEOM_REP")
      ->capture_default_str()
      ->check(CLI::IsMember({"tps", "bezier"}));
  add(eval, "params-dir", ef.params_dir, "Read fitted parameters ({id}.tps.json / {id}.bezier.json) instead of fitting");
  add(eval, "pred", ef.pred, "Generic JSON file of predicted polygons matched by id");

  MaskFlags mf;
  CLI::App* masks = app.add_subcommand("masks", "Write border masks and Gaussian text-center maps");
  add_global(masks, g);
  add_annotations(masks, ann);
  add_rep(masks, tf, false);
  add(masks, "tb", mf.tb, "Border distance threshold as a fraction of text height");
  add(masks, "tr", mf.tr, "Border relaxation threshold");
  add(masks, "scale", mf.scale, "Raster cells per pixel");
  add(masks, "sigma", mf.sigma, "Text-center Gaussian sigma on the fiducial rectangle");
  add(masks, "oversample", mf.oversample, "Text-center lattice samples per raster cell");
  masks->add_flag("--json", mf.json, "Also write raw float arrays as JSON")->envname("TPSGEOM_JSON");

  AugmentFlags af;
  CLI::App* augment = app.add_subcommand("augment", "Apply the left-edge perspective rotation");
  add_global(augment, g);
  add_annotations(augment, ann);
  add(augment, "angles", af.angles, "Rotation angles in degrees")->delimiter(',');
  add(augment, "focal-scale", af.focal_scale, "Focal length as a multiple of the image width");
  add(augment, "image-width", af.image_width, "Image width (0 = annotation extent)");
  add(augment, "image-height", af.image_height, "Image height (0 = annotation extent)");

  RectifyFlags rf;
  CLI::App* rectify = app.add_subcommand("rectify", "Emit the rectification sampling grid of TPS parameters");
  add_global(rectify, g);
  rectify->add_option("params", rf.params, "TPS parameter JSON")->required()->check(CLI::ExistingFile);
  add(rectify, "height", rf.height, "Grid rows");
  add(rectify, "width", rf.width, "Grid columns");

  VizFlags vf;
  CLI::App* viz = app.add_subcommand("viz", "Render annotations and fitted shapes to SVG");
  add_global(viz, g);
  add_annotations(viz, ann);
  add_rep(viz, tf);
  viz->add_flag("--no-fit", vf.no_fit, "Draw annotations only")->envname("TPSGEOM_NO_FIT");
  viz->add_flag("--mask", vf.mask, "Embed each instance's border mask")->envname("TPSGEOM_MASK");

  GradcheckOptions gc;
  CLI::App* losscheck = app.add_subcommand("losscheck", "Finite-difference check of the loss gradients");
  add_global(losscheck, g);
  add(losscheck, "trials", gc.trials, "Random configurations");
  add(losscheck, "tolerance", gc.tolerance, "Maximum relative error");
  losscheck->add_flag("--corrupt-gradient", gc.corrupt, "Test hook: perturb analytic gradients (must fail)")
      ->envname("TPSGEOM_CORRUPT_GRADIENT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*fit) return cmd_fit(g, ann, tf);
    if (*eval) return cmd_eval(g, ann, tf, ef);
    if (*masks) return cmd_masks(g, ann, tf, mf);
    if (*augment) return cmd_augment(g, ann, af);
    if (*rectify) return cmd_rectify(g, rf);
    if (*viz) return cmd_viz(g, ann, tf, vf);
    if (*losscheck) return cmd_losscheck(g, gc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

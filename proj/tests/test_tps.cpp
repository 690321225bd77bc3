#include "doctest.h"
#include "oracles.hpp"

#include "tpsgeom/errors.hpp"
#include "tpsgeom/rng.hpp"
#include "tpsgeom/tps.hpp"

#include <cmath>

using namespace tpsgeom;

namespace {

TpsParams random_params(const FiducialConfig& cfg, CounterRng& rng, double w_max = 0.2) {
  TpsParams p;
  p.config = cfg;
  p.t.setZero(2, cfg.dim());
  const double sx = rng.uniform(20, 200), sy = rng.uniform(20, 200), ang = rng.uniform(-1, 1);
  p.t(0, 0) = rng.uniform(-100, 100);
  p.t(1, 0) = rng.uniform(-100, 100);
  p.t(0, 1) = sx * std::cos(ang);
  p.t(1, 1) = sx * std::sin(ang);
  p.t(0, 2) = -sy * std::sin(ang);
  p.t(1, 2) = sy * std::cos(ang);
  for (int j = 3; j < cfg.dim(); ++j) {
    p.t(0, j) = rng.uniform(-w_max, w_max);
    p.t(1, j) = rng.uniform(-w_max, w_max);
  }
  return p;
}

std::vector<double> row(const TpsParams& p, int r) {
  std::vector<double> out;
  for (int j = 0; j < p.t.cols(); ++j) out.push_back(p.t(r, j));
  return out;
}

std::vector<Correspondence> sample(const TpsParams& p, CounterRng& rng, int m) {
  std::vector<Correspondence> out;
  for (int i = 0; i < m; ++i) {
    const Point uv{rng.uniform(), rng.uniform()};
    out.push_back({uv, oracle::tps_map(p.config.points(), row(p, 0), row(p, 1), uv)});
  }
  return out;
}

bool contains(const std::vector<Point>& pts, Point q) {
  for (const Point& p : pts)
    if (distance(p, q) < 1e-15) return true;
  return false;
}

}  // namespace

TEST_CASE("fiducial layouts") {
  const auto edge = make_fiducials(FiducialDistribution::Edge, 8);
  for (double x : {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}) {
    CHECK(contains(edge.points(), {x, 0.0}));
    CHECK(contains(edge.points(), {x, 1.0}));
  }
  const auto center = make_fiducials(FiducialDistribution::Center, 8);
  for (double x : {0.2, 0.4, 0.6, 0.8}) CHECK(contains(center.points(), {x, 0.5}));
  const auto cross = make_fiducials(FiducialDistribution::Cross, 8);
  for (Point p : {Point{0.25, 0.5}, Point{0.5, 0.0}, Point{0.5, 1.0}, Point{0.75, 0.5}}) CHECK(contains(cross.points(), p));
  for (const auto& cfg : {edge, center, cross}) {
    CHECK(cfg.k() == 8);
    CHECK(cfg.dim() == 11);
    for (Point c : {Point{0, 0}, Point{1, 0}, Point{1, 1}, Point{0, 1}}) CHECK(contains(cfg.points(), c));
  }
  for (int k : {4, 6, 10, 12}) {
    for (auto d : {FiducialDistribution::Edge, FiducialDistribution::Center, FiducialDistribution::Cross}) {
      CHECK(make_fiducials(d, k).k() == k);
    }
  }
  CHECK_THROWS_AS(make_fiducials(FiducialDistribution::Cross, 7), ConfigError);
  CHECK_THROWS_AS(make_fiducials(FiducialDistribution::Edge, 2), ConfigError);
  CHECK(parse_distribution("center") == FiducialDistribution::Center);
  CHECK_THROWS_AS(parse_distribution("ring"), ConfigError);
}

TEST_CASE("radial basis values") {
  CHECK(radial_basis(0.0) == 0.0);
  CHECK(radial_basis(1.0) == 0.0);
  CHECK(radial_basis(0.5) == doctest::Approx(-0.17328679514).epsilon(1e-10));
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  const auto phi = eval_basis(cfg, cfg.points()[3]);
  CHECK(phi.size() == 11);
  CHECK(phi[0] == 1.0);
  CHECK(phi[3 + 3] == 0.0);
  CounterRng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Point p{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)};
    const auto v = eval_basis(cfg, p);
    double max_d = 0.0;
    for (const Point& f : cfg.points()) max_d = std::max(max_d, distance(p, f));
    for (int j = 3; j < 11; ++j) {
      CHECK(std::isfinite(v[j]));
      CHECK(v[j] >= -std::exp(-1.0) * max_d * max_d - 1e-15);
      CHECK(v[j] == doctest::Approx(oracle::radial(distance(p, cfg.points()[static_cast<std::size_t>(j - 3)]))).epsilon(1e-14));
    }
  }
}

TEST_CASE("decode of affine parameters") {
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  const auto ident = TpsParams::affine(cfg, {0, 0}, Eigen::Matrix2d::Identity());
  const auto grid = decode(ident, 3, 5);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c) CHECK(distance(grid.at(r, c), Point{c / 4.0, r / 2.0}) < 1e-15);
  const auto moved = decode(TpsParams::affine(cfg, {5, 7}, Eigen::Matrix2d::Identity()), 3, 5);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c) CHECK(distance(moved.at(r, c), Point{5 + c / 4.0, 7 + r / 2.0}) < 1e-14);
  TpsParams bad = ident;
  bad.t(0, 4) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("decode matches the direct basis sum") {
  CounterRng rng(4);
  for (auto d : {FiducialDistribution::Edge, FiducialDistribution::Center, FiducialDistribution::Cross}) {
    const auto cfg = make_fiducials(d, 8);
    const auto p = random_params(cfg, rng);
    const auto grid = decode(p, 4, 9);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 9; ++c) {
        const Point want = oracle::tps_map(cfg.points(), row(p, 0), row(p, 1), {c / 8.0, r / 3.0});
        CHECK(distance(grid.at(r, c), want) < 1e-10);
      }
  }
}

TEST_CASE("decode is linear in the parameters") {
  CounterRng rng(9);
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  const auto a = random_params(cfg, rng), b = random_params(cfg, rng);
  TpsParams mix = a;
  mix.t = 0.3 * a.t - 1.7 * b.t;
  const auto ga = decode(a, 5, 7), gb = decode(b, 5, 7), gm = decode(mix, 5, 7);
  for (std::size_t i = 0; i < gm.points.size(); ++i) {
    CHECK(distance(gm.points[i], 0.3 * ga.points[i] - 1.7 * gb.points[i]) < 1e-10);
  }
}

TEST_CASE("lattice basis is reused bit-exactly") {
  CounterRng rng(10);
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  const LatticeBasis basis(cfg, 3, 32);
  const Eigen::MatrixXd before = basis.phi();
  (void)basis.decode(random_params(cfg, rng));
  (void)basis.decode(random_params(cfg, rng));
  CHECK((basis.phi().array() == before.array()).all());
  const LatticeBasis again(cfg, 3, 32);
  CHECK((again.phi().array() == before.array()).all());
}

TEST_CASE("decode_boundary layout") {
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  const auto p = TpsParams::affine(cfg, {10, 20}, Eigen::Vector2d(100, 30).asDiagonal());
  const auto b = decode_boundary(p, 32);
  REQUIRE(b.size() == 66);
  const auto idx = boundary_corner_indices(32);
  CHECK(idx == std::array<std::size_t, 4>{0, 31, 33, 64});
  CHECK(distance(b[idx[0]], {10, 20}) < 1e-12);
  CHECK(distance(b[idx[1]], {110, 20}) < 1e-12);
  CHECK(distance(b[idx[2]], {110, 50}) < 1e-12);
  CHECK(distance(b[idx[3]], {10, 50}) < 1e-12);
  CHECK(distance(b[32], {110, 35}) < 1e-12);
  CHECK(distance(b[65], {10, 35}) < 1e-12);
}

TEST_CASE("fit round trip recovers random parameters") {
  CounterRng rng(21);
  for (auto d : {FiducialDistribution::Edge, FiducialDistribution::Center, FiducialDistribution::Cross}) {
    const auto cfg = make_fiducials(d, 8);
    for (int trial = 0; trial < 20; ++trial) {
      const auto truth = random_params(cfg, rng);
      const auto corr = sample(truth, rng, 64);
      const auto f = fit(cfg, corr, {.regularization = 0.0});
      CHECK((f.params.t - truth.t).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(f.max_residual < 1e-8);
    }
  }
}

TEST_CASE("square system interpolates") {
  CounterRng rng(22);
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  std::vector<Correspondence> corr;
  for (int i = 0; i < cfg.dim(); ++i) corr.push_back({{rng.uniform(), rng.uniform()}, {rng.uniform(0, 50), rng.uniform(0, 50)}});
  const auto f = fit(cfg, corr, {.regularization = 0.0});
  CHECK(f.max_residual < 1e-9);
  corr.pop_back();
  CHECK_THROWS_AS(fit(cfg, corr), ConfigError);
}

TEST_CASE("fit rejects singular systems") {
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  std::vector<Correspondence> corr;
  for (int i = 0; i < 30; ++i) corr.push_back({{0.3, 0.6}, {i * 1.0, 2.0}});
  CHECK_THROWS_AS(fit(cfg, corr), SingularFit);
}

TEST_CASE("affine images collapse onto the affine block") {
  CounterRng rng(31);
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix2d a;
    a << rng.uniform(20, 200), rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(20, 200);
    const Point c{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    std::vector<Correspondence> corr;
    for (int i = 0; i < 32; ++i) {
      const double t = i / 31.0;
      for (double v : {0.0, 1.0}) corr.push_back({{t, v}, {c.x + a(0, 0) * t + a(0, 1) * v, c.y + a(1, 0) * t + a(1, 1) * v}});
    }
    const auto f = fit(cfg, corr);
    const auto dec = decompose(f.params);
    CHECK(dec.local.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(dec.affine(0, 0) - c.x) < 1e-8);
    CHECK(std::abs(dec.affine(1, 2) - a(1, 1)) < 1e-8);
  }
}

TEST_CASE("decomposition reproduces decode") {
  CounterRng rng(41);
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_params(cfg, rng, 5.0);
    const Point uv{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)};
    CHECK(distance(decode_point(p, uv), decompose(p).apply(cfg, uv)) < 1e-12);
  }
  TpsParams z = TpsParams::affine(cfg, {1, 2}, Eigen::Matrix2d::Identity() * 3);
  CHECK(decompose(z).local.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fitting is equivariant under similarities") {
  CounterRng rng(51);
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  const auto truth = random_params(cfg, rng, 3.0);
  std::vector<Correspondence> corr;
  for (int i = 0; i < 32; ++i)
    for (double v : {0.0, 0.5, 1.0}) corr.push_back({{i / 31.0, v}, decode_point(truth, {i / 31.0, v}) + Point{rng.normal(0, 2), rng.normal(0, 2)}});
  const double s = 1.7, ang = 0.6;
  const Point shift{40, -25};
  auto q = [&](Point p) { return s * Point{std::cos(ang) * p.x - std::sin(ang) * p.y, std::sin(ang) * p.x + std::cos(ang) * p.y} + shift; };
  std::vector<Correspondence> moved = corr;
  for (auto& c : moved) c.target = q(c.target);
  const auto b0 = decode_boundary(fit(cfg, corr).params);
  const auto b1 = decode_boundary(fit(cfg, moved).params);
  double scale = 0.0;
  for (const auto& p : b1) scale = std::max(scale, norm(p));
  for (std::size_t i = 0; i < b0.size(); ++i) CHECK(distance(q(b0[i]), b1[i]) < 1e-6 * scale);
}

TEST_CASE("rectification grid of a fitted rectangle") {
  const auto cfg = make_fiducials(FiducialDistribution::Cross, 8);
  std::vector<Correspondence> corr;
  for (int i = 0; i < 32; ++i) {
    const double t = i / 31.0;
    corr.push_back({{t, 0}, {12 + 80 * t, 5}});
    corr.push_back({{t, 1}, {12 + 80 * t, 25}});
  }
  const auto g = rectification_grid(fit(cfg, corr).params, 8, 32);
  CHECK(g.rows == 8);
  CHECK(g.cols == 32);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 32; ++c) CHECK(distance(g.at(r, c), Point{12 + 80 * c / 31.0, 5 + 20 * r / 7.0}) < 1e-6);
  const auto unit = rectification_grid(TpsParams::affine(cfg, {0, 0}, Eigen::Matrix2d::Identity()), 2, 2);
  for (const auto& p : unit.points) CHECK((p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1));
}
